"""oodlab: a desk-scale laboratory for when OOD detection is learnable.

Constructive learners with their sample-complexity schedules,
adversarial lower-bound families with a game runner, and exact /
Monte Carlo risk machinery to check (epsilon, delta) guarantees.
"""

from . import adversarial, distributions, geometry, learners, risk, vc
from .core import (
    AllSet,
    BallUnion,
    Complement,
    ConvexHullSet,
    CubeUnion,
    Domain,
    EmptySet,
    FiniteSet,
    Hypothesis,
    IntervalSet,
    LabeledSample,
    LearnerConfig,
    combine,
    mode_iii_wrap,
)

__version__ = "0.1.0"

__all__ = [
    "adversarial", "distributions", "geometry", "learners", "risk", "vc",
    "AllSet", "BallUnion", "Complement", "ConvexHullSet", "CubeUnion",
    "Domain", "EmptySet", "FiniteSet", "Hypothesis", "IntervalSet",
    "LabeledSample", "LearnerConfig", "combine", "mode_iii_wrap",
    "__version__",
]
