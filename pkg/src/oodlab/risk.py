"""Risk evaluation: exact where a closed form exists, Monte Carlo otherwise.

The ID risk of a hypothesis h is the probability that an ID draw falls
outside h; the OOD risk is the probability that an OOD draw falls
inside h.  At mixture weight alpha the mixed risk is their convex
combination (1 - alpha) R_in + alpha R_out, and the estimator keeps
that identity exactly by estimating the two components separately.

Monte Carlo estimates carry a Hoeffding half-width at fixed confidence
0.999: ci = sqrt(ln(2 / 0.001) / (2 m)).  Callers needing a tighter
interval raise m.  Chunked accumulation uses math.fsum, so reorderings
agree to ~1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from .core import Domain, Hypothesis

HOEFFDING_CONFIDENCE = 0.999
DEFAULT_MC_SAMPLES = 20_000


class ExactUnavailableError(ValueError):
    """Exact-only evaluation was requested but no closed form exists."""


def hoeffding_half_width(m: int) -> float:
    """Two-sided Hoeffding bound half-width at the module confidence."""
    if m <= 0:
        raise ValueError("sample count must be positive")
    return math.sqrt(math.log(2.0 / (1.0 - HOEFFDING_CONFIDENCE)) / (2.0 * m))


@dataclass(frozen=True)
class RiskEstimate:
    """A risk value with its provenance.

    kind "exact" has ci_half_width 0 and m 0; kind "monte_carlo"
    carries the Hoeffding half-width for its sample count.
    """

    kind: str
    value: float
    ci_half_width: float
    m: int

    def __post_init__(self):
        if self.kind not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown estimate kind {self.kind!r}")
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"risk must be in [0, 1], got {self.value}")


def _exact_component(h: Hypothesis, spec, which: str) -> float | None:
    mass = dist.region_mass(spec, h)
    if mass is None:
        return None
    return 1.0 - mass if which == "id" else mass


def _mc_component(h: Hypothesis, spec, which: str, m: int,
                  rng: np.random.Generator) -> float:
    pts = dist.sample_many(spec, rng, m)
    # Chunked, compensated accumulation: order-independent to ~1e-12.
    errs = []
    block = 100_000
    if pts.ndim == 1:  # discrete points
        seq = pts
        for s in range(0, m, block):
            chunk = seq[s:s + block]
            inside = np.fromiter((h.contains(int(x)) for x in chunk), dtype=bool,
                                 count=len(chunk))
            errs.append(float(np.count_nonzero(~inside if which == "id" else inside)))
    else:
        for s in range(0, m, block):
            inside = h.contains_many(pts[s:s + block])
            errs.append(float(np.count_nonzero(~inside if which == "id" else inside)))
    return math.fsum(errs) / m


def _component(h: Hypothesis, spec, which: str, mode: str, m: int,
               rng: np.random.Generator | None) -> RiskEstimate:
    if mode in ("exact", "exact_if_possible"):
        value = _exact_component(h, spec, which)
        if value is not None:
            return RiskEstimate(kind="exact", value=float(np.clip(value, 0, 1)),
                                ci_half_width=0.0, m=0)
        if mode == "exact":
            raise ExactUnavailableError(
                f"no closed-form {which} risk for {type(spec).__name__} "
                f"against {type(h).__name__}"
            )
    if m <= 0:
        raise ValueError("monte_carlo mode requires a positive sample count")
    if rng is None:
        raise ValueError("monte_carlo mode requires an rng")
    value = _mc_component(h, spec, which, m, rng)
    return RiskEstimate(kind="monte_carlo", value=value,
                        ci_half_width=hoeffding_half_width(m), m=m)


def risk(h: Hypothesis, d: Domain, which: str = "mixed", alpha: float = 0.5,
         mode: str = "exact_if_possible", m: int = DEFAULT_MC_SAMPLES,
         rng: np.random.Generator | None = None) -> RiskEstimate:
    """Evaluate a risk component or the alpha-mixture.

    which is "id", "ood", or "mixed"; mode is "exact" (raise when no
    closed form), "exact_if_possible" (fall back to Monte Carlo with m
    samples), or "monte_carlo".  The mixed value is always the exact
    convex combination of the two component estimates, with the
    conservative half-width (1 - alpha) ci_id + alpha ci_ood.
    """
    if which == "id":
        return _component(h, d.id_dist, "id", mode, m, rng)
    if which == "ood":
        return _component(h, d.ood_dist, "ood", mode, m, rng)
    if which != "mixed":
        raise ValueError(f"unknown risk selector {which!r}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    rid = _component(h, d.id_dist, "id", mode, m, rng)
    rood = _component(h, d.ood_dist, "ood", mode, m, rng)
    value = (1 - alpha) * rid.value + alpha * rood.value
    ci = (1 - alpha) * rid.ci_half_width + alpha * rood.ci_half_width
    kind = "exact" if rid.kind == rood.kind == "exact" else "monte_carlo"
    return RiskEstimate(kind=kind, value=value, ci_half_width=ci,
                        m=max(rid.m, rood.m))


def bayes_floor_1d(f_in, f_out, alpha: float, step: float = 1e-4) -> float:
    """Unavoidable mixed risk for overlapping 1-d densities.

    Integrates min((1 - alpha) f_in, alpha f_out) over the union of the
    effective supports with composite Simpson panels.  The integration
    range is split at every density breakpoint of either spec so each
    panel sees a smooth (piecewise-linear) integrand; the only
    remaining kinks are the min crossings, whose Simpson error is
    O(step^2).  Every hypothesis's mixed risk is at least this value.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if step <= 0:
        raise ValueError("step must be positive")
    knots = sorted(set(dist.density_breakpoints_1d(f_in))
                   | set(dist.density_breakpoints_1d(f_out)))
    if len(knots) < 2:
        return 0.0

    def integrand(xs):
        return np.minimum((1 - alpha) * dist.density_1d(f_in, xs),
                          alpha * dist.density_1d(f_out, xs))

    pieces = []
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        panels = max(2, math.ceil((b - a) / step))
        panels += panels % 2  # Simpson needs an even panel count
        xs = np.linspace(a, b, panels + 1)
        # Sample the two piece endpoints from strictly inside the piece, so
        # a support boundary sitting exactly on a knot contributes its
        # one-sided limit for this piece, not the neighbouring piece's value.
        nudge = (b - a) * 1e-12
        xs[0] += nudge
        xs[-1] -= nudge
        ys = integrand(xs)
        hstep = (b - a) / panels
        w = np.ones(panels + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        pieces.append(float(hstep / 3.0 * (w @ ys)))
    return math.fsum(pieces)
