"""Core types: points, hypotheses, domains, learner configuration.

A point is either a 1-d float vector (continuous instance spaces R^n)
or a plain non-negative integer (discrete instance spaces).  The two
representations never mix within one experiment; dimension checks
raise on any attempt.

A hypothesis is a set in the instance space carried as a structured
shape (ball union, cube union, hull, interval set, finite set, boolean
combinations, everything, nothing) together with the membership test
the shape induces.  Structured shapes are what make exact risk
computation against analytic distributions possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry
from .geometry import AxisGrid, cube_of, cubes_of, hull_contains

Point = "np.ndarray | int"


class DimensionMismatchError(ValueError):
    """Objects over different instance spaces were combined."""


def point_dimension(p) -> int | None:
    """Dimension of a point; None marks a discrete (integer) point."""
    if isinstance(p, (int, np.integer)):
        return None
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        return 1
    return int(arr.shape[0])


def as_point_array(points, dim: int) -> np.ndarray:
    """Normalize a sequence of continuous points to an (m, dim) array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.shape[1] != dim:
        raise DimensionMismatchError(f"expected {dim}-d points, got shape {arr.shape}")
    return arr


def _check_dims(a: int | None, b: int | None, what: str) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    if a != b:
        raise DimensionMismatchError(f"{what}: dimensions {a} and {b} differ")
    return a


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------

class Hypothesis:
    """A set in the instance space, evaluated as {0, 1} membership."""

    #: instance-space dimension; None for discrete or dimension-free sets
    dimension: int | None = None

    def contains(self, p) -> bool:
        raise NotImplementedError

    def contains_many(self, points) -> np.ndarray:
        """Vectorized membership over an (m, n) array or a point sequence."""
        return np.array([self.contains(p) for p in points], dtype=bool)

    def __call__(self, p) -> int:
        return int(self.contains(p))


class AllSet(Hypothesis):
    """The whole instance space."""

    def contains(self, p) -> bool:
        return True

    def contains_many(self, points) -> np.ndarray:
        return np.ones(len(points), dtype=bool)

    def __repr__(self):
        return "AllSet()"


class EmptySet(Hypothesis):
    """The empty set."""

    def contains(self, p) -> bool:
        return False

    def contains_many(self, points) -> np.ndarray:
        return np.zeros(len(points), dtype=bool)

    def __repr__(self):
        return "EmptySet()"


class BallUnion(Hypothesis):
    """Union of closed balls of one common radius around given centers.

    Membership is a nearest-neighbor query; with many centers a KD-tree
    answers it, otherwise direct distances.  Both give the same answer:
    min_i ||p - c_i|| <= radius.
    """

    def __init__(self, centers, radius: float):
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        centers = np.asarray(centers, dtype=float)
        if centers.ndim == 0:
            centers = centers.reshape(1, 1)
        elif centers.ndim == 1:
            centers = centers.reshape(-1, 1)
        if len(centers) == 0:
            raise ValueError("BallUnion needs at least one center")
        self.centers = centers
        self.radius = float(radius)
        self.dimension = centers.shape[1]
        self._tree = None
        if len(centers) > 256:
            from scipy.spatial import cKDTree

            self._tree = cKDTree(centers)

    def contains(self, p) -> bool:
        return bool(self.contains_many(np.asarray(p, dtype=float).reshape(1, -1))[0])

    def contains_many(self, points) -> np.ndarray:
        pts = as_point_array(points, self.dimension)
        if self._tree is not None:
            d, _ = self._tree.query(pts, k=1)
            return d <= self.radius
        out = np.zeros(len(pts), dtype=bool)
        block = max(1, int(2e6 // max(len(self.centers), 1)))
        for s in range(0, len(pts), block):
            chunk = pts[s:s + block]
            d2 = ((chunk[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
            out[s:s + block] = d2.min(axis=1) <= self.radius**2
        return out

    def __repr__(self):
        return f"BallUnion({len(self.centers)} centers, radius={self.radius})"


class CubeUnion(Hypothesis):
    """Union of cells of one AxisGrid, held as a set of cell indices."""

    def __init__(self, grid: AxisGrid, indices):
        self.grid = grid
        self.indices = frozenset(tuple(int(i) for i in ix) for ix in indices)
        self.dimension = grid.dimension

    def contains(self, p) -> bool:
        try:
            return cube_of(self.grid, p) in self.indices
        except ValueError:
            return False  # outside the grid box means outside every cell

    def contains_many(self, points) -> np.ndarray:
        pts = as_point_array(points, self.dimension)
        rel = (pts - self.grid.anchor) / self.grid.side
        in_box = np.all((rel >= 0) & (rel <= self.grid.cells_per_axis), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if in_box.any():
            idx = np.minimum(np.floor(rel[in_box]).astype(int), self.grid.cells_per_axis - 1)
            out[in_box] = np.fromiter(
                (tuple(row) in self.indices for row in idx), dtype=bool, count=len(idx)
            )
        return out

    def __repr__(self):
        return f"CubeUnion({len(self.indices)} of {self.grid.cube_count} cells)"


class ConvexHullSet(Hypothesis):
    """Closed convex hull of a vertex list.

    Membership is linear feasibility over the vertices.  In two
    dimensions an extreme-point chain is precomputed so that batch
    evaluation is a few half-plane tests per point; the chain realizes
    the same closed hull (cross-checked in the test suite against the
    feasibility route).
    """

    def __init__(self, vertices, tol: float = geometry.DEFAULT_HULL_TOL):
        V = np.asarray(vertices, dtype=float)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        if len(V) == 0:
            raise ValueError("ConvexHullSet needs at least one vertex")
        self.vertices = V
        self.tol = tol
        self.dimension = V.shape[1]
        self._chain = geometry.convex_hull_2d(V) if self.dimension == 2 else None

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float).reshape(self.dimension)
        if self._chain is not None:
            return bool(geometry.points_in_hull_2d(self._chain, p.reshape(1, 2), self.tol)[0])
        return hull_contains(self.vertices, p, self.tol)

    def contains_many(self, points) -> np.ndarray:
        pts = as_point_array(points, self.dimension)
        if self._chain is not None:
            return geometry.points_in_hull_2d(self._chain, pts, self.tol)
        # Bounding-box prefilter, then one feasibility solve per survivor.
        lo = self.vertices.min(axis=0) - self.tol
        hi = self.vertices.max(axis=0) + self.tol
        maybe = np.all((pts >= lo) & (pts <= hi), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        for i in np.nonzero(maybe)[0]:
            out[i] = hull_contains(self.vertices, pts[i], self.tol)
        return out

    def __repr__(self):
        return f"ConvexHullSet({len(self.vertices)} vertices, dim={self.dimension})"


class FiniteSet(Hypothesis):
    """A finite set of points (discrete integers or exact float tuples)."""

    def __init__(self, points):
        keys = set()
        dim = None
        for p in points:
            d = point_dimension(p)
            dim = _check_dims(dim, d, "FiniteSet")
            keys.add(self._key(p))
        self.points = frozenset(keys)
        self.dimension = dim

    @staticmethod
    def _key(p):
        if isinstance(p, (int, np.integer)):
            return int(p)
        arr = np.atleast_1d(np.asarray(p, dtype=float))
        return tuple(float(x) for x in arr)

    def contains(self, p) -> bool:
        return self._key(p) in self.points

    def __repr__(self):
        return f"FiniteSet({len(self.points)} points)"


class IntervalSet(Hypothesis):
    """Finite union of closed 1-d intervals, kept sorted and disjoint."""

    dimension = 1

    def __init__(self, intervals):
        ivs = sorted((float(a), float(b)) for a, b in intervals if a <= b)
        merged: list[tuple[float, float]] = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        self.intervals = tuple(merged)

    def contains(self, p) -> bool:
        x = float(np.asarray(p, dtype=float).reshape(()))
        return any(a <= x <= b for a, b in self.intervals)

    def contains_many(self, points) -> np.ndarray:
        xs = np.asarray(points, dtype=float).reshape(-1)
        out = np.zeros(len(xs), dtype=bool)
        for a, b in self.intervals:
            out |= (xs >= a) & (xs <= b)
        return out

    def total_length(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def __repr__(self):
        return f"IntervalSet({list(self.intervals)})"


class Complement(Hypothesis):
    """Set complement of a wrapped hypothesis."""

    def __init__(self, inner: Hypothesis):
        self.inner = inner
        self.dimension = inner.dimension

    def contains(self, p) -> bool:
        return not self.inner.contains(p)

    def contains_many(self, points) -> np.ndarray:
        return ~self.inner.contains_many(points)

    def __repr__(self):
        return f"Complement({self.inner!r})"


class UnionSet(Hypothesis):
    def __init__(self, parts: Sequence[Hypothesis]):
        if not parts:
            raise ValueError("UnionSet needs at least one part")
        dim = None
        for h in parts:
            dim = _check_dims(dim, h.dimension, "union")
        self.parts = list(parts)
        self.dimension = dim

    def contains(self, p) -> bool:
        return any(h.contains(p) for h in self.parts)

    def contains_many(self, points) -> np.ndarray:
        out = self.parts[0].contains_many(points)
        for h in self.parts[1:]:
            out = out | h.contains_many(points)
        return out

    def __repr__(self):
        return f"UnionSet({self.parts!r})"


class IntersectionSet(Hypothesis):
    def __init__(self, parts: Sequence[Hypothesis]):
        if not parts:
            raise ValueError("IntersectionSet needs at least one part")
        dim = None
        for h in parts:
            dim = _check_dims(dim, h.dimension, "intersection")
        self.parts = list(parts)
        self.dimension = dim

    def contains(self, p) -> bool:
        return all(h.contains(p) for h in self.parts)

    def contains_many(self, points) -> np.ndarray:
        out = self.parts[0].contains_many(points)
        for h in self.parts[1:]:
            out = out & h.contains_many(points)
        return out

    def __repr__(self):
        return f"IntersectionSet({self.parts!r})"


def _intersect_interval_sets(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    out = []
    for a0, a1 in a.intervals:
        for b0, b1 in b.intervals:
            lo, hi = max(a0, b0), min(a1, b1)
            if lo <= hi:
                out.append((lo, hi))
    return IntervalSet(out)


def combine(op_kind: str, hs: Sequence[Hypothesis]) -> Hypothesis:
    """Pointwise boolean combination of hypotheses.

    Structured shapes are preserved where a closed form exists:
    interval sets combine to interval sets, ball unions of equal radius
    merge, cube unions over the same grid merge, and double complements
    unwrap.  Everything else falls back to generic union/intersection
    wrappers whose membership is the pointwise combination.
    """
    hs = list(hs)
    if not hs:
        raise ValueError("combine requires a non-empty hypothesis list")
    dim = None
    for h in hs:
        dim = _check_dims(dim, h.dimension, "combine")

    if op_kind == "complement":
        if len(hs) != 1:
            raise ValueError("complement takes exactly one hypothesis")
        h = hs[0]
        if isinstance(h, AllSet):
            return EmptySet()
        if isinstance(h, EmptySet):
            return AllSet()
        if isinstance(h, Complement):
            return h.inner
        return Complement(h)

    if op_kind == "union":
        if any(isinstance(h, AllSet) for h in hs):
            return AllSet()
        hs = [h for h in hs if not isinstance(h, EmptySet)] or [EmptySet()]
        if len(hs) == 1:
            return hs[0]
        if all(isinstance(h, IntervalSet) for h in hs):
            return IntervalSet([iv for h in hs for iv in h.intervals])
        if all(isinstance(h, BallUnion) for h in hs):
            radii = {h.radius for h in hs}
            if len(radii) == 1:
                return BallUnion(np.vstack([h.centers for h in hs]), radii.pop())
        if all(isinstance(h, CubeUnion) for h in hs):
            grids = {id(h.grid) for h in hs}
            if len(grids) == 1 or all(h.grid == hs[0].grid for h in hs):
                return CubeUnion(hs[0].grid, frozenset().union(*(h.indices for h in hs)))
        if all(isinstance(h, FiniteSet) for h in hs):
            return _finite_from_keys(frozenset().union(*(h.points for h in hs)), dim)
        return UnionSet(hs)

    if op_kind == "intersection":
        if any(isinstance(h, EmptySet) for h in hs):
            return EmptySet()
        hs = [h for h in hs if not isinstance(h, AllSet)] or [AllSet()]
        if len(hs) == 1:
            return hs[0]
        if all(isinstance(h, IntervalSet) for h in hs):
            acc = hs[0]
            for h in hs[1:]:
                acc = _intersect_interval_sets(acc, h)
            return acc
        if all(isinstance(h, CubeUnion) for h in hs) and all(h.grid == hs[0].grid for h in hs):
            return CubeUnion(hs[0].grid, frozenset.intersection(*(h.indices for h in hs)))
        if all(isinstance(h, FiniteSet) for h in hs):
            return _finite_from_keys(frozenset.intersection(*(h.points for h in hs)), dim)
        return IntersectionSet(hs)

    raise ValueError(f"unknown op_kind {op_kind!r}")


def _finite_from_keys(keys, dim) -> FiniteSet:
    fs = FiniteSet([])
    fs.points = frozenset(keys)
    fs.dimension = dim
    return fs


# ---------------------------------------------------------------------------
# Domains, configuration, samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """A pair of distributions over one instance space.

    id_dist generates the training oracle; ood_dist only ever appears
    at test time.  Both are distribution specs from the distributions
    module (held untyped here to keep this module dependency-free).
    """

    id_dist: object
    ood_dist: object
    dimension: int

    def __post_init__(self):
        if self.dimension < 0:
            raise ValueError("dimension must be non-negative (0 marks discrete spaces)")


@dataclass(frozen=True)
class LearnerConfig:
    """Accuracy/confidence targets plus the run seed.

    epsilon and delta live in (0, 1/2); alpha is the mixture weight of
    the novel distribution at test time.  The seed fully determines a
    run.
    """

    epsilon: float
    delta: float
    alpha: float
    seed: int

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must be in (0, 1/2), got {self.epsilon}")
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must be in (0, 1/2), got {self.delta}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class LabeledSample:
    """A test-time point with its pseudolabel (1 = generated in-distribution)."""

    point: object
    pseudolabel: int

    def __post_init__(self):
        if self.pseudolabel not in (0, 1):
            raise ValueError("pseudolabel must be 0 or 1")


# A learner maps (fresh-sample callable, epsilon, delta, rng) to a hypothesis.
Learner = Callable[[Callable[[], object], float, float, np.random.Generator], Hypothesis]


def mode_iii_wrap(inner: Learner, cfg: LearnerConfig) -> Learner:
    """Make a fixed-mixture-weight learner safe for every mixture weight.

    If the inner learner guarantees mixed risk at most eps' at weight
    alpha, then running it at eps' = eps * min(alpha, 1 - alpha) forces
    both the ID and the OOD risk below eps, because

        (1 - alpha) R_in + alpha R_out <= eps * min(alpha, 1 - alpha)

    bounds each term by eps.  Both risks below eps bounds the mixed
    risk by eps simultaneously for every mixture weight in [0, 1].
    (Dividing by the min instead of multiplying would not give the
    implication, so the multiplicative target is used.)
    """
    shrink = min(cfg.alpha, 1 - cfg.alpha)

    def wrapped(draw, epsilon: float, delta: float, rng) -> Hypothesis:
        return inner(draw, epsilon * shrink, delta, rng)

    return wrapped


def inner_target_epsilon(epsilon: float, alpha: float) -> float:
    """The shrunk risk target handed to the wrapped learner."""
    return epsilon * min(alpha, 1 - alpha)
