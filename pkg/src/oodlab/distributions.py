"""Distribution specs: exact samplers, support membership, region masses.

Every family used by the constructions and experiments is a small
frozen dataclass with three capabilities:

  * sample / sample_many  -- draw points, bit-reproducible given the rng;
  * support_contains      -- closed-set support membership (1e-9 slack on
                             continuous boundaries so sampled points never
                             fall off their own support by a rounding ulp);
  * region_mass           -- exact probability of a structured hypothesis,
                             or None when no closed form is implemented
                             (callers then fall back to Monte Carlo; None
                             is deliberately not an error).

Specs have a canonical JSON encoding (variant tag + numeric fields)
used by the experiment-runner configs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi as chi_dist

from .core import (
    AllSet,
    BallUnion,
    Complement,
    CubeUnion,
    DimensionMismatchError,
    EmptySet,
    FiniteSet,
    Hypothesis,
    IntervalSet,
)

SUPPORT_TOL = 1e-9


# ---------------------------------------------------------------------------
# Spec variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UniformBox:
    """Uniform distribution on the closed box [lo, hi] per axis."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError(f"invalid box bounds lo={lo}, hi={hi}")


@dataclass(frozen=True, eq=False)
class UniformBall:
    """Uniform (by volume) distribution on a closed ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if self.radius <= 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True, eq=False)
class UniformAnnulus:
    """Uniform (by area/volume) distribution on a closed ring
    r_lo <= ||x - center|| <= r_hi."""

    center: np.ndarray
    r_lo: float
    r_hi: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not 0 <= self.r_lo < self.r_hi:
            raise ValueError(f"need 0 <= r_lo < r_hi, got [{self.r_lo}, {self.r_hi}]")


@dataclass(frozen=True, eq=False)
class PointMass:
    """All mass on a single point (float vector or integer)."""

    point: object


@dataclass(frozen=True, eq=False)
class FiniteSupport:
    """Discrete distribution on an explicit finite point list."""

    points: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "probabilities", probs)
        if len(self.points) != len(probs):
            raise ValueError("points and probabilities lengths differ")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities must be >= 0 and sum to 1, got sum {probs.sum()}")


@dataclass(frozen=True)
class IntervalWithGap:
    """(1 - eps) uniform on [0,1] minus the open gap (x, x+eps), plus an
    eps-mass spike on one outside point.

    Because the removed gap has the same length eps as the spike mass,
    the density on the remaining part of [0,1] is exactly 1.
    """

    x: float
    eps_gap: float
    spike_point: float = 3.0

    def __post_init__(self):
        if not (0 < self.eps_gap < 1):
            raise ValueError("eps_gap must be in (0, 1)")
        if not (0 <= self.x <= 1 - self.eps_gap):
            raise ValueError("gap start must satisfy 0 <= x <= 1 - eps_gap")
        if 0 <= self.spike_point <= 1:
            raise ValueError("spike point must lie outside [0, 1]")


@dataclass(frozen=True)
class HeavyBoundaryCircle:
    """2-d unit disk with (1 - lam) of the mass uniform on the boundary
    circle (angle-uniform) and lam uniform on the open interior."""

    lam: float

    def __post_init__(self):
        if not (0 <= self.lam <= 1):
            raise ValueError("lam must be in [0, 1]")


@dataclass(frozen=True, eq=False)
class HeavyBoundaryWedgeGap:
    """Heavy-boundary disk distribution conditioned on the larger region
    cut off by the chord between boundary angles theta and theta + eps,
    with the removed mass parked on a spike point outside the disk.

    The removed mass kappa is the heavy-boundary measure of the smaller
    region: arc mass (1 - lam) * eps / (2 pi) plus interior mass
    lam * (eps - sin eps) / (2 pi).
    """

    theta: float
    eps_angle: float
    lam: float
    spike_point: np.ndarray = field(default_factory=lambda: np.array([2.0, 0.0]))

    def __post_init__(self):
        if not (0 < self.eps_angle < math.pi):
            raise ValueError("eps_angle must be in (0, pi)")
        if not (0 <= self.lam <= 1):
            raise ValueError("lam must be in [0, 1]")
        spike = np.atleast_1d(np.asarray(self.spike_point, dtype=float))
        object.__setattr__(self, "spike_point", spike)
        if np.linalg.norm(spike) <= 1 + SUPPORT_TOL:
            raise ValueError("spike point must lie strictly outside the unit disk")

    @property
    def kappa(self) -> float:
        e = self.eps_angle
        return (1 - self.lam) * e / (2 * math.pi) + self.lam * (e - math.sin(e)) / (2 * math.pi)

    def _chord(self):
        p1 = np.array([math.cos(self.theta), math.sin(self.theta)])
        p2 = np.array([math.cos(self.theta + self.eps_angle), math.sin(self.theta + self.eps_angle)])
        mid = np.array([math.cos(self.theta + self.eps_angle / 2),
                        math.sin(self.theta + self.eps_angle / 2)])
        normal = np.array([p2[1] - p1[1], -(p2[0] - p1[0])])
        if normal @ (mid - p1) < 0:
            normal = -normal  # orient toward the smaller (arc) side
        return p1, normal

    def in_smaller_region(self, pts: np.ndarray) -> np.ndarray:
        """Strictly beyond the chord, on the small-arc side."""
        p1, normal = self._chord()
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        return (pts - p1) @ normal > SUPPORT_TOL


@dataclass(frozen=True)
class NaturalsGeom:
    """Distribution on the naturals with one point m knocked out:
    mass 1/n on each of {1..n} minus {m}, then a geometric tail
    (1/n) * 2^(n - x) for x > n.  The exponent decays so the masses sum
    to one: (n-1)/n + (1/n) * sum_{k>=1} 2^(-k) = 1.
    """

    n: int
    m: int

    def __post_init__(self):
        if not (1 <= self.m <= self.n):
            raise ValueError("need 1 <= m <= n")

    def pmf(self, x: int) -> float:
        if x == self.m or x < 1:
            return 0.0
        if x <= self.n:
            return 1.0 / self.n
        return 2.0 ** (self.n - x) / self.n


@dataclass(frozen=True, eq=False)
class HolderPiecewise1D:
    """Piecewise triangle densities on disjoint 1-d intervals.

    Each interval [a, b] with target mass m carries a symmetric
    triangle density rising from 0 at a to its peak at the midpoint and
    back to 0 at b.  The triangle slope is 4 m / (b - a)^2, which must
    not exceed grad_cap, so the whole density is grad_cap-Lipschitz
    (zero outside, vanishing at interval endpoints).
    """

    intervals: tuple
    masses: np.ndarray
    grad_cap: float

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        masses = np.asarray(self.masses, dtype=float)
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "masses", masses)
        if len(ivs) != len(masses):
            raise ValueError("intervals and masses lengths differ")
        if np.any(masses < 0) or abs(masses.sum() - 1.0) > 1e-9:
            raise ValueError("masses must be >= 0 and sum to 1")
        for a, b in ivs:
            if b <= a:
                raise ValueError(f"empty interval [{a}, {b}]")
        for (a, b), (a2, _) in zip(ivs, ivs[1:]):
            if a2 < b:
                raise ValueError("intervals must be disjoint and sorted")
        for (a, b), m in zip(ivs, masses):
            slope = 4 * m / (b - a) ** 2
            if slope > self.grad_cap + 1e-9:
                raise ValueError(
                    f"triangle on [{a}, {b}] with mass {m} needs slope {slope:.6g} "
                    f"> grad_cap {self.grad_cap}"
                )

    def density(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        for (a, b), m in zip(self.intervals, self.masses):
            w = b - a
            slope = 4 * m / w**2
            inside = (xs >= a) & (xs <= b)
            out = np.where(inside, slope * np.minimum(xs - a, b - xs), out)
        return out

    def interval_cdf(self, a: float, b: float, m: float, x: float) -> float:
        """Mass of one triangle below x (0 at a, m at b)."""
        if m == 0 or x <= a:
            return 0.0
        if x >= b:
            return m
        w = b - a
        t = x - a
        if t <= w / 2:
            return m * 2 * (t / w) ** 2
        return m * (1 - 2 * ((b - x) / w) ** 2)

    def cdf(self, x: float) -> float:
        return sum(self.interval_cdf(a, b, m, x)
                   for (a, b), m in zip(self.intervals, self.masses))


@dataclass(frozen=True, eq=False)
class TruncatedGaussian:
    """Isotropic Gaussian conditioned on the closed ball of a given radius.

    Practically indistinguishable from the untruncated Gaussian once
    radius covers a few sigma, but with a genuinely bounded support, so
    far-separation assumptions can hold exactly.
    """

    mean: np.ndarray
    sigma: float
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        if self.sigma <= 0 or self.radius <= 0:
            raise ValueError("sigma and radius must be positive")


@dataclass(frozen=True, eq=False)
class UniformHullBlob:
    """Uniform distribution on the dilation of a 2-d convex hull:
    all x within the given distance of conv(points).

    The support is convex by construction (Minkowski sum of a convex
    polygon and a disk), which is what makes it the natural "glue"
    component for convex-support constructions.  2-d only.
    """

    points: np.ndarray
    dilation: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if self.dilation <= 0:
            raise ValueError("dilation must be positive")
        from .geometry import convex_hull_2d

        object.__setattr__(self, "_chain", convex_hull_2d(pts))

    @property
    def chain(self) -> np.ndarray:
        return self._chain


@dataclass(frozen=True, eq=False)
class Mixture:
    """Finite mixture of specs over one instance space."""

    components: tuple  # of (weight, spec)

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        object.__setattr__(self, "components", comps)
        total = sum(w for w, _ in comps)
        if any(w < 0 for w, _ in comps) or abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must be >= 0 and sum to 1, got {total}")
        dims = {dimension_of(s) for _, s in comps}
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixture components over different spaces: {dims}")


DistributionSpec = (
    UniformBox | UniformBall | UniformAnnulus | PointMass | FiniteSupport | IntervalWithGap
    | HeavyBoundaryCircle | HeavyBoundaryWedgeGap | NaturalsGeom
    | HolderPiecewise1D | TruncatedGaussian | UniformHullBlob | Mixture
)


def dimension_of(spec) -> int:
    """Instance-space dimension of a spec; 0 marks discrete integer spaces."""
    if isinstance(spec, UniformBox):
        return len(spec.lo)
    if isinstance(spec, (UniformBall, UniformAnnulus)):
        return len(spec.center)
    if isinstance(spec, TruncatedGaussian):
        return len(spec.mean)
    if isinstance(spec, PointMass):
        if isinstance(spec.point, (int, np.integer)):
            return 0
        return len(np.atleast_1d(np.asarray(spec.point, dtype=float)))
    if isinstance(spec, FiniteSupport):
        p = spec.points[0]
        if isinstance(p, (int, np.integer)):
            return 0
        return len(np.atleast_1d(np.asarray(p, dtype=float)))
    if isinstance(spec, (IntervalWithGap, HolderPiecewise1D)):
        return 1
    if isinstance(spec, (HeavyBoundaryCircle, HeavyBoundaryWedgeGap, UniformHullBlob)):
        return 2
    if isinstance(spec, NaturalsGeom):
        return 0
    if isinstance(spec, Mixture):
        return dimension_of(spec.components[0][1])
    raise TypeError(f"not a distribution spec: {spec!r}")


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_many(spec, rng: np.random.Generator, m: int):
    """Draw m points; (m, n) float array, or (m,) int array for discrete specs."""
    if isinstance(spec, UniformBox):
        return rng.uniform(spec.lo, spec.hi, size=(m, len(spec.lo)))

    if isinstance(spec, UniformBall):
        n = len(spec.center)
        raw = rng.normal(size=(m, n))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radii = spec.radius * rng.random(m) ** (1.0 / n)
        return spec.center + raw / norms * radii[:, None]

    if isinstance(spec, UniformAnnulus):
        n = len(spec.center)
        raw = rng.normal(size=(m, n))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radii = (spec.r_lo**n + (spec.r_hi**n - spec.r_lo**n) * rng.random(m)) ** (1.0 / n)
        return spec.center + raw / norms * radii[:, None]

    if isinstance(spec, PointMass):
        if isinstance(spec.point, (int, np.integer)):
            return np.full(m, int(spec.point), dtype=np.int64)
        p = np.atleast_1d(np.asarray(spec.point, dtype=float))
        return np.tile(p, (m, 1))

    if isinstance(spec, FiniteSupport):
        idx = rng.choice(len(spec.points), size=m, p=spec.probabilities)
        if isinstance(spec.points[0], (int, np.integer)):
            return np.array([int(spec.points[i]) for i in idx], dtype=np.int64)
        pts = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p in spec.points])
        return pts[idx]

    if isinstance(spec, IntervalWithGap):
        u = rng.random(m)
        w = rng.random(m) * (1 - spec.eps_gap)
        pos = np.where(w <= spec.x, w, w + spec.eps_gap)
        return np.where(u < spec.eps_gap, spec.spike_point, pos).reshape(m, 1)

    if isinstance(spec, HeavyBoundaryCircle):
        theta = rng.uniform(0, 2 * math.pi, m)
        u = rng.random(m)
        r_interior = np.sqrt(rng.random(m))
        r = np.where(u < spec.lam, r_interior, 1.0)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    if isinstance(spec, HeavyBoundaryWedgeGap):
        return _sample_wedge(spec, rng, m)

    if isinstance(spec, NaturalsGeom):
        u = rng.random(m)
        # Uniform part over {1..n} minus {m}: skip the knocked-out point.
        k = rng.integers(0, spec.n - 1, size=m) if spec.n > 1 else np.zeros(m, dtype=np.int64)
        uniform_val = np.where(k + 1 < spec.m, k + 1, k + 2)
        tail_val = spec.n + rng.geometric(0.5, size=m)
        body = u < (spec.n - 1) / spec.n
        return np.where(body, uniform_val, tail_val).astype(np.int64)

    if isinstance(spec, HolderPiecewise1D):
        comp = rng.choice(len(spec.masses), size=m, p=spec.masses)
        u = rng.random(m)
        out = np.empty(m)
        for i, (a, b) in enumerate(spec.intervals):
            sel = comp == i
            if not sel.any():
                continue
            w = b - a
            ui = u[sel]
            t = np.where(ui <= 0.5, w * np.sqrt(ui / 2), w - w * np.sqrt((1 - ui) / 2))
            out[sel] = a + t
        return out.reshape(m, 1)

    if isinstance(spec, TruncatedGaussian):
        n = len(spec.mean)
        out = np.empty((m, n))
        have = 0
        while have < m:
            want = m - have
            batch = rng.normal(scale=spec.sigma, size=(max(want + 16, int(1.1 * want)), n))
            keep = batch[np.linalg.norm(batch, axis=1) <= spec.radius][:want]
            out[have:have + len(keep)] = spec.mean + keep
            have += len(keep)
        return out

    if isinstance(spec, UniformHullBlob):
        from .geometry import dist_to_hull_2d

        lo = spec.points.min(axis=0) - spec.dilation
        hi = spec.points.max(axis=0) + spec.dilation
        out = np.empty((m, 2))
        have = 0
        while have < m:
            want = m - have
            batch = rng.uniform(lo, hi, size=(max(want + 16, 2 * want), 2))
            keep = batch[dist_to_hull_2d(spec.chain, batch) <= spec.dilation][:want]
            out[have:have + len(keep)] = keep
            have += len(keep)
        return out

    if isinstance(spec, Mixture):
        weights = np.array([w for w, _ in spec.components])
        comp = rng.choice(len(spec.components), size=m, p=weights)
        discrete = dimension_of(spec) == 0
        out = (np.empty(m, dtype=np.int64) if discrete
               else np.empty((m, dimension_of(spec))))
        for i, (_, sub) in enumerate(spec.components):
            sel = comp == i
            if sel.any():
                out[sel] = sample_many(sub, rng, int(sel.sum()))
        return out

    raise TypeError(f"not a distribution spec: {spec!r}")


def _sample_wedge(spec: HeavyBoundaryWedgeGap, rng, m: int) -> np.ndarray:
    base = HeavyBoundaryCircle(spec.lam)
    spike = rng.random(m) < spec.kappa
    out = np.tile(spec.spike_point, (m, 1))
    need = int((~spike).sum())
    acc: list[np.ndarray] = []
    got = 0
    while got < need:
        batch = sample_many(base, rng, max(need - got + 16, int(1.2 * (need - got))))
        keep = batch[~spec.in_smaller_region(batch)][: need - got]
        acc.append(keep)
        got += len(keep)
    if need:
        out[~spike] = np.vstack(acc)
    return out


def sample(spec, rng: np.random.Generator):
    """Draw one point from the spec's exact law."""
    got = sample_many(spec, rng, 1)
    if got.ndim == 1:
        return int(got[0])
    return got[0]


# ---------------------------------------------------------------------------
# Support membership
# ---------------------------------------------------------------------------

def _as_vec(p, n):
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.shape[0] != n:
        raise DimensionMismatchError(f"expected {n}-d point, got shape {arr.shape}")
    return arr


def support_contains(spec, p) -> bool:
    """Exact membership of p in the (closed) support of the spec."""
    if isinstance(spec, UniformBox):
        v = _as_vec(p, len(spec.lo))
        return bool(np.all(v >= spec.lo - SUPPORT_TOL) and np.all(v <= spec.hi + SUPPORT_TOL))

    if isinstance(spec, UniformBall):
        v = _as_vec(p, len(spec.center))
        return float(np.linalg.norm(v - spec.center)) <= spec.radius + SUPPORT_TOL

    if isinstance(spec, UniformAnnulus):
        v = _as_vec(p, len(spec.center))
        r = float(np.linalg.norm(v - spec.center))
        return spec.r_lo - SUPPORT_TOL <= r <= spec.r_hi + SUPPORT_TOL

    if isinstance(spec, PointMass):
        if isinstance(spec.point, (int, np.integer)):
            return isinstance(p, (int, np.integer)) and int(p) == int(spec.point)
        target = np.atleast_1d(np.asarray(spec.point, dtype=float))
        v = _as_vec(p, len(target))
        return bool(np.all(np.abs(v - target) <= SUPPORT_TOL))

    if isinstance(spec, FiniteSupport):
        for q, prob in zip(spec.points, spec.probabilities):
            if prob <= 0:
                continue
            if isinstance(q, (int, np.integer)):
                if isinstance(p, (int, np.integer)) and int(p) == int(q):
                    return True
            else:
                qv = np.atleast_1d(np.asarray(q, dtype=float))
                if np.all(np.abs(_as_vec(p, len(qv)) - qv) <= SUPPORT_TOL):
                    return True
        return False

    if isinstance(spec, IntervalWithGap):
        x = float(np.asarray(p, dtype=float).reshape(()))
        if abs(x - spec.spike_point) <= SUPPORT_TOL:
            return True
        if not (-SUPPORT_TOL <= x <= 1 + SUPPORT_TOL):
            return False
        return not (spec.x + SUPPORT_TOL < x < spec.x + spec.eps_gap - SUPPORT_TOL)

    if isinstance(spec, HeavyBoundaryCircle):
        v = _as_vec(p, 2)
        r = float(np.linalg.norm(v))
        if spec.lam > 0:
            return r <= 1 + SUPPORT_TOL
        return abs(r - 1) <= SUPPORT_TOL

    if isinstance(spec, HeavyBoundaryWedgeGap):
        v = _as_vec(p, 2)
        if np.all(np.abs(v - spec.spike_point) <= SUPPORT_TOL):
            return True
        if float(np.linalg.norm(v)) > 1 + SUPPORT_TOL:
            return False
        return not bool(spec.in_smaller_region(v.reshape(1, 2))[0])

    if isinstance(spec, NaturalsGeom):
        return isinstance(p, (int, np.integer)) and int(p) >= 1 and int(p) != spec.m

    if isinstance(spec, HolderPiecewise1D):
        x = float(np.asarray(p, dtype=float).reshape(()))
        return any(
            m > 0 and a - SUPPORT_TOL <= x <= b + SUPPORT_TOL
            for (a, b), m in zip(spec.intervals, spec.masses)
        )

    if isinstance(spec, TruncatedGaussian):
        v = _as_vec(p, len(spec.mean))
        return float(np.linalg.norm(v - spec.mean)) <= spec.radius + SUPPORT_TOL

    if isinstance(spec, UniformHullBlob):
        from .geometry import dist_to_hull_2d

        v = _as_vec(p, 2)
        return float(dist_to_hull_2d(spec.chain, v.reshape(1, 2))[0]) \
            <= spec.dilation + SUPPORT_TOL

    if isinstance(spec, Mixture):
        return any(w > 0 and support_contains(s, p) for w, s in spec.components)

    raise TypeError(f"not a distribution spec: {spec!r}")


# ---------------------------------------------------------------------------
# Exact region masses
# ---------------------------------------------------------------------------

def _interval_view(region) -> IntervalSet | None:
    """Normalize 1-d structured regions to an IntervalSet, else None."""
    if isinstance(region, IntervalSet):
        return region
    if isinstance(region, BallUnion) and region.dimension == 1:
        return IntervalSet([(c[0] - region.radius, c[0] + region.radius)
                            for c in region.centers])
    if isinstance(region, CubeUnion) and region.dimension == 1:
        grid = region.grid
        return IntervalSet([
            (grid.anchor[0] + i[0] * grid.side, grid.anchor[0] + (i[0] + 1) * grid.side)
            for i in region.indices
        ])
    return None


def _mass_on_intervals_uniform01_minus_gap(spec: IntervalWithGap, ivs: IntervalSet) -> float:
    support = IntervalSet([(0.0, spec.x), (spec.x + spec.eps_gap, 1.0)])
    total = 0.0
    for a, b in ivs.intervals:
        for s0, s1 in support.intervals:
            lo, hi = max(a, s0), min(b, s1)
            if hi > lo:
                total += hi - lo  # density is exactly 1 on the support
    return total


def region_mass(spec, region: Hypothesis) -> float | None:
    """Exact probability mass of the region, or None when no closed form
    is implemented for this (spec, shape) pair."""
    if isinstance(region, AllSet):
        return 1.0
    if isinstance(region, EmptySet):
        return 0.0
    if isinstance(region, Complement):
        inner = region_mass(spec, region.inner)
        return None if inner is None else 1.0 - inner

    sdim = dimension_of(spec)
    if region.dimension is not None and sdim != 0 and region.dimension != sdim:
        raise DimensionMismatchError(
            f"region is {region.dimension}-d but distribution is {sdim}-d")

    # Atomic / finite-support specs: evaluate the region pointwise.
    if isinstance(spec, PointMass):
        return float(region(spec.point))
    if isinstance(spec, FiniteSupport):
        return float(sum(prob * region(pt) for pt, prob in
                         zip(spec.points, spec.probabilities)))

    if isinstance(spec, UniformBox):
        if isinstance(region, CubeUnion):
            return _box_mass_cubes(spec, region)
        if sdim == 1:
            ivs = _interval_view(region)
            if ivs is not None:
                lo, hi = spec.lo[0], spec.hi[0]
                covered = sum(max(0.0, min(b, hi) - max(a, lo)) for a, b in ivs.intervals)
                return covered / (hi - lo)
        if isinstance(region, FiniteSet):
            return 0.0
        return None

    if isinstance(spec, UniformBall):
        if isinstance(region, BallUnion) and len(region.centers) == 1 \
                and np.allclose(region.centers[0], spec.center):
            return min(region.radius / spec.radius, 1.0) ** len(spec.center)
        if isinstance(region, FiniteSet):
            return 0.0
        return None

    if isinstance(spec, UniformAnnulus):
        if isinstance(region, BallUnion) and len(region.centers) == 1 \
                and np.allclose(region.centers[0], spec.center):
            n = len(spec.center)
            r = region.radius
            if r <= spec.r_lo:
                return 0.0
            covered = min(r, spec.r_hi) ** n - spec.r_lo**n
            return covered / (spec.r_hi**n - spec.r_lo**n)
        if isinstance(region, FiniteSet):
            return 0.0
        return None

    if isinstance(spec, IntervalWithGap):
        ivs = _interval_view(region)
        if ivs is not None:
            mass = _mass_on_intervals_uniform01_minus_gap(spec, ivs)
            if ivs.contains(spec.spike_point):
                mass += spec.eps_gap
            return float(mass)
        if isinstance(region, FiniteSet):
            return spec.eps_gap * float(region.contains(np.array([spec.spike_point])))
        return None

    if isinstance(spec, HeavyBoundaryCircle):
        if isinstance(region, BallUnion) and len(region.centers) == 1 \
                and np.allclose(region.centers[0], 0.0):
            if region.radius >= 1.0:
                return 1.0
            return spec.lam * region.radius**2
        if isinstance(region, FiniteSet):
            return 0.0
        return None

    if isinstance(spec, HeavyBoundaryWedgeGap):
        if isinstance(region, FiniteSet):
            return spec.kappa * float(region.contains(spec.spike_point))
        return None

    if isinstance(spec, NaturalsGeom):
        if isinstance(region, FiniteSet):
            return float(sum(spec.pmf(int(k)) for k in region.points))
        if isinstance(region, IntervalSet):
            return _naturals_mass_on_intervals(spec, region)
        return None

    if isinstance(spec, HolderPiecewise1D):
        ivs = _interval_view(region)
        if ivs is not None:
            total = 0.0
            for lo, hi in ivs.intervals:
                for (a, b), m in zip(spec.intervals, spec.masses):
                    total += spec.interval_cdf(a, b, m, hi) - spec.interval_cdf(a, b, m, lo)
            return float(total)
        if isinstance(region, FiniteSet):
            return 0.0
        return None

    if isinstance(spec, TruncatedGaussian):
        if isinstance(region, BallUnion) and len(region.centers) == 1 \
                and np.allclose(region.centers[0], spec.mean):
            n = len(spec.mean)
            if region.radius >= spec.radius:
                return 1.0
            z = chi_dist.cdf(region.radius / spec.sigma, n)
            return float(z / chi_dist.cdf(spec.radius / spec.sigma, n))
        if isinstance(region, FiniteSet):
            return 0.0
        return None

    if isinstance(spec, UniformHullBlob):
        return 0.0 if isinstance(region, FiniteSet) else None

    if isinstance(spec, Mixture):
        parts = [region_mass(s, region) for _, s in spec.components]
        if any(v is None for v in parts):
            return None
        return float(sum(w * v for (w, _), v in zip(spec.components, parts)))

    raise TypeError(f"not a distribution spec: {spec!r}")


def _box_mass_cubes(spec: UniformBox, region: CubeUnion) -> float:
    grid = region.grid
    if grid.dimension != len(spec.lo):
        raise DimensionMismatchError("grid and box dimensions differ")
    if not region.indices:
        return 0.0
    idx = np.array(sorted(region.indices), dtype=float)
    cell_lo = grid.anchor + idx * grid.side
    cell_hi = cell_lo + grid.side
    overlap = np.clip(np.minimum(cell_hi, spec.hi) - np.maximum(cell_lo, spec.lo), 0, None)
    vols = overlap.prod(axis=1)
    return float(vols.sum() / np.prod(spec.hi - spec.lo))


def _naturals_mass_on_intervals(spec: NaturalsGeom, ivs: IntervalSet) -> float:
    total = 0.0
    for a, b in ivs.intervals:
        lo = max(1, math.ceil(a - SUPPORT_TOL))
        hi = math.floor(b + SUPPORT_TOL)
        if hi < lo:
            continue
        # Uniform body within {1..n} minus {m}.
        body_lo, body_hi = lo, min(hi, spec.n)
        if body_hi >= body_lo:
            count = body_hi - body_lo + 1
            if body_lo <= spec.m <= body_hi:
                count -= 1
            total += count / spec.n
        # Geometric tail over x > n: sum 2^(n-x)/n for x in [tail_lo, hi].
        tail_lo = max(lo, spec.n + 1)
        if hi >= tail_lo:
            total += (2.0 ** (spec.n - tail_lo + 1) - 2.0 ** (spec.n - hi)) / spec.n
    return float(total)


# ---------------------------------------------------------------------------
# 1-d densities (for the Bayes-floor integral)
# ---------------------------------------------------------------------------

def density_1d(spec, xs: np.ndarray) -> np.ndarray:
    """Pointwise density of an atom-free 1-d spec."""
    xs = np.asarray(xs, dtype=float)
    if isinstance(spec, UniformBox) and len(spec.lo) == 1:
        lo, hi = spec.lo[0], spec.hi[0]
        return np.where((xs >= lo) & (xs <= hi), 1.0 / (hi - lo), 0.0)
    if isinstance(spec, UniformBall) and len(spec.center) == 1:
        lo, hi = spec.center[0] - spec.radius, spec.center[0] + spec.radius
        return np.where((xs >= lo) & (xs <= hi), 1.0 / (hi - lo), 0.0)
    if isinstance(spec, HolderPiecewise1D):
        return spec.density(xs)
    if isinstance(spec, Mixture):
        return sum(w * density_1d(s, xs) for w, s in spec.components)
    raise ValueError(f"no pointwise 1-d density for {type(spec).__name__}")


def density_breakpoints_1d(spec) -> list[float]:
    """Knots where the 1-d density is non-smooth, including support edges."""
    if isinstance(spec, UniformBox) and len(spec.lo) == 1:
        return [float(spec.lo[0]), float(spec.hi[0])]
    if isinstance(spec, UniformBall) and len(spec.center) == 1:
        return [float(spec.center[0] - spec.radius), float(spec.center[0] + spec.radius)]
    if isinstance(spec, HolderPiecewise1D):
        pts = []
        for a, b in spec.intervals:
            pts += [a, (a + b) / 2, b]
        return pts
    if isinstance(spec, Mixture):
        pts = []
        for _, s in spec.components:
            pts += density_breakpoints_1d(s)
        return pts
    raise ValueError(f"no pointwise 1-d density for {type(spec).__name__}")


def support_set(spec) -> frozenset:
    """Explicit support of a finite-support discrete spec."""
    if isinstance(spec, PointMass) and isinstance(spec.point, (int, np.integer)):
        return frozenset([int(spec.point)])
    if isinstance(spec, FiniteSupport):
        out = set()
        for pt, prob in zip(spec.points, spec.probabilities):
            if prob > 0:
                out.add(int(pt) if isinstance(pt, (int, np.integer))
                        else tuple(np.atleast_1d(np.asarray(pt, dtype=float))))
        return frozenset(out)
    if isinstance(spec, Mixture):
        out: set = set()
        for w, s in spec.components:
            if w > 0:
                out |= support_set(s)
        return frozenset(out)
    raise ValueError(f"{type(spec).__name__} does not have an explicit finite support")


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------

def to_json(spec) -> dict:
    """Canonical JSON encoding: variant tag plus numeric fields."""
    if isinstance(spec, UniformBox):
        return {"variant": "uniform_box", "lo": spec.lo.tolist(), "hi": spec.hi.tolist()}
    if isinstance(spec, UniformBall):
        return {"variant": "uniform_ball", "center": spec.center.tolist(),
                "radius": spec.radius}
    if isinstance(spec, UniformAnnulus):
        return {"variant": "uniform_annulus", "center": spec.center.tolist(),
                "r_lo": spec.r_lo, "r_hi": spec.r_hi}
    if isinstance(spec, PointMass):
        if isinstance(spec.point, (int, np.integer)):
            return {"variant": "point_mass", "point": int(spec.point), "discrete": True}
        return {"variant": "point_mass",
                "point": np.atleast_1d(np.asarray(spec.point, dtype=float)).tolist(),
                "discrete": False}
    if isinstance(spec, FiniteSupport):
        pts = [int(p) if isinstance(p, (int, np.integer))
               else np.atleast_1d(np.asarray(p, dtype=float)).tolist()
               for p in spec.points]
        return {"variant": "finite_support", "points": pts,
                "probabilities": spec.probabilities.tolist()}
    if isinstance(spec, IntervalWithGap):
        return {"variant": "interval_with_gap", "x": spec.x, "eps_gap": spec.eps_gap,
                "spike_point": spec.spike_point}
    if isinstance(spec, HeavyBoundaryCircle):
        return {"variant": "heavy_boundary_circle", "lam": spec.lam}
    if isinstance(spec, HeavyBoundaryWedgeGap):
        return {"variant": "heavy_boundary_wedge_gap", "theta": spec.theta,
                "eps_angle": spec.eps_angle, "lam": spec.lam,
                "spike_point": spec.spike_point.tolist()}
    if isinstance(spec, NaturalsGeom):
        return {"variant": "naturals_geom", "n": spec.n, "m": spec.m}
    if isinstance(spec, HolderPiecewise1D):
        return {"variant": "holder_piecewise_1d",
                "intervals": [list(iv) for iv in spec.intervals],
                "masses": spec.masses.tolist(), "grad_cap": spec.grad_cap}
    if isinstance(spec, TruncatedGaussian):
        return {"variant": "truncated_gaussian", "mean": spec.mean.tolist(),
                "sigma": spec.sigma, "radius": spec.radius}
    if isinstance(spec, UniformHullBlob):
        return {"variant": "uniform_hull_blob", "points": spec.points.tolist(),
                "dilation": spec.dilation}
    if isinstance(spec, Mixture):
        return {"variant": "mixture",
                "components": [[w, to_json(s)] for w, s in spec.components]}
    raise TypeError(f"not a distribution spec: {spec!r}")


def from_json(obj: dict):
    variant = obj["variant"]
    if variant == "uniform_box":
        return UniformBox(np.array(obj["lo"]), np.array(obj["hi"]))
    if variant == "uniform_ball":
        return UniformBall(np.array(obj["center"]), obj["radius"])
    if variant == "uniform_annulus":
        return UniformAnnulus(np.array(obj["center"]), obj["r_lo"], obj["r_hi"])
    if variant == "point_mass":
        if obj.get("discrete"):
            return PointMass(int(obj["point"]))
        return PointMass(np.array(obj["point"], dtype=float))
    if variant == "finite_support":
        pts = [p if isinstance(p, int) else np.array(p, dtype=float) for p in obj["points"]]
        return FiniteSupport(tuple(pts), np.array(obj["probabilities"]))
    if variant == "interval_with_gap":
        return IntervalWithGap(obj["x"], obj["eps_gap"], obj["spike_point"])
    if variant == "heavy_boundary_circle":
        return HeavyBoundaryCircle(obj["lam"])
    if variant == "heavy_boundary_wedge_gap":
        return HeavyBoundaryWedgeGap(obj["theta"], obj["eps_angle"], obj["lam"],
                                     np.array(obj["spike_point"]))
    if variant == "naturals_geom":
        return NaturalsGeom(obj["n"], obj["m"])
    if variant == "holder_piecewise_1d":
        return HolderPiecewise1D(tuple(tuple(iv) for iv in obj["intervals"]),
                                 np.array(obj["masses"]), obj["grad_cap"])
    if variant == "truncated_gaussian":
        return TruncatedGaussian(np.array(obj["mean"]), obj["sigma"], obj["radius"])
    if variant == "uniform_hull_blob":
        return UniformHullBlob(np.array(obj["points"]), obj["dilation"])
    if variant == "mixture":
        return Mixture(tuple((w, from_json(s)) for w, s in obj["components"]))
    raise ValueError(f"unknown distribution variant {variant!r}")
