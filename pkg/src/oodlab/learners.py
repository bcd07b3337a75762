"""Constructive OOD-detection learners.

Each learner is split into a pure *plan* (sample sizes and geometric
parameters computed from the accuracy targets) and a pure *fit*
(samples in, hypothesis out).  Natural logarithms throughout.

The catalogue:

  * far_ood_*        -- union of closed balls of the known separation
                        radius tau around the samples; zero OOD risk is
                        certain whenever the supports are tau-far.
  * grid_occupancy_* -- cube grid over a bounding ball, keep the
                        occupied cells; handles OOD mass that thins out
                        near the ID support at a known rate g.
  * density_grid_*   -- same grid, but keep only cells whose sample
                        count clears a threshold; handles ID mass that
                        thins out near the OOD support.
  * nonuniform_fit   -- radius-estimation wrapper that removes the
                        bounded-support requirement at the price of a
                        non-uniform sample size.
  * convex_*         -- convex hull of the samples, scheduled through a
                        half-space generalization bound at a Tukey
                        depth level.
  * maximal_zero_ood_fit -- exact intersection-of-complements rule on
                        an explicit finite domain space.
  * tree_order_fit   -- the tree-ordering learner for domain spaces
                        whose ID supports form a VC-1 set system,
                        driven by a two-point oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import distributions as dist
from .core import (
    BallUnion,
    ConvexHullSet,
    CubeUnion,
    Domain,
    FiniteSet,
    Hypothesis,
)
from .geometry import AxisGrid, cubes_of, grid_cover, unit_ball_volume

DEFAULT_SCHEDULE_CAP = 10**8
TAU_FLOOR = 1e-12


class PlanError(ValueError):
    """A sample-size plan cannot be formed from the given parameters."""


class SeparationError(PlanError):
    """The density-grid separation condition failed: the smoothness
    budget g is inconsistent with the requested epsilon and radius."""


class StructuralError(RuntimeError):
    """The two-point oracle or its backing space is not what the
    tree-ordering learner requires (not a tree order, or inconsistent)."""


# ---------------------------------------------------------------------------
# g-functions (smoothness budgets)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GFunction:
    """Monotone budget g with g(tau) -> 0 as tau -> 0, plus its inverse.

    forward maps a radius to the admissible average density near the
    other support; inverse recovers the radius from a density target.
    """

    forward: Callable[[float], float]
    inverse: Callable[[float], float]
    representation: str

    def __repr__(self):
        return f"GFunction({self.representation})"


def holder_to_g(gamma: float, C: float) -> GFunction:
    """Budget induced by a (gamma, C)-Hölder density with disjoint
    supports: the density within tau of the other support is at most
    C * tau^gamma, so g(tau) = C * tau^gamma with inverse
    (y / C)^(1/gamma).
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if C < 0:
        raise ValueError(f"C must be non-negative, got {C}")
    if C == 0:
        raise ValueError(
            "C = 0 makes g identically zero with no inverse; the supports are "
            "then strictly separated, use the far-OOD learner instead"
        )
    return GFunction(
        forward=lambda tau: C * tau**gamma,
        inverse=lambda y: (y / C) ** (1.0 / gamma),
        representation=f"holder(gamma={gamma}, C={C})",
    )


def tabulated_g(taus: Sequence[float], values: Sequence[float]) -> GFunction:
    """Budget given as a monotone table, inverted by bisection."""
    t = np.asarray(taus, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 2 or np.any(np.diff(t) <= 0) or np.any(np.diff(v) < 0):
        raise ValueError("need an increasing tau grid with non-decreasing values")

    def forward(tau: float) -> float:
        return float(np.interp(tau, t, v))

    def inverse(y: float) -> float:
        if not v[0] <= y <= v[-1]:
            raise ValueError(f"target {y} outside tabulated range [{v[0]}, {v[-1]}]")
        lo, hi = float(t[0]), float(t[-1])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if forward(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return GFunction(forward=forward, inverse=inverse,
                     representation=f"tabulated({len(t)} knots)")


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FarPlan:
    """Ball-union / occupancy-grid schedule: M cubes, N samples."""

    tau: float
    R: float
    n: int
    M: int
    N: int


@dataclass(frozen=True)
class DensityGridPlan:
    """Count-threshold schedule for the density-grid learner.

    A = eps / M is the significant-cell mass, B = c_n g(tau) tau^n the
    insignificant-cell mass; the Chernoff argument separates the two
    through the expected-count threshold ceil(2 B N).
    """

    tau: float
    R: float
    n: int
    M: int
    A: float
    B: float
    N: int
    count_threshold: int


@dataclass(frozen=True)
class ConvexSchedule:
    """Sample count for the convex-hull learner at Tukey level lam."""

    lam: float
    C_delta: float
    d: int
    M: int


def far_ood_plan(epsilon: float, delta: float, R: float, tau: float, n: int,
                 cell_cap: int = DEFAULT_SCHEDULE_CAP) -> FarPlan:
    """Schedule for the ball-union learner over a radius-R bounding ball.

    M is the exact cube count of the covering grid with cell diameter
    tau; N = ceil((M / eps) ln(M / delta)) makes the union bound
    M exp(-eps N / M) come out below delta.
    """
    _check_eps_delta(epsilon, delta)
    grid = grid_cover(np.zeros(n), R, tau, n, cell_cap=cell_cap)
    M = grid.cube_count
    N = math.ceil((M / epsilon) * math.log(M / delta))
    return FarPlan(tau=tau, R=R, n=n, M=M, N=max(N, 1))


def far_ood_fit(samples, tau: float) -> BallUnion:
    """Union of closed balls of radius tau around the samples."""
    return BallUnion(samples, tau)


def grid_occupancy_plan(epsilon: float, delta: float, R: float, n: int,
                        g: GFunction, cell_cap: int = DEFAULT_SCHEDULE_CAP) -> FarPlan:
    """Schedule for the occupancy-grid learner under an OOD budget g.

    The occupied cells carry OOD mass at most c_n (2 sqrt(n) R)^n g(tau),
    so tau = g^{-1}(eps / (c_n (2 sqrt(n) R)^n)) caps the OOD risk at
    eps; N then follows the far-OOD schedule for that grid.
    """
    _check_eps_delta(epsilon, delta)
    c_n = unit_ball_volume(n)
    target = epsilon / (c_n * (2 * math.sqrt(n) * R) ** n)
    tau = float(g.inverse(target))
    if tau < TAU_FLOOR:
        raise PlanError(
            f"assumption too weak at this epsilon: g^-1({target:.3e}) = {tau:.3e} "
            f"underflows the {TAU_FLOOR} radius floor"
        )
    return far_ood_plan(epsilon, delta, R, tau, n, cell_cap=cell_cap)


def grid_occupancy_fit(samples, grid: AxisGrid) -> CubeUnion:
    """Union of the grid cells that received at least one sample."""
    return _threshold_cells(samples, grid, min_count=1)


def density_grid_plan(epsilon: float, delta: float, R: float, n: int,
                      g: GFunction, cell_cap: int = DEFAULT_SCHEDULE_CAP) -> DensityGridPlan:
    """Schedule for the count-threshold learner under an ID budget g.

    tau = g^{-1}(eps / (4 c_n (2 sqrt(n) R)^n)) gives insignificant-cell
    mass B = c_n g(tau) tau^n at most a quarter of the significant-cell
    mass A = eps / M (up to the rounding of the cube count, see below);
    N = ceil((3 / B) ln(M / delta)) and the count threshold ceil(2 B N)
    then separate the two sides of the Chernoff argument.

    The separation is checked through the pre-rounding inequality
    4 c_n (2 sqrt(n) R)^n g(tau) <= eps: with an exact inverse it holds
    with equality, and a failure signals a g whose inverse is
    inconsistent with its forward map (an impossible eps/g/R combination).
    The exact cube count M = ceil(...)^n can push the literal ratio A/B
    a hair below 4; that rounding deficit is intentional and bounded.
    """
    _check_eps_delta(epsilon, delta)
    c_n = unit_ball_volume(n)
    vol_factor = c_n * (2 * math.sqrt(n) * R) ** n
    target = epsilon / (4 * vol_factor)
    tau = float(g.inverse(target))
    if tau < TAU_FLOOR:
        raise PlanError(
            f"assumption too weak at this epsilon: g^-1({target:.3e}) = {tau:.3e} "
            f"underflows the {TAU_FLOOR} radius floor"
        )
    g_tau = float(g.forward(tau))
    if 4 * vol_factor * g_tau > epsilon * (1 + 1e-9):
        raise SeparationError(
            f"separation A > 4B violated before rounding: 4 c_n (2 sqrt(n) R)^n "
            f"g(tau) = {4 * vol_factor * g_tau:.6g} exceeds epsilon = {epsilon}; "
            f"the budget g is inconsistent with these parameters"
        )
    grid = grid_cover(np.zeros(n), R, tau, n, cell_cap=cell_cap)
    M = grid.cube_count
    B = c_n * g_tau * tau**n
    A = epsilon / M
    N = math.ceil((3.0 / B) * math.log(M / delta))
    threshold = max(1, math.ceil(2 * B * N))
    return DensityGridPlan(tau=tau, R=R, n=n, M=M, A=A, B=B, N=N,
                           count_threshold=threshold)


def density_grid_fit(samples, plan: DensityGridPlan,
                     grid: AxisGrid | None = None) -> CubeUnion:
    """Union of the cells holding at least count_threshold samples.

    The grid is anchored on the first sample (covering its radius-R
    ball) unless an explicit grid is provided.  Exactly plan.N samples
    are required; the threshold was computed for that count.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1)
    if len(samples) != plan.N:
        raise ValueError(f"plan expects exactly {plan.N} samples, got {len(samples)}")
    if grid is None:
        grid = grid_cover(samples[0], plan.R, plan.tau, plan.n)
    return _threshold_cells(samples, grid, min_count=plan.count_threshold)


def _threshold_cells(samples, grid: AxisGrid, min_count: int) -> CubeUnion:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1)
    if len(samples) == 0:
        return CubeUnion(grid, frozenset())
    idx = cubes_of(grid, samples)
    flat = np.ravel_multi_index(idx.T, (grid.cells_per_axis,) * grid.dimension)
    counts = np.bincount(flat, minlength=grid.cube_count)
    keep = np.nonzero(counts >= min_count)[0]
    cells = np.column_stack(np.unravel_index(keep, (grid.cells_per_axis,) * grid.dimension))
    return CubeUnion(grid, [tuple(int(i) for i in row) for row in cells])


def nonuniform_sample_count(epsilon: float, delta: float) -> int:
    """First-phase draw count ceil((2 / eps) ln(2 / delta)) of the
    radius-estimation wrapper."""
    _check_eps_delta(epsilon, delta)
    return math.ceil((2.0 / epsilon) * math.log(2.0 / delta))


def nonuniform_fit(base: str, epsilon: float, delta: float, params: dict,
                   sample_source: Callable[[], np.ndarray],
                   max_draws: int | None = 50_000_000) -> Hypothesis:
    """Radius-estimation wrapper: learn without an a-priori support bound.

    Phase 1 draws N1 = ceil((2/eps) ln(2/delta)) samples; the first
    sample anchors a ball whose radius R_hat is the largest observed
    distance, which captures all but eps/2 of the ID mass with
    probability 1 - delta/2.  Phase 2 runs the chosen base learner at
    targets (eps/2, delta/2) with R = R_hat on fresh samples, keeping
    only those inside the estimated ball (draws restricted to it).
    Termination is almost sure; max_draws is a sanity stop.

    base is one of "far_ood" (params: tau), "grid_occupancy" or
    "density_grid" (params: g).  A degenerate R_hat = 0 (point-mass ID)
    collapses to a single ball around the anchor.
    """
    if base not in ("far_ood", "grid_occupancy", "density_grid"):
        raise ValueError(f"unknown base learner {base!r}")
    n1 = nonuniform_sample_count(epsilon, delta)
    first = np.atleast_1d(np.asarray(sample_source(), dtype=float))
    phase1 = [first]
    for _ in range(n1 - 1):
        phase1.append(np.atleast_1d(np.asarray(sample_source(), dtype=float)))
    x0 = phase1[0]
    r_hat = max(float(np.linalg.norm(p - x0)) for p in phase1)
    n = len(x0)

    if r_hat == 0.0:
        radius = params.get("tau", TAU_FLOOR) if base == "far_ood" else TAU_FLOOR
        return BallUnion(x0.reshape(1, -1), max(radius, TAU_FLOOR))

    eps2, delta2 = epsilon / 2, delta / 2
    if base == "far_ood":
        plan = far_ood_plan(eps2, delta2, r_hat, params["tau"], n)
    elif base == "grid_occupancy":
        plan = grid_occupancy_plan(eps2, delta2, r_hat, n, params["g"])
    else:
        plan = density_grid_plan(eps2, delta2, r_hat, n, params["g"])

    fresh: list[np.ndarray] = []
    drawn = 0
    while len(fresh) < plan.N:
        p = np.atleast_1d(np.asarray(sample_source(), dtype=float))
        drawn += 1
        if float(np.linalg.norm(p - x0)) <= r_hat:
            fresh.append(p)
        if max_draws is not None and drawn > max_draws:
            raise RuntimeError(
                f"nonuniform_fit exceeded {max_draws} draws collecting "
                f"{plan.N} in-ball samples (got {len(fresh)})"
            )
    samples = np.array(fresh)

    if base == "far_ood":
        return far_ood_fit(samples, plan.tau)
    grid = grid_cover(x0, r_hat, plan.tau, n)
    if base == "grid_occupancy":
        return grid_occupancy_fit(samples, grid)
    return density_grid_fit(samples, plan, grid=grid)


def convex_schedule(lam: float, delta: float, d: int,
                    cap: int = DEFAULT_SCHEDULE_CAP) -> ConvexSchedule:
    """Sample count for the hull learner to swallow the Tukey lam-core.

    With C_delta = 1 + ln(1/delta) (any Theta(ln(1/delta)) constant
    works; this one is fixed for reproducibility) the hull of
    M = ceil(x ln^2 x) + 1 samples, x = C_delta d / lam, contains every
    point of Tukey depth at least lam with probability 1 - delta.
    """
    if not 0 < lam <= 1:
        raise ValueError(f"lam must be in (0, 1], got {lam}")
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must be in (0, 1/2), got {delta}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    c_delta = 1.0 + math.log(1.0 / delta)
    x = c_delta * d / lam
    M = math.ceil(x * math.log(x) ** 2) + 1
    M = max(M, d + 1)
    if M > cap:
        raise PlanError(f"lam = {lam} too small: schedule M = {M} exceeds cap {cap}")
    return ConvexSchedule(lam=lam, C_delta=c_delta, d=d, M=M)


def convex_hull_fit(samples) -> ConvexHullSet:
    """Closed convex hull of the samples.

    Under a convex ID support with disjoint OOD support the hull is a
    subset of the ID support, so its OOD risk is zero on every draw.
    """
    return ConvexHullSet(samples)


# ---------------------------------------------------------------------------
# Finite domain spaces: exact procedures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteDomainSpace:
    """Explicit list of domains over a finite instance space."""

    universe: frozenset
    domains: tuple

    def __post_init__(self):
        object.__setattr__(self, "universe", frozenset(self.universe))
        object.__setattr__(self, "domains", tuple(self.domains))
        for d in self.domains:
            for s in (dist.support_set(d.id_dist), dist.support_set(d.ood_dist)):
                if not s <= self.universe:
                    raise ValueError(f"support {set(s)} not inside the universe")

    def support_pairs(self):
        return [(dist.support_set(d.id_dist), dist.support_set(d.ood_dist))
                for d in self.domains]


@dataclass(frozen=True)
class ZeroOodFit:
    """Result of the intersection-of-complements rule.

    vacuous is set when no domain in the space is consistent with the
    samples, in which case the hypothesis is the whole universe.
    """

    hypothesis: Hypothesis
    vacuous: bool


def maximal_zero_ood_fit(space: FiniteDomainSpace, samples) -> ZeroOodFit:
    """Intersect, over every domain whose ID support covers the samples,
    the complements of the OOD supports.  By construction the result
    puts zero mass on the OOD support of every consistent domain.
    """
    sample_set = {int(s) if isinstance(s, (int, np.integer)) else s for s in samples}
    excluded: set = set()
    consistent = 0
    for id_supp, ood_supp in space.support_pairs():
        if sample_set <= id_supp:
            consistent += 1
            excluded |= ood_supp
    if consistent == 0:
        return ZeroOodFit(hypothesis=FiniteSet(sorted(space.universe)), vacuous=True)
    return ZeroOodFit(hypothesis=FiniteSet(sorted(space.universe - excluded)),
                      vacuous=False)


# ---------------------------------------------------------------------------
# Tree-ordering learner (VC-1 ID supports, two-point oracle)
# ---------------------------------------------------------------------------

class TwoPointOracle:
    """Joint support-membership oracle for a finite domain space.

    tp((x, i), (y, j)) is 1 iff some domain has ID-support membership i
    at x and OOD-support membership j at y.  The oracle is backed by
    brute force over an explicit space; the same backing answers the
    ID-ID pair queries that the tree-ordering comparisons need (the
    mixed ID/OOD query alone cannot express them for general spaces).
    """

    def __init__(self, space: FiniteDomainSpace):
        self.space = space
        self._pairs = space.support_pairs()

    def tp(self, xq: tuple, yq: tuple) -> int:
        (x, i), (y, j) = xq, yq
        for id_supp, ood_supp in self._pairs:
            if (x in id_supp) == bool(i) and (y in ood_supp) == bool(j):
                return 1
        return 0

    def id_pair(self, x, a: int, y, b: int) -> bool:
        """Is there a domain with ID-support membership a at x and b at y?"""
        for id_supp, _ in self._pairs:
            if (x in id_supp) == bool(a) and (y in id_supp) == bool(b):
                return True
        return False


def tree_order_fit(space: FiniteDomainSpace, oracle: TwoPointOracle,
                   zero_risk_id: Domain, epsilon: float, delta: float,
                   sample_source: Callable[[], int]) -> Hypothesis:
    """Tree-ordering learner for VC-1 ID-support systems.

    Let f be the ID support of the zero-OOD-risk reference domain.  The
    relation  x <= y  iff every ID support that disagrees with f at y
    also disagrees at x  is a tree ordering whose initial segments are
    exactly the disagreement sets.  The learner draws
    N = ceil((1/eps) ln(1/delta)) samples, takes s = the order-maximal
    sample where the target support disagrees with f (a sample lies in
    the target support, so it disagrees iff it falls outside f), and
    returns (initial segment of s) xor f.  Outside the disagreement
    region the output coincides with f, whose OOD mass is zero for
    every domain in the space, so the OOD risk is zero by construction.
    """
    _check_eps_delta(epsilon, delta)
    f_supp = dist.support_set(zero_risk_id.id_dist)
    universe = sorted(space.universe)

    # Validate the zero-OOD-risk property and disjoint supports.
    for id_supp, ood_supp in space.support_pairs():
        if id_supp & ood_supp:
            raise StructuralError("space violates disjoint supports")
        if ood_supp & f_supp:
            raise StructuralError(
                "reference domain is not zero-OOD-risk: its ID support meets "
                f"an OOD support at {set(ood_supp & f_supp)}"
            )

    # x precedes y iff no ID support disagrees with f at y while agreeing at x.
    prec: dict[tuple, bool] = {}
    for x in universe:
        fx = x in f_supp
        for y in universe:
            fy = y in f_supp
            prec[(x, y)] = not oracle.id_pair(y, int(not fy), x, int(fx))

    def precedes(x, y) -> bool:
        return prec[(x, y)]

    # Structural check: initial segments must be linearly ordered.
    for y in universe:
        seg = [x for x in universe if precedes(x, y)]
        for i, a in enumerate(seg):
            for b in seg[i + 1:]:
                if not (precedes(a, b) or precedes(b, a)):
                    raise StructuralError(
                        f"initial segment of {y} is not linearly ordered "
                        f"({a} and {b} incomparable); not a tree ordering"
                    )

    N = math.ceil((1.0 / epsilon) * math.log(1.0 / delta))
    samples = [sample_source() for _ in range(N)]
    differing = [s for s in samples if s not in f_supp]

    if not differing:
        return FiniteSet(sorted(f_supp))

    s_max = differing[0]
    for s in differing[1:]:
        if precedes(s_max, s):
            s_max = s
    segment = {x for x in universe if precedes(x, s_max)}
    return FiniteSet(sorted(segment ^ f_supp))


def _check_eps_delta(epsilon: float, delta: float):
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 1/2), got {epsilon}")
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must be in (0, 1/2), got {delta}")


# ---------------------------------------------------------------------------
# Ready-made finite families for experiments and tests
# ---------------------------------------------------------------------------

def chain_domain_space(k: int, extra_point: int = 0) -> tuple[FiniteDomainSpace, Domain]:
    """Nested-initial-segment family over {0..k} plus an off-chain point.

    Domain j has ID support {0..j} (uniform mass) and OOD support
    {j+1..k} plus the off-chain point (uniform mass).  The ID supports
    are nested, so their set system has VC dimension 1, and the j = 0
    domain is a zero-OOD-risk reference: no OOD support touches {0}.
    Returns (space, reference domain).
    """
    if k < 1:
        raise ValueError("need k >= 1")
    off = -1 - extra_point
    domains = []
    for j in range(k + 1):
        id_pts = tuple(range(j + 1))
        ood_pts = tuple(range(j + 1, k + 1)) + (off,)
        id_dist = dist.FiniteSupport(id_pts, np.full(len(id_pts), 1.0 / len(id_pts)))
        ood_dist = dist.FiniteSupport(ood_pts, np.full(len(ood_pts), 1.0 / len(ood_pts)))
        domains.append(Domain(id_dist=id_dist, ood_dist=ood_dist, dimension=0))
    universe = frozenset(range(k + 1)) | {off}
    space = FiniteDomainSpace(universe=universe, domains=domains)
    return space, domains[0]
