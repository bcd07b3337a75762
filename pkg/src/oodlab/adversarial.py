"""Adversarial domain families and the lower-bound game runner.

Each family is a finitely parameterized set of domains with a uniform
random draw.  A game pits a learner against the family: per trial a
domain is drawn, the learner sees ID samples only, and its hypothesis
is scored at the mixture risk.  For families built on finite supports
the scoring is exact, so lower-bound comparisons carry no Monte Carlo
noise on the risk side.

Families:

  nfl                  -- point-mass domains on a shattered 3N-point set;
                          no learner with budget N beats
                          min(alpha, (1-alpha)/2) * (1 - eps_mass) in
                          expectation.
  generalized_nfl      -- same game on disjoint 1-d intervals with uniform
                          densities (absolutely continuous domains).
  holder_intervals     -- same game with Lipschitz triangle densities on
                          intervals [10i, 10i+3].
  dsa_gap              -- uniform-on-[0,1] ID with a hidden length-eps gap
                          and the OOD point inside it; expected risk of any
                          learner approaches alpha (1 - alpha) as the gap
                          shrinks.
  heavy_boundary_wedge -- heavy-boundary disk with a hidden chord cut and
                          the OOD point in the cut-off sliver.
  naturals_vc1         -- discrete family with VC-1 ID and OOD support
                          systems that still defeats uniform learning.
  convex_ngon          -- disjoint balls at regular n-gon vertices, ID mass
                          on a vertex subset completed to a convex support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import distributions as dist
from . import risk as risk_mod
from .core import AllSet, BallUnion, Complement, Domain, EmptySet, FiniteSet, Hypothesis

MAX_EXACT_BUDGET = 8


class BudgetExceededError(RuntimeError):
    """A game learner drew more ID samples than its declared budget."""


@dataclass(frozen=True, eq=False)
class AdversarialFamily:
    """A parameterized set of domains with a uniform draw.

    exact_bound, when present, maps the mixture weight alpha to the
    family's information-theoretic floor on expected mixed risk.
    budget, when present, is the per-trial sample allowance the floor
    was derived against; the game runner enforces it.
    """

    kind: str
    params: dict
    draw: Callable[[np.random.Generator], Domain]
    exact_bound: Callable[[float], float] | None = None
    budget: int | None = None


@dataclass(frozen=True)
class GameReport:
    """Outcome of an adversarial game."""

    mean_risk: float
    ci_half_width: float
    exact_bound: float | None
    trials: int
    risks: tuple


# ---------------------------------------------------------------------------
# Family builders
# ---------------------------------------------------------------------------

def build_family(kind: str, **params) -> AdversarialFamily:
    builders = {
        "nfl": _build_nfl,
        "generalized_nfl": _build_generalized_nfl,
        "dsa_gap": _build_dsa_gap,
        "heavy_boundary_wedge": _build_heavy_boundary_wedge,
        "naturals_vc1": _build_naturals_vc1,
        "holder_intervals": _build_holder_intervals,
        "convex_ngon": _build_convex_ngon,
    }
    if kind not in builders:
        raise ValueError(f"unknown family kind {kind!r}; known: {sorted(builders)}")
    return builders[kind](**params)


def _nfl_floor(eps_mass: float) -> Callable[[float], float]:
    return lambda alpha: min(alpha, (1 - alpha) / 2) * (1 - eps_mass)


def _build_nfl(T_points, N_budget: int, eps_mass: float = 0.0) -> AdversarialFamily:
    pts = np.asarray(T_points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if N_budget < 1:
        raise ValueError(f"N_budget must be >= 1, got {N_budget}")
    if len(pts) != 3 * N_budget:
        raise ValueError(f"need exactly 3 * N_budget = {3 * N_budget} points, got {len(pts)}")
    if not 0 <= eps_mass < 1:
        raise ValueError(f"eps_mass must be in [0, 1), got {eps_mass}")
    if len(np.unique(pts, axis=0)) != len(pts):
        raise ValueError("T_points must be distinct")
    # Dedicated far-away leftover points, one per role.
    span = float(pts.max() - pts.min()) or 1.0
    leftover_id = pts.max(axis=0) + 10 * span
    leftover_ood = pts.max(axis=0) + 20 * span
    n, dim = len(pts), pts.shape[1]

    def draw(rng: np.random.Generator) -> Domain:
        perm = rng.permutation(n)
        A = np.sort(perm[: 2 * N_budget])
        B = np.sort(perm[2 * N_budget:])
        id_pts = [pts[i] for i in A]
        id_probs = [(1 - eps_mass) / (2 * N_budget)] * len(A)
        ood_pts = [pts[i] for i in B]
        ood_probs = [(1 - eps_mass) / N_budget] * len(B)
        if eps_mass > 0:
            id_pts.append(leftover_id)
            id_probs.append(eps_mass)
            ood_pts.append(leftover_ood)
            ood_probs.append(eps_mass)
        return Domain(
            id_dist=dist.FiniteSupport(tuple(id_pts), np.array(id_probs)),
            ood_dist=dist.FiniteSupport(tuple(ood_pts), np.array(ood_probs)),
            dimension=dim,
        )

    return AdversarialFamily(kind="nfl",
                             params={"N_budget": N_budget, "eps_mass": eps_mass,
                                     "T_points": pts},
                             draw=draw, exact_bound=_nfl_floor(eps_mass),
                             budget=N_budget)


def _split_intervals(count: int):
    if count < 3 or count % 3 != 0:
        raise ValueError(f"the interval count must be a positive multiple of 3, got {count}")
    return count // 3


def _build_generalized_nfl(disjoint_sets, eps_mass: float = 0.01) -> AdversarialFamily:
    ivs = [(float(a), float(b)) for a, b in disjoint_sets]
    for (a, b), (a2, _) in zip(ivs, ivs[1:]):
        if a2 < b:
            raise ValueError("intervals must be disjoint and sorted")
    N = _split_intervals(len(ivs))
    if not 0 < eps_mass < 1:
        raise ValueError(f"eps_mass must be in (0, 1), got {eps_mass}")
    hi = max(b for _, b in ivs)
    width = max(b - a for a, b in ivs)
    leftover_id = (hi + 10 * width, hi + 11 * width)
    leftover_ood = (hi + 20 * width, hi + 21 * width)

    def mixture_on(chosen, leftover):
        w_main = (1 - eps_mass) / len(chosen)
        comps = [(w_main, dist.UniformBox(np.array([a]), np.array([b])))
                 for a, b in chosen]
        comps.append((eps_mass, dist.UniformBox(np.array([leftover[0]]),
                                                np.array([leftover[1]]))))
        return dist.Mixture(tuple(comps))

    def draw(rng: np.random.Generator) -> Domain:
        perm = rng.permutation(len(ivs))
        A = sorted(perm[: 2 * N])
        B = sorted(perm[2 * N:])
        return Domain(
            id_dist=mixture_on([ivs[i] for i in A], leftover_id),
            ood_dist=mixture_on([ivs[i] for i in B], leftover_ood),
            dimension=1,
        )

    return AdversarialFamily(kind="generalized_nfl",
                             params={"intervals": ivs, "eps_mass": eps_mass},
                             draw=draw, exact_bound=_nfl_floor(eps_mass), budget=N)


def _build_holder_intervals(count: int, C: float,
                            eps_mass: float = 0.01) -> AdversarialFamily:
    N = _split_intervals(count)
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if not 0 < eps_mass < 1:
        raise ValueError(f"eps_mass must be in (0, 1), got {eps_mass}")
    ivs = [(10.0 * i, 10.0 * i + 3.0) for i in range(count)]
    leftover_id = (10.0 * count, 10.0 * count + 3.0)
    leftover_ood = (10.0 * (count + 1), 10.0 * (count + 1) + 3.0)
    # Feasibility: a triangle of mass m on a width-3 interval has slope 4m/9.
    worst = max((1 - eps_mass) / N, eps_mass)
    if 4 * worst / 9 > C + 1e-9:
        raise ValueError(
            f"C = {C} too small to carry mass {worst:.4g} on a width-3 interval"
        )

    def triangles_on(chosen, leftover):
        all_ivs = sorted(chosen + [leftover])
        w_main = (1 - eps_mass) / len(chosen)
        masses = [eps_mass if iv == leftover else w_main for iv in all_ivs]
        return dist.HolderPiecewise1D(tuple(all_ivs), np.array(masses), grad_cap=C)

    def draw(rng: np.random.Generator) -> Domain:
        perm = rng.permutation(count)
        A = [ivs[i] for i in sorted(perm[: 2 * N])]
        B = [ivs[i] for i in sorted(perm[2 * N:])]
        return Domain(id_dist=triangles_on(A, leftover_id),
                      ood_dist=triangles_on(B, leftover_ood), dimension=1)

    return AdversarialFamily(kind="holder_intervals",
                             params={"count": count, "C": C, "eps_mass": eps_mass},
                             draw=draw, exact_bound=_nfl_floor(eps_mass), budget=N)


def _build_dsa_gap(eps_gap: float) -> AdversarialFamily:
    if not 0 < eps_gap < 1:
        raise ValueError(f"eps_gap must be in (0, 1), got {eps_gap}")

    def draw(rng: np.random.Generator) -> Domain:
        x = rng.uniform(0, 1 - eps_gap)
        y = x + eps_gap * rng.uniform(1e-9, 1 - 1e-9)  # strictly inside the gap
        return Domain(
            id_dist=dist.IntervalWithGap(x=x, eps_gap=eps_gap, spike_point=3.0),
            ood_dist=dist.PointMass(np.array([y])),
            dimension=1,
        )

    return AdversarialFamily(kind="dsa_gap", params={"eps_gap": eps_gap},
                             draw=draw,
                             exact_bound=lambda alpha: alpha * (1 - alpha))


def _build_heavy_boundary_wedge(eps_angle: float, lam: float) -> AdversarialFamily:
    probe = dist.HeavyBoundaryWedgeGap(theta=0.0, eps_angle=eps_angle, lam=lam)

    def draw(rng: np.random.Generator) -> Domain:
        theta = rng.uniform(0, 2 * math.pi)
        id_dist = dist.HeavyBoundaryWedgeGap(theta=theta, eps_angle=eps_angle, lam=lam)
        # OOD point strictly inside the cut-off sliver, between chord and arc.
        phi = theta + eps_angle * rng.uniform(0.25, 0.75)
        r_chord = math.cos(eps_angle / 2) / math.cos(phi - theta - eps_angle / 2)
        r = 0.5 * (r_chord + 1.0)
        y = np.array([r * math.cos(phi), r * math.sin(phi)])
        return Domain(id_dist=id_dist, ood_dist=dist.PointMass(y), dimension=2)

    return AdversarialFamily(kind="heavy_boundary_wedge",
                             params={"eps_angle": eps_angle, "lam": lam,
                                     "kappa": probe.kappa},
                             draw=draw)


def _build_naturals_vc1(n_max: int) -> AdversarialFamily:
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")

    def draw(rng: np.random.Generator) -> Domain:
        m = int(rng.integers(1, n_max + 1))
        return Domain(id_dist=dist.NaturalsGeom(n=n_max, m=m),
                      ood_dist=dist.PointMass(m), dimension=0)

    return AdversarialFamily(
        kind="naturals_vc1", params={"n_max": n_max}, draw=draw,
        exact_bound=lambda alpha: min((1 - alpha) / 2, alpha),
        budget=max(1, n_max // 2 - 1),
    )


def _build_convex_ngon(n_gon: int, eps_ball: float,
                       hull_mass: float = 0.01) -> AdversarialFamily:
    if n_gon < 3:
        raise ValueError(f"n_gon must be >= 3, got {n_gon}")
    circum = 1.0 / (2 * math.sin(math.pi / n_gon))
    angles = 2 * math.pi * np.arange(n_gon) / n_gon
    vertices = circum * np.column_stack([np.cos(angles), np.sin(angles)])
    # Pairwise-disjoint balls.
    if eps_ball >= 0.5:
        raise ValueError(
            f"eps_ball = {eps_ball} >= half the unit side: the vertex balls overlap"
        )
    # Clearance: a skipped vertex must stay outside the dilated hull of the
    # chosen ones.  The binding case is the chord between its two neighbors.
    a, b, v = vertices[0], vertices[2], vertices[1]
    chord_dist = abs((b[0] - a[0]) * (a[1] - v[1]) - (b[1] - a[1]) * (a[0] - v[0])) \
        / float(np.linalg.norm(b - a))
    if 2 * eps_ball >= chord_dist:
        raise ValueError(
            f"eps_ball = {eps_ball} too large for clearance: the hull of chosen "
            f"balls can reach a skipped vertex (need eps_ball < {chord_dist / 2:.4g})"
        )
    if not 0 < hull_mass < 1:
        raise ValueError(f"hull_mass must be in (0, 1), got {hull_mass}")

    def draw(rng: np.random.Generator) -> Domain:
        while True:
            labels = rng.integers(0, 3, size=n_gon)
            if (labels == 0).any() and (labels == 1).any():
                break
        A = vertices[labels == 0]
        B = vertices[labels == 1]
        w_ball = (1 - hull_mass) / len(A)
        comps = [(w_ball, dist.UniformBall(c, eps_ball)) for c in A]
        comps.append((hull_mass, dist.UniformHullBlob(A, eps_ball)))
        id_dist = dist.Mixture(tuple(comps))
        ood_dist = dist.Mixture(tuple(
            (1.0 / len(B), dist.UniformBall(c, eps_ball)) for c in B
        ))
        return Domain(id_dist=id_dist, ood_dist=ood_dist, dimension=2)

    return AdversarialFamily(kind="convex_ngon",
                             params={"n_gon": n_gon, "eps_ball": eps_ball,
                                     "hull_mass": hull_mass, "vertices": vertices},
                             draw=draw)


# ---------------------------------------------------------------------------
# The game runner
# ---------------------------------------------------------------------------

def run_game(family: AdversarialFamily, learner, trials: int, alpha: float,
             rng: np.random.Generator, budget: int | None = None,
             risk_m: int = 20_000) -> GameReport:
    """Average mixed risk of a learner over uniform family draws.

    Per trial: draw a domain, hand the learner a counted ID-sample
    oracle, score its hypothesis at mixture weight alpha (exactly when
    a closed form exists, Monte Carlo with risk_m samples otherwise).
    learner is a callable (draw, rng) -> Hypothesis.  The sample budget
    (defaulting to the family's declared one) is enforced when set;
    exceeding it is an error because the family's floor is
    budget-specific.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    allowance = budget if budget is not None else family.budget
    risks = []
    for _ in range(trials):
        trial_rng = np.random.default_rng(int(rng.integers(2**63)))
        domain = family.draw(trial_rng)
        count = 0

        def draw_id(m: int | None = None):
            nonlocal count
            count += 1 if m is None else m
            if allowance is not None and count > allowance:
                raise BudgetExceededError(
                    f"learner drew {count} samples, budget is {allowance}"
                )
            if m is None:
                return dist.sample(domain.id_dist, trial_rng)
            return dist.sample_many(domain.id_dist, trial_rng, m)

        h = learner(draw_id, trial_rng)
        est = risk_mod.risk(h, domain, which="mixed", alpha=alpha,
                            mode="exact_if_possible", m=risk_m, rng=trial_rng)
        risks.append(est.value)
    mean = math.fsum(risks) / trials
    bound = family.exact_bound(alpha) if family.exact_bound is not None else None
    return GameReport(mean_risk=mean,
                      ci_half_width=risk_mod.hoeffding_half_width(trials),
                      exact_bound=bound, trials=trials, risks=tuple(risks))


# Ready-made game learners (structurally different baselines).

def learner_always_all(draw, rng) -> Hypothesis:
    return AllSet()


def learner_always_empty(draw, rng) -> Hypothesis:
    return EmptySet()


def make_memorizer(n_samples: int):
    """Returns exactly the sampled points."""

    def fit(draw, rng) -> Hypothesis:
        return FiniteSet([draw() for _ in range(n_samples)])

    return fit


def make_ball_learner(tau: float, n_samples: int):
    """Union of tau-balls around the samples (drawn in one batch)."""

    def fit(draw, rng) -> Hypothesis:
        pts = np.asarray(draw(n_samples), dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return BallUnion(pts, tau)

    return fit


def make_complement_memorizer(n_samples: int):
    """Everything except the sampled points (a deliberately bad rule)."""

    def fit(draw, rng) -> Hypothesis:
        return Complement(FiniteSet([draw() for _ in range(n_samples)]))

    return fit


# ---------------------------------------------------------------------------
# Exact Bayes value of the point-mass no-free-lunch game
# ---------------------------------------------------------------------------

def nfl_bayes_exact(N_budget: int, alpha: float, eps_mass: float = 0.0) -> float:
    """Best achievable expected mixed risk in the 3N-point game, exactly.

    The adversary puts ID mass (1 - eps)/2N on a uniformly random
    2N-subset A of the 3N points (plus eps on a dedicated leftover
    point) and OOD mass (1 - eps)/N on the complement.  Conditioned on
    the N observed samples, the posterior over A is uniform over the
    supersets of the distinct observed points, so the point-optimal
    hypothesis decides each unseen point by comparing

        (1 - alpha) (1 - eps)/2N * P[point is ID | samples]   vs
        alpha (1 - eps)/N * P[point is OOD | samples],

    which depends only on k, the number of distinct non-leftover
    sample values.  Summing the occupancy distribution of k (with the
    leftover hit count binomial in eps) gives the exact value; all
    arithmetic is rational, floats enter only at the final conversion.
    The result is never below min((1-alpha)(1-eps)/2, alpha(1-eps)).
    """
    if not 1 <= N_budget <= MAX_EXACT_BUDGET:
        raise ValueError(
            f"N_budget must be in [1, {MAX_EXACT_BUDGET}] for exact enumeration, "
            f"got {N_budget}"
        )
    if not 0 <= eps_mass < 1:
        raise ValueError(f"eps_mass must be in [0, 1), got {eps_mass}")
    N = N_budget
    a = Fraction(alpha)
    e = Fraction(eps_mass)
    two_n = 2 * N

    # surj[j][k] = number of surjections from j labeled draws onto a fixed k-set.
    surj = [[Fraction(0)] * (N + 1) for _ in range(N + 1)]
    surj[0][0] = Fraction(1)
    for j in range(1, N + 1):
        for k in range(1, N + 1):
            surj[j][k] = k * (surj[j - 1][k] + surj[j - 1][k - 1])

    total = Fraction(0)
    for j in range(N + 1):  # draws that hit the 2N in-support points
        pj = Fraction(math.comb(N, j)) * (1 - e) ** j * e ** (N - j)
        for k in range(0, j + 1):
            if j > 0 and k == 0:
                continue
            pk = (Fraction(math.comb(two_n, k)) * surj[j][k]
                  / Fraction(two_n) ** j)
            per_point = min((1 - a) * (1 - e) * Fraction(two_n - k, two_n),
                            a * (1 - e))
            total += pj * pk * per_point
    return float(total)
