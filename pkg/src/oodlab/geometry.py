"""Geometric primitives shared by the learners.

Closed balls, axis-aligned cube grids that partition a bounding box,
convex-hull membership by linear feasibility, and Tukey (half-space)
depth.  Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

DEFAULT_CELL_CAP = 10**8
DEFAULT_HULL_TOL = 1e-9


class GridTooFineError(ValueError):
    """Raised when a requested grid would exceed the cube-count cap."""


class IndeterminateHullError(RuntimeError):
    """Raised when the feasibility solver cannot certify membership either way."""


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball: all x with ||x - center|| <= radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    def contains(self, p: np.ndarray) -> bool:
        return float(np.linalg.norm(np.asarray(p, dtype=float) - self.center)) <= self.radius


@dataclass(frozen=True, eq=False)
class AxisGrid:
    """Partition of a box into half-open cubes of equal side.

    The box is [anchor, anchor + side * cells_per_axis]^n.  Cell (i_1,
    ..., i_n) spans [anchor + i*side, anchor + (i+1)*side) per axis;
    points on the outer box boundary are clamped into the last cell so
    every point of the box lies in exactly one cell.
    """

    anchor: np.ndarray
    side: float
    cells_per_axis: int
    dimension: int

    def __eq__(self, other):
        return (
            isinstance(other, AxisGrid)
            and self.side == other.side
            and self.cells_per_axis == other.cells_per_axis
            and self.dimension == other.dimension
            and np.array_equal(self.anchor, other.anchor)
        )

    @property
    def cube_count(self) -> int:
        return self.cells_per_axis**self.dimension

    @property
    def upper(self) -> np.ndarray:
        return self.anchor + self.side * self.cells_per_axis

    def cell_bounds(self, index: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(index, dtype=float)
        lo = self.anchor + idx * self.side
        return lo, lo + self.side


CubeIndex = tuple[int, ...]


def unit_ball_volume(n: int) -> float:
    """Volume c_n of the unit ball in R^n, so vol(B(x, r)) = c_n * r^n.

    c_n = pi^(n/2) / Gamma(n/2 + 1).  Restricted to 1 <= n <= 20; the
    learners never need more and the constant underflows usefulness far
    below that anyway.
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 20:
        raise ValueError(f"dimension must be an integer in [1, 20], got {n!r}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def grid_cover(center: np.ndarray, R: float, tau: float, n: int,
               cell_cap: int = DEFAULT_CELL_CAP) -> AxisGrid:
    """Cube grid covering the closed ball B(center, R) with cell diameter tau.

    Cells have side tau/sqrt(n), hence diameter exactly tau.  The number
    of cells per axis is ceil(2 R sqrt(n) / tau), the smallest count
    whose span side*cells covers the 2R-wide bounding box, giving
    M = ceil(2 R sqrt(n) / tau)^n cubes in total.
    """
    if R <= 0 or tau <= 0:
        raise ValueError(f"R and tau must be positive, got R={R}, tau={tau}")
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    side = tau / math.sqrt(n)
    cells_per_axis = math.ceil(2 * R * math.sqrt(n) / tau)
    M = cells_per_axis**n
    if M > cell_cap:
        raise GridTooFineError(
            f"grid too fine: M={M} cubes exceeds cap {cell_cap} "
            f"(R={R}, tau={tau}, n={n})"
        )
    center = np.asarray(center, dtype=float).reshape(n)
    anchor = center - R
    return AxisGrid(anchor=anchor, side=side, cells_per_axis=cells_per_axis, dimension=n)


def cube_of(grid: AxisGrid, p: np.ndarray) -> CubeIndex:
    """Index of the unique cell containing p.

    Half-open convention: index = floor((p - anchor)/side), except that
    points exactly on the outer box boundary clamp to the last cell.
    Points outside the box are an error.
    """
    p = np.asarray(p, dtype=float).reshape(grid.dimension)
    rel = (p - grid.anchor) / grid.side
    if np.any(rel < 0) or np.any(rel > grid.cells_per_axis):
        raise ValueError(f"point {p} outside grid box [{grid.anchor}, {grid.upper}]")
    idx = np.minimum(np.floor(rel).astype(int), grid.cells_per_axis - 1)
    return tuple(int(i) for i in idx)


def cubes_of(grid: AxisGrid, points: np.ndarray) -> np.ndarray:
    """Vectorized cube_of: (m, n) points -> (m, n) integer indices."""
    pts = np.asarray(points, dtype=float).reshape(-1, grid.dimension)
    rel = (pts - grid.anchor) / grid.side
    if np.any(rel < -1e-12) or np.any(rel > grid.cells_per_axis + 1e-12):
        bad = pts[np.any((rel < -1e-12) | (rel > grid.cells_per_axis + 1e-12), axis=1)][0]
        raise ValueError(f"point {bad} outside grid box [{grid.anchor}, {grid.upper}]")
    return np.minimum(np.floor(rel).astype(int), grid.cells_per_axis - 1)


def hull_contains(vertices, p, tol: float = DEFAULT_HULL_TOL) -> bool:
    """Closed convex-hull membership decided by linear feasibility.

    True iff there exist lambda >= 0 with sum(lambda) = 1 and
    |V^T lambda - p| <= tol coordinate-wise.  No facet enumeration:
    the test stays polynomial in any dimension.  A solver failure that
    is neither "optimal" nor "infeasible" raises instead of silently
    answering, so an indeterminate solve can never masquerade as False.
    """
    V = np.asarray(vertices, dtype=float)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    m, n = V.shape
    if p.shape[0] != n:
        raise ValueError(f"dimension mismatch: vertices are {n}-d, point is {p.shape[0]}-d")
    # Fast exits: single vertex, or p coincides with a vertex.
    if m == 1:
        return bool(np.all(np.abs(V[0] - p) <= tol))
    # Feasibility LP: minimize 0 subject to the convex-combination constraints.
    A_eq = np.ones((1, m))
    b_eq = np.array([1.0])
    A_ub = np.vstack([V.T, -V.T])
    b_ub = np.concatenate([p + tol, -(p - tol)])
    res = linprog(
        c=np.zeros(m), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=[(0, None)] * m, method="highs",
    )
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    raise IndeterminateHullError(
        f"hull membership indeterminate: solver status {res.status} ({res.message})"
    )


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Extreme points of a 2-d point cloud in counter-clockwise order.

    Andrew's monotone chain.  Handles degenerate inputs (all points
    collinear or coincident) by returning the 1- or 2-point chain.
    Used only as the fast evaluation structure for 2-d hull hypotheses;
    membership semantics remain those of hull_contains.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts
    # np.unique sorts lexicographically already.
    def half(chain_pts):
        chain: list[np.ndarray] = []
        for q in chain_pts:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (q[1] - o[1]) - (a[1] - o[1]) * (q[0] - o[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(q)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        return pts[:1]
    return np.array(hull)


def points_in_hull_2d(hull_ccw: np.ndarray, points: np.ndarray,
                      tol: float = DEFAULT_HULL_TOL) -> np.ndarray:
    """Vectorized membership against a CCW 2-d hull chain (closed hull).

    Degenerate chains (a point or a segment) fall back to distance
    tests at the same tolerance.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hull = np.asarray(hull_ccw, dtype=float)
    if len(hull) == 1:
        return np.linalg.norm(pts - hull[0], axis=1) <= tol
    if len(hull) == 2:
        a, b = hull
        ab = b - a
        L2 = float(ab @ ab)
        t = np.clip((pts - a) @ ab / L2, 0.0, 1.0)
        proj = a + t[:, None] * ab
        return np.linalg.norm(pts - proj, axis=1) <= tol
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(hull)):
        a = hull[i]
        b = hull[(i + 1) % len(hull)]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        inside &= cross >= -tol
    return inside


def dist_to_hull_2d(hull_ccw: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to a CCW convex chain (0 inside).

    Degenerate chains (single point, segment) are handled as the
    corresponding point/segment distances.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hull = np.asarray(hull_ccw, dtype=float)
    if len(hull) == 1:
        return np.linalg.norm(pts - hull[0], axis=1)
    seg_dists = np.full((len(pts), len(hull)), np.inf)
    edges = [(hull[i], hull[(i + 1) % len(hull)]) for i in range(len(hull))] \
        if len(hull) > 2 else [(hull[0], hull[1])]
    for j, (a, b) in enumerate(edges):
        ab = b - a
        L2 = float(ab @ ab)
        t = np.clip((pts - a) @ ab / L2, 0.0, 1.0) if L2 > 0 else np.zeros(len(pts))
        proj = a + t[:, None] * ab
        seg_dists[:, j] = np.linalg.norm(pts - proj, axis=1)
    d = seg_dists.min(axis=1)
    if len(hull) > 2:
        d[points_in_hull_2d(hull, pts, tol=0.0)] = 0.0
    return d


def _halfspace_fraction(diffs: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Fraction of rows of diffs falling in the closed half-space of each direction."""
    counts = np.empty(len(directions))
    # Chunk to bound memory at ~8 MB per block.
    block = max(1, int(1e6 // max(len(diffs), 1)))
    for start in range(0, len(directions), block):
        d = directions[start:start + block]
        dots = diffs @ d.T
        counts[start:start + block] = np.count_nonzero(dots >= -1e-12, axis=0)
    return counts / len(diffs)


def tukey_depth(points: np.ndarray, p: np.ndarray, mode: str = "exact2d",
                k: int = 256, rng: np.random.Generator | None = None) -> float:
    """Tukey depth of p in a point cloud: min over closed half-spaces
    through p of the fraction of points they contain.

    mode="exact2d" (n=2 only) evaluates every critical direction: the
    two normals of each (point - p) vector plus the midpoints of the
    angular arcs between them, which is where the piecewise-constant
    count can change.  mode="sampled" minimizes over k random
    directions and therefore can only over-estimate the exact depth.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if len(pts) == 0:
        raise ValueError("tukey_depth needs at least one point")
    p = np.asarray(p, dtype=float).reshape(pts.shape[1])
    diffs = pts - p

    if mode == "exact2d":
        if pts.shape[1] != 2:
            raise ValueError("exact2d mode requires 2-d points")
        nonzero = diffs[np.linalg.norm(diffs, axis=1) > 0]
        if len(nonzero) == 0:
            return 1.0  # every point coincides with p
        phis = np.arctan2(nonzero[:, 1], nonzero[:, 0])
        crit = np.concatenate([phis + np.pi / 2, phis - np.pi / 2]) % (2 * np.pi)
        crit = np.unique(crit)
        mids = (crit + np.diff(np.concatenate([crit, [crit[0] + 2 * np.pi]])) / 2) % (2 * np.pi)
        angles = np.concatenate([crit, mids])
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        return float(_halfspace_fraction(diffs, dirs).min())

    if mode == "sampled":
        if rng is None:
            rng = np.random.default_rng(0)
        raw = rng.normal(size=(k, pts.shape[1]))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        dirs = raw / norms
        return float(_halfspace_fraction(diffs, dirs).min())

    raise ValueError(f"unknown tukey_depth mode {mode!r}")
