from __future__ import annotations

import math

import numpy as np
import pytest

from oodlab.geometry import (
    GridTooFineError,
    convex_hull_2d,
    cube_of,
    cubes_of,
    dist_to_hull_2d,
    grid_cover,
    hull_contains,
    points_in_hull_2d,
    tukey_depth,
    unit_ball_volume,
)


class TestUnitBallVolume:
    def test_known_values(self):
        assert unit_ball_volume(1) == pytest.approx(2.0)
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)

    def test_recurrence(self):
        # c_n = c_{n-2} * 2 pi / n
        for n in range(3, 21):
            assert unit_ball_volume(n) == pytest.approx(
                unit_ball_volume(n - 2) * 2 * math.pi / n, abs=1e-12
            )

    @pytest.mark.parametrize("bad", [0, -1, 21, 2.5])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            unit_ball_volume(bad)


class TestGridCover:
    def test_cell_counts_from_enumeration(self):
        # ceil(2 sqrt(2)) = 3 cells per axis in 2-d with R = tau = 1.
        g = grid_cover(np.zeros(2), R=1.0, tau=1.0, n=2)
        assert g.cells_per_axis == 3 and g.cube_count == 9
        assert g.side == pytest.approx(1 / math.sqrt(2))

        g1 = grid_cover(np.zeros(1), R=1.0, tau=2.0, n=1)
        assert g1.cells_per_axis == 1 and g1.cube_count == 1

        g2 = grid_cover(np.zeros(2), R=1.0, tau=0.5, n=2)
        assert g2.cells_per_axis == math.ceil(4 * math.sqrt(2)) == 6
        assert g2.cube_count == 36

    def test_covers_the_ball_box(self):
        g = grid_cover(np.array([0.3, -0.2]), R=1.0, tau=0.7, n=2)
        assert np.all(g.anchor <= np.array([0.3, -0.2]) - 1.0 + 1e-12)
        assert np.all(g.upper >= np.array([0.3, -0.2]) + 1.0 - 1e-12)

    def test_cube_diameter_is_tau(self):
        for n in (1, 2, 3, 5):
            g = grid_cover(np.zeros(n), R=2.0, tau=0.31, n=n)
            assert g.side * math.sqrt(n) == pytest.approx(0.31, abs=1e-12)

    def test_grid_too_fine_names_m(self):
        with pytest.raises(GridTooFineError, match="M="):
            grid_cover(np.zeros(3), R=10.0, tau=1e-3, n=3)

    def test_partition_every_point_in_exactly_one_cell(self, rng):
        g = grid_cover(np.zeros(2), R=1.0, tau=0.37, n=2)
        pts = rng.uniform(g.anchor, g.upper, size=(100_000, 2))
        idx = cubes_of(g, pts)
        assert np.all(idx >= 0) and np.all(idx < g.cells_per_axis)
        # Reconstructed bounds contain the point (upper side half-open,
        # except clamped cells on the outer boundary).
        lo = g.anchor + idx * g.side
        hi = lo + g.side
        on_last = idx == g.cells_per_axis - 1
        assert np.all(pts >= lo - 1e-12)
        assert np.all((pts < hi + 1e-12) | on_last)


class TestCubeOf:
    def test_half_open_convention(self):
        g = grid_cover(np.ones(2), R=1.0, tau=math.sqrt(2), n=2)
        assert g.side == pytest.approx(1.0) and g.cells_per_axis == 2
        assert cube_of(g, np.array([0.5, 0.5])) == (0, 0)
        assert cube_of(g, np.array([1.0, 0.5])) == (1, 0)  # internal face
        assert cube_of(g, np.array([2.0, 2.0])) == (1, 1)  # box corner clamps

    def test_outside_box_raises(self):
        g = grid_cover(np.zeros(2), R=1.0, tau=1.0, n=2)
        with pytest.raises(ValueError, match="outside"):
            cube_of(g, np.array([5.0, 0.0]))


def _orientation_inside_triangle(tri, p, tol=1e-9):
    """Independent closed-triangle membership by signed cross products."""
    a, b, c = tri
    signs = []
    for u, v in ((a, b), (b, c), (c, a)):
        signs.append((v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0]))
    signs = np.array(signs)
    area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return bool(np.all(signs >= -tol * max(area2, 1.0))
                or np.all(signs <= tol * max(area2, 1.0)))


class TestHullContains:
    def test_triangle_cases(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert hull_contains(tri, [0.2, 0.2])
        assert not hull_contains(tri, [1.0, 1.0])
        assert hull_contains(tri, [0.5, 0.5])  # edge point, closed hull

    def test_single_vertex(self):
        assert hull_contains(np.array([[1.0, 2.0]]), [1.0, 2.0])
        assert not hull_contains(np.array([[1.0, 2.0]]), [1.0, 2.1])

    def test_agrees_with_orientation_oracle(self, rng):
        hits = 0
        for _ in range(1000):
            tri = rng.uniform(-1, 1, size=(3, 2))
            # Skip nearly degenerate triangles where both deciders are
            # tolerance-bound in opposite directions.
            u, v = tri[1] - tri[0], tri[2] - tri[0]
            area2 = abs(u[0] * v[1] - u[1] * v[0])
            if area2 < 1e-3:
                continue
            p = rng.uniform(-1.2, 1.2, size=2)
            lp = hull_contains(tri, p, tol=1e-9)
            oracle = _orientation_inside_triangle(tri, p)
            if lp != oracle:
                # Disagreement allowed only within a hair of the boundary.
                d = dist_to_hull_2d(convex_hull_2d(tri), p.reshape(1, 2))[0]
                assert d < 1e-6
            else:
                hits += 1
        assert hits > 800

    def test_high_dimension_simplex(self):
        simplex = np.vstack([np.zeros(5), np.eye(5)])
        assert hull_contains(simplex, np.full(5, 1 / 6))
        assert not hull_contains(simplex, np.full(5, 0.5))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            hull_contains(np.eye(3), [0.1, 0.2])


class TestHull2dChain:
    def test_chain_matches_feasibility_route(self, rng):
        pts = rng.uniform(-1, 1, size=(60, 2))
        chain = convex_hull_2d(pts)
        probes = rng.uniform(-1.3, 1.3, size=(300, 2))
        fast = points_in_hull_2d(chain, probes)
        slow = np.array([hull_contains(pts, p) for p in probes])
        disagree = np.nonzero(fast != slow)[0]
        for i in disagree:  # boundary-tolerance cases only
            assert dist_to_hull_2d(chain, probes[i].reshape(1, 2))[0] < 1e-6
        assert len(disagree) <= 2

    def test_degenerate_collinear(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        chain = convex_hull_2d(pts)
        assert len(chain) == 2
        assert points_in_hull_2d(chain, np.array([[1.0, 1.0]]))[0]
        assert not points_in_hull_2d(chain, np.array([[1.0, 1.2]]))[0]


class TestTukeyDepth:
    def test_vertex_of_triangle(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert tukey_depth(pts, pts[0], mode="exact2d") == pytest.approx(1 / 3)

    def test_far_outside_is_zero(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert tukey_depth(pts, np.array([5.0, 5.0]), mode="exact2d") == 0.0

    def test_centroid_of_square_sample(self, rng):
        pts = rng.uniform(0, 1, size=(2000, 2))
        d = tukey_depth(pts, np.array([0.5, 0.5]), mode="exact2d")
        assert d == pytest.approx(0.5, abs=0.05)

    def test_exact_matches_fine_direction_grid(self, rng):
        # Independent oracle: dense scan over 20000 fixed directions can
        # only over-estimate, and should be within one point's weight.
        pts = rng.normal(size=(40, 2))
        p = rng.normal(size=2)
        angles = np.linspace(0, 2 * math.pi, 20000, endpoint=False)
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        counts = ((pts - p) @ dirs.T >= -1e-12).sum(axis=0)
        oracle = counts.min() / len(pts)
        exact = tukey_depth(pts, p, mode="exact2d")
        assert exact <= oracle + 1e-12
        assert oracle - exact <= 2 / len(pts)

    def test_sampled_never_below_exact(self, rng):
        for _ in range(20):
            pts = rng.normal(size=(30, 2))
            p = rng.normal(size=2) * 0.3
            exact = tukey_depth(pts, p, mode="exact2d")
            sampled = tukey_depth(pts, p, mode="sampled", k=64, rng=rng)
            assert sampled >= exact - 1e-9

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            tukey_depth(np.empty((0, 2)), np.zeros(2))

    def test_all_points_coincide(self):
        pts = np.zeros((5, 2))
        assert tukey_depth(pts, np.zeros(2), mode="exact2d") == 1.0
