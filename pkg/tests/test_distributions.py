from __future__ import annotations

import json
import math

import numpy as np
import pytest

from oodlab import distributions as dist
from oodlab.core import AllSet, BallUnion, Complement, CubeUnion, EmptySet, FiniteSet, IntervalSet
from oodlab.geometry import grid_cover
from oodlab.risk import hoeffding_half_width

ALL_SPECS = {
    "uniform_box": lambda: dist.UniformBox(np.array([0.0, -1.0]), np.array([1.0, 1.0])),
    "uniform_ball": lambda: dist.UniformBall(np.array([1.0, 2.0]), 0.7),
    "uniform_annulus": lambda: dist.UniformAnnulus(np.zeros(2), 1.0, 2.0),
    "point_mass": lambda: dist.PointMass(np.array([0.3, 0.4])),
    "point_mass_discrete": lambda: dist.PointMass(2),
    "finite_support": lambda: dist.FiniteSupport((1, 2, 5), np.array([0.2, 0.3, 0.5])),
    "interval_with_gap": lambda: dist.IntervalWithGap(0.2, 0.1, 3.0),
    "heavy_boundary_circle": lambda: dist.HeavyBoundaryCircle(0.1),
    "heavy_boundary_wedge": lambda: dist.HeavyBoundaryWedgeGap(0.7, 0.4, 0.2),
    "naturals_geom": lambda: dist.NaturalsGeom(4, 2),
    "holder": lambda: dist.HolderPiecewise1D(((0.0, 3.0), (10.0, 13.0)),
                                             np.array([0.6, 0.4]), 1.0),
    "trunc_gauss": lambda: dist.TruncatedGaussian(np.zeros(2), 1.0, 3.0),
    "hull_blob": lambda: dist.UniformHullBlob(np.array([[0, 0], [1, 0], [0.5, 1]]), 0.2),
    "mixture": lambda: dist.Mixture((
        (0.7, dist.UniformBox(np.array([0.0]), np.array([1.0]))),
        (0.3, dist.HolderPiecewise1D(((2.0, 4.0),), np.array([1.0]), 1.0)),
    )),
}


class TestSamplesLandOnSupport:
    @pytest.mark.parametrize("name", sorted(ALL_SPECS))
    def test_100k_samples_in_support(self, name, rng):
        spec = ALL_SPECS[name]()
        pts = dist.sample_many(spec, rng, 100_000)
        if pts.ndim == 1:  # discrete
            checked = pts[:2000]
            assert all(dist.support_contains(spec, int(x)) for x in checked)
        else:
            checked = pts[:2000]
            assert all(dist.support_contains(spec, p) for p in checked)

    def test_deterministic_given_seed(self):
        for name, mk in ALL_SPECS.items():
            a = dist.sample_many(mk(), np.random.default_rng(5), 50)
            b = dist.sample_many(mk(), np.random.default_rng(5), 50)
            assert np.array_equal(a, b), name


class TestPointMass:
    def test_always_the_point(self, rng):
        assert dist.sample(dist.PointMass(2), rng) == 2
        p = dist.sample(dist.PointMass(np.array([1.0, 2.0])), rng)
        assert np.array_equal(p, [1.0, 2.0])


class TestIntervalWithGap:
    def test_support_membership(self):
        spec = dist.IntervalWithGap(x=0.2, eps_gap=0.1, spike_point=3.0)
        assert not dist.support_contains(spec, np.array([0.25]))
        assert dist.support_contains(spec, np.array([3.0]))
        assert dist.support_contains(spec, np.array([0.2]))   # closed gap edges
        assert dist.support_contains(spec, np.array([0.3]))
        assert not dist.support_contains(spec, np.array([1.5]))

    def test_spike_region_mass(self):
        spec = dist.IntervalWithGap(x=0.2, eps_gap=0.1, spike_point=3.0)
        assert dist.region_mass(spec, FiniteSet([np.array([3.0])])) == pytest.approx(0.1)
        assert dist.region_mass(spec, IntervalSet([(2.9, 3.1)])) == pytest.approx(0.1)
        # Density 1 on the remaining support: mass of [0, 0.2] is 0.2.
        assert dist.region_mass(spec, IntervalSet([(0.0, 0.2)])) == pytest.approx(0.2)
        # The open gap carries no mass.
        assert dist.region_mass(spec, IntervalSet([(0.21, 0.29)])) == pytest.approx(0.0)
        assert dist.region_mass(spec, AllSet()) == 1.0

    def test_empirical_spike_fraction(self, rng):
        spec = dist.IntervalWithGap(x=0.5, eps_gap=0.2, spike_point=3.0)
        pts = dist.sample_many(spec, rng, 100_000).ravel()
        frac = np.mean(pts == 3.0)
        assert frac == pytest.approx(0.2, abs=4 * math.sqrt(0.2 * 0.8 / 100_000))


class TestHeavyBoundaryCircle:
    def test_boundary_fraction(self, rng):
        spec = dist.HeavyBoundaryCircle(0.1)
        pts = dist.sample_many(spec, rng, 100_000)
        r = np.linalg.norm(pts, axis=1)
        frac_boundary = np.mean(np.abs(r - 1) < 1e-12)
        assert frac_boundary == pytest.approx(0.9, abs=0.01)

    def test_support(self):
        spec = dist.HeavyBoundaryCircle(0.1)
        assert dist.support_contains(spec, np.array([0.0, 1.0]))
        assert not dist.support_contains(spec, np.array([0.0, 1.01]))
        assert dist.support_contains(spec, np.array([0.2, 0.2]))
        # With no interior mass the support is only the circle itself.
        rim_only = dist.HeavyBoundaryCircle(0.0)
        assert dist.support_contains(rim_only, np.array([0.0, 1.0]))
        assert not dist.support_contains(rim_only, np.array([0.2, 0.2]))

    def test_interior_mass_is_lam(self):
        spec = dist.HeavyBoundaryCircle(0.17)
        open_interior = BallUnion(np.zeros((1, 2)), 1.0 - 1e-9)
        assert dist.region_mass(spec, open_interior) == pytest.approx(0.17, abs=1e-7)
        assert dist.region_mass(spec, BallUnion(np.zeros((1, 2)), 1.0)) == 1.0
        assert dist.region_mass(spec, BallUnion(np.zeros((1, 2)), 0.5)) == \
            pytest.approx(0.17 * 0.25)


class TestHeavyBoundaryWedge:
    def test_kappa_closed_form(self):
        spec = dist.HeavyBoundaryWedgeGap(theta=0.3, eps_angle=0.4, lam=0.2)
        e = 0.4
        expected = 0.8 * e / (2 * math.pi) + 0.2 * (e - math.sin(e)) / (2 * math.pi)
        assert spec.kappa == pytest.approx(expected, abs=1e-12)

    def test_samples_avoid_smaller_region(self, rng):
        spec = dist.HeavyBoundaryWedgeGap(theta=1.0, eps_angle=0.5, lam=0.3)
        pts = dist.sample_many(spec, rng, 20_000)
        not_spike = ~np.all(np.abs(pts - spec.spike_point) < 1e-12, axis=1)
        assert not spec.in_smaller_region(pts[not_spike]).any()

    def test_empirical_spike_fraction(self, rng):
        spec = dist.HeavyBoundaryWedgeGap(theta=0.0, eps_angle=1.5, lam=0.5)
        pts = dist.sample_many(spec, rng, 100_000)
        frac = np.mean(np.all(np.abs(pts - spec.spike_point) < 1e-12, axis=1))
        assert frac == pytest.approx(spec.kappa,
                                     abs=4 * math.sqrt(spec.kappa / 100_000) + 1e-3)

    def test_spike_region_mass(self):
        spec = dist.HeavyBoundaryWedgeGap(theta=0.0, eps_angle=0.6, lam=0.1)
        got = dist.region_mass(spec, FiniteSet([spec.spike_point]))
        assert got == pytest.approx(spec.kappa)


class TestNaturalsGeom:
    def test_pmf_normalizes_and_kills_m(self):
        spec = dist.NaturalsGeom(n=4, m=2)
        total = sum(spec.pmf(x) for x in range(1, 200))
        assert total == pytest.approx(1.0, abs=1e-9)
        assert spec.pmf(2) == 0.0

    def test_empirical_pmf_matches(self, rng):
        # Tail decays as 2^(n - x): for n = 2, m = 1 the law is
        # {2: 1/2, 3: 1/4, 4: 1/8, ...}.
        spec = dist.NaturalsGeom(n=2, m=1)
        pts = dist.sample_many(spec, rng, 200_000)
        for x, p in ((2, 0.5), (3, 0.25), (4, 0.125)):
            emp = np.mean(pts == x)
            assert emp == pytest.approx(p, abs=4 * math.sqrt(p * (1 - p) / 200_000))
        assert not (pts == 1).any()

    def test_interval_mass_closed_form(self, rng):
        spec = dist.NaturalsGeom(n=5, m=3)
        region = IntervalSet([(2.0, 7.0)])
        # Oracle: direct pmf summation.
        expected = sum(spec.pmf(x) for x in range(2, 8))
        assert dist.region_mass(spec, region) == pytest.approx(expected, abs=1e-12)
        assert dist.region_mass(spec, FiniteSet([3])) == 0.0
        assert dist.region_mass(spec, Complement(FiniteSet([3]))) == pytest.approx(1.0)


class TestHolderPiecewise:
    def test_density_slope_capped_and_integrates_to_one(self):
        spec = dist.HolderPiecewise1D(((0.0, 3.0), (10.0, 13.0)),
                                      np.array([0.6, 0.4]), grad_cap=1.0)
        xs = np.arange(-1.0, 14.0, 1e-3)
        f = spec.density(xs)
        slopes = np.abs(np.diff(f) / 1e-3)
        assert slopes.max() <= 1.0 + 1e-6
        assert np.trapezoid(f, xs) == pytest.approx(1.0, abs=1e-6)
        # Vanishes at interval endpoints.
        for edge in (0.0, 3.0, 10.0, 13.0):
            assert spec.density(np.array([edge]))[0] == 0.0

    def test_slope_cap_enforced(self):
        with pytest.raises(ValueError, match="slope"):
            dist.HolderPiecewise1D(((0.0, 1.0),), np.array([1.0]), grad_cap=1.0)

    def test_cdf_matches_quadrature(self, rng):
        spec = dist.HolderPiecewise1D(((0.0, 3.0),), np.array([1.0]), grad_cap=1.0)
        for x in rng.uniform(-0.5, 3.5, size=20):
            xs = np.linspace(-1, x, 40_001)
            quad = np.trapezoid(spec.density(xs), xs)
            assert spec.cdf(float(x)) == pytest.approx(quad, abs=1e-6)

    def test_region_mass_exact_vs_empirical(self, rng):
        spec = dist.HolderPiecewise1D(((0.0, 3.0), (10.0, 13.0)),
                                      np.array([0.6, 0.4]), grad_cap=1.0)
        region = IntervalSet([(1.0, 2.5), (11.0, 12.0)])
        exact = dist.region_mass(spec, region)
        pts = dist.sample_many(spec, rng, 200_000).ravel()
        emp = np.mean(region.contains_many(pts))
        assert exact == pytest.approx(emp, abs=4 * math.sqrt(0.25 / 200_000) + 1e-3)


class TestMixture:
    def test_component_frequencies(self, rng):
        spec = ALL_SPECS["mixture"]()
        pts = dist.sample_many(spec, rng, 100_000).ravel()
        frac_first = np.mean(pts <= 1.0)
        assert frac_first == pytest.approx(0.7, abs=4 * math.sqrt(0.21 / 100_000))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            dist.Mixture(((0.5, dist.PointMass(1)), (0.6, dist.PointMass(2))))


class TestRegionMassAgainstMonteCarlo:
    CASES = [
        ("uniform_box", lambda: IntervalSet([(0.1, 0.4)]), None),
        ("interval_with_gap", lambda: IntervalSet([(0.0, 0.5)]), None),
        ("holder", lambda: IntervalSet([(0.5, 2.0)]), None),
        ("naturals_geom", lambda: FiniteSet([1, 3, 4, 7]), None),
        ("finite_support", lambda: FiniteSet([2, 5]), None),
        ("trunc_gauss", lambda: BallUnion(np.zeros((1, 2)), 1.5), None),
        ("uniform_annulus", lambda: BallUnion(np.zeros((1, 2)), 1.5), None),
    ]

    @pytest.mark.parametrize("name,region_fn,_", CASES)
    def test_exact_matches_empirical_within_4_sigma(self, name, region_fn, _, rng):
        spec = ALL_SPECS[name]() if name != "uniform_box" else \
            dist.UniformBox(np.array([0.0]), np.array([1.0]))
        region = region_fn()
        exact = dist.region_mass(spec, region)
        assert exact is not None
        m = 100_000
        pts = dist.sample_many(spec, rng, m)
        if pts.ndim == 1:
            emp = np.mean([region.contains(int(x)) for x in pts[:20000]])
            m = 20_000
        else:
            emp = np.mean(region.contains_many(pts))
        sigma = math.sqrt(max(exact * (1 - exact), 1e-4) / m)
        assert emp == pytest.approx(exact, abs=4 * sigma + 1e-3)

    def test_unavailable_is_none_not_error(self):
        spec = dist.HeavyBoundaryCircle(0.1)
        # An off-center ball has no closed form against this spec.
        assert dist.region_mass(spec, BallUnion(np.array([[0.5, 0.0]]), 0.1)) is None

    def test_box_cube_union_mass(self, rng):
        spec = dist.UniformBox(np.zeros(2), np.ones(2))
        grid = grid_cover(np.array([0.5, 0.5]), R=1.0, tau=0.6, n=2)
        cells = [(i, j) for i in range(2) for j in range(2)]
        region = CubeUnion(grid, cells)
        exact = dist.region_mass(spec, region)
        pts = dist.sample_many(spec, rng, 200_000)
        emp = np.mean(region.contains_many(pts))
        assert exact == pytest.approx(emp, abs=0.005)

    def test_complement_and_trivial(self):
        spec = dist.UniformBox(np.array([0.0]), np.array([1.0]))
        region = IntervalSet([(0.0, 0.25)])
        assert dist.region_mass(spec, Complement(region)) == pytest.approx(0.75)
        assert dist.region_mass(spec, AllSet()) == 1.0
        assert dist.region_mass(spec, EmptySet()) == 0.0


class TestJsonRoundTrip:
    @pytest.mark.parametrize("name", sorted(ALL_SPECS))
    def test_round_trip(self, name, rng):
        spec = ALL_SPECS[name]()
        encoded = json.dumps(dist.to_json(spec))
        back = dist.from_json(json.loads(encoded))
        assert type(back) is type(spec)
        a = dist.sample_many(spec, np.random.default_rng(3), 20)
        b = dist.sample_many(back, np.random.default_rng(3), 20)
        assert np.array_equal(a, b)
