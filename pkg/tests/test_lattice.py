import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ratnear.bounds import km_constants, thm9_bound
from ratnear.counting import CountParams, enumerate_R
from ratnear.curves import Curve, Interval, Polynomial, battery
from ratnear.errors import GuardError, ValidationError
from ratnear.lattice import (
    NO_POINT,
    OK,
    RELAXED,
    SMALL_Q,
    GMap,
    KMParams,
    LatticeBasis,
    PipelineConstants,
    attach_point_pipeline,
    bg_brute_force,
    bg_measure_estimate,
    bg_membership,
    h_matrix,
    lattice_norm,
    localization_bound,
    minkowski_solve,
    skew_gradient,
    wedge,
    wedge_components,
)

F = Fraction
HALF_X2 = Polynomial([0, 0, F(1, 2)]).curve(Interval(F(-1), F(1)), name="x^2/2")
X2 = Polynomial([0, 0, 1]).curve(Interval(F(0), F(1)), name="x^2")
UNIT = KMParams(1.0, 1.0, 1.0, Interval(0, 1))


def sin_curve():
    return Curve(lambda x: -np.sin(x), Interval(0.5, 2.5), d1=lambda x: -np.cos(x), d2=np.sin,
                 vectorized=True, name="-sin")


def random_params(rng):
    return KMParams(float(rng.uniform(0.01, 1)), float(rng.uniform(0.05, 3)), float(rng.uniform(1.1, 20)), Interval(0, 1))


class TestGMap:
    def test_G0_half_parabola(self):
        G = GMap(HALF_X2).G(0.0)
        assert np.array_equal(G, [[0, 0, 1], [0, -1, 0], [1, 0, 0]])

    @pytest.mark.parametrize("curve", [X2, sin_curve()], ids=["x2", "sin"])
    def test_derivatives_match_finite_differences(self, curve):
        g = GMap(curve)
        h = 1e-5
        for x in np.linspace(float(curve.domain.lo) + 0.1, float(curve.domain.hi) - 0.1, 9):
            fd1 = (g.g1(x + h) - g.g1(x - h)) / (2 * h)
            fd2 = (g.g2(x + h) - g.g2(x - h)) / (2 * h)
            assert fd1 == pytest.approx(g.g1d(x), rel=1e-6, abs=1e-8)
            assert fd2 == pytest.approx(g.g2d(x), rel=1e-6, abs=1e-8)

    def test_extended_outside_domain(self):
        g = GMap(X2)
        assert g.f2(5.0) == pytest.approx(2.0)
        assert math.isfinite(g.g1(-26.0))


class TestKMParams:
    @given(st.floats(1e-3, 1), st.floats(1e-3, 10), st.floats(1.01, 100))
    def test_t_product_unit(self, d, K, T):
        t = KMParams(d, K, T, Interval(0, 1)).t
        assert t[0] * t[1] * t[2] == pytest.approx(1.0, rel=1e-12)

    def test_checklist(self):
        assert all(ok for _, ok in KMParams(0.1, 0.1, 10, Interval(0, 1)).checklist())
        names = {n for n, ok in KMParams(2.0, 1, 10, Interval(0, 1)).checklist() if not ok}
        assert names == {"0<delta<=1", "delta*K*T<=1"}

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            KMParams(0, 1, 2, Interval(0, 1))


class TestHMatrix:
    @pytest.mark.parametrize("curve", [X2, sin_curve()], ids=["x2", "sin"])
    def test_det_is_plus_f2(self, curve):
        # expanding along the last row gives det G_x = -g2'(x) = f''(x)
        rng = np.random.default_rng(1)
        g = GMap(curve)
        for _ in range(100):
            x = float(rng.uniform(float(curve.domain.lo), float(curve.domain.hi)))
            d = np.linalg.det(h_matrix(g, x, random_params(rng)))
            assert d == pytest.approx(float(g.f2(x)), rel=1e-9), x

    def test_unit_scaling_determinant(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            assert abs(np.linalg.det(np.diag(random_params(rng).t))) == pytest.approx(1.0, rel=1e-12)


class TestLatticeNorm:
    def test_rank_one_e3(self):
        p = KMParams(0.1, 0.5, 4.0, Interval(0, 1))
        h = h_matrix(GMap(X2), 0.3, p)
        assert np.allclose(h @ np.array([0, 0, 1.0]), [p.t[0], 0, 0])
        assert lattice_norm(h, LatticeBasis(((0, 0, 1),))) == pytest.approx(p.t[0])

    def test_rank_three(self):
        g = GMap(sin_curve())
        h = h_matrix(g, 1.3, KMParams(0.2, 0.3, 5, Interval(0, 1)))
        std = LatticeBasis(((1, 0, 0), (0, 1, 0), (0, 0, 1)))
        assert lattice_norm(h, std) == pytest.approx(abs(math.sin(1.3)), rel=1e-9)
        assert lattice_norm(h, std) >= 0.47

    def test_rank_three_scaled_by_index(self):
        h = h_matrix(GMap(X2), 0.4, UNIT)
        basis = LatticeBasis(((2, 0, 0), (0, 1, 0), (0, 1, 3)))
        assert lattice_norm(h, basis) == pytest.approx(2 * 6)

    def test_rank_two_two_ways(self):
        rng = np.random.default_rng(5)
        g = GMap(sin_curve())
        for _ in range(100):
            u, w = (tuple(int(v) for v in rng.integers(-4, 5, 3)) for _ in range(2))
            if not np.any(wedge(u, w)):
                continue
            x, p = float(rng.uniform(0.5, 2.5)), random_params(rng)
            h = h_matrix(g, x, p)
            minors = wedge(h @ np.array(u, float), h @ np.array(w, float))
            closed = wedge_components(g, x, p, u, w)
            assert np.allclose(minors, closed, rtol=1e-9, atol=1e-9 * np.max(np.abs(minors)))
            assert lattice_norm(h, LatticeBasis((u, w))) == pytest.approx(np.max(np.abs(closed)), rel=1e-9)

    def test_dependent_basis_rejected(self):
        with pytest.raises(ValidationError):
            LatticeBasis(((1, 2, 3), (2, 4, 6)))
        with pytest.raises(ValidationError):
            LatticeBasis(((1.5, 0, 0),))

    def test_degenerate_image_flagged(self):
        h = np.diag([1.0, 1.0, 0.0])
        with pytest.raises(GuardError):
            lattice_norm(h, LatticeBasis(((0, 0, 1),)))


class TestSkewGradient:
    def test_hand_case_e23(self):
        assert list(wedge((0, 1, 0), (0, 0, 1))) == [0, 0, 1]
        via_det, via_formula = skew_gradient(GMap(HALF_X2), (0, 1, 0), (0, 0, 1), 0.3)
        assert via_formula == pytest.approx(1.0)
        assert via_det == pytest.approx(1.0)

    def test_hand_case_e12(self):
        # e1 ^ e2 is the first wedge coordinate, so the value is f'' f
        assert list(wedge((1, 0, 0), (0, 1, 0))) == [1, 0, 0]
        via_det, via_formula = skew_gradient(GMap(HALF_X2), (1, 0, 0), (0, 1, 0), 0.3)
        assert via_formula == pytest.approx(0.045)
        assert via_det == pytest.approx(0.045)

    def test_ghat_wedge(self):
        g = GMap(HALF_X2)
        x = 0.7
        assert np.allclose(wedge(g.ghat(x), g.ghat_d(x)), [g.f(x), -x, 1.0])

    def test_parallel_rejected(self):
        with pytest.raises(ValidationError):
            skew_gradient(GMap(X2), (1, 2, 3), (1, 2, 3), 0.5)
        with pytest.raises(ValidationError):
            skew_gradient(GMap(X2), (1, 2, 3), (-2, -4, -6), 0.5)

    @pytest.mark.parametrize("curve", battery(), ids=lambda c: c.name)
    def test_identity_on_battery(self, curve):
        rng = np.random.default_rng(11)
        g = GMap(curve)
        lo, hi = float(curve.domain.lo), float(curve.domain.hi)
        for _ in range(200):
            u, w = (rng.integers(-6, 7, 3) for _ in range(2))
            if not np.any(wedge(u, w)):
                continue
            via_det, via_formula = skew_gradient(g, u, w, float(rng.uniform(lo, hi)))
            assert abs(via_det - via_formula) <= 1e-9 * (1 + abs(via_det)) * (1 + np.max(np.abs(np.r_[u, w]))) ** 2


class TestBg:
    @pytest.mark.parametrize("x", [0.0, 0.37, 1.0])
    def test_delta_at_least_one(self, x):
        p = KMParams(1.0, 0.01, 2.0, Interval(0, 1))
        sol = bg_membership(GMap(X2), x, p)
        assert sol is not None
        assert bg_measure_estimate(GMap(X2), p, 100).fraction == 1.0

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        curve = X2 if seed % 2 else sin_curve()
        g = GMap(curve)
        x = float(rng.uniform(float(curve.domain.lo), float(curve.domain.hi)))
        p = KMParams(float(rng.uniform(0.01, 0.6)), float(rng.uniform(0.05, 2)), float(rng.uniform(1.1, 5)),
                     Interval(0, 1))
        assert bg_membership(g, x, p) == bg_brute_force(g, x, p), f"seed {seed} x={x} {p}"

    def test_solution_satisfies_system(self):
        g = GMap(sin_curve())
        p = KMParams(0.05, 0.4, 5.0, Interval(0.5, 2.5))
        for x in np.linspace(0.6, 2.4, 40):
            sol = bg_membership(g, float(x), p)
            if sol is None:
                continue
            q, p1, p2 = sol
            assert abs(q * g.g1(x) + p1 * g.g2(x) + p2) <= p.delta * (1 + 1e-9)
            assert abs(q * g.g1d(x) + p1 * g.g2d(x)) <= p.K * (1 + 1e-9)
            assert abs(q) <= p.T

    def test_delta_ladder_monotone(self):
        g = GMap(X2)
        fractions = [bg_measure_estimate(g, KMParams(d, 0.3, 8.0, Interval(0, 1)), 200).fraction
                     for d in (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01)]
        assert fractions == sorted(fractions, reverse=True), fractions

    def test_grid_guard(self):
        with pytest.raises(ValidationError):
            bg_measure_estimate(GMap(X2), UNIT, 50)

    @pytest.mark.parametrize("delta,K,T", [(0.1, 0.1, 10.0), (0.01, 0.5, 50.0), (0.001, 0.01, 100.0)])
    def test_measure_below_bound(self, delta, K, T):
        J = Interval(0, 1)
        est = bg_measure_estimate(GMap(X2), KMParams(delta, K, T, J), 200)
        kc = km_constants(2, 2, 1, J, delta, K, T)
        assert est.measure(J) <= min(float(J.length()), thm9_bound(kc)) + est.half_width


class TestMinkowski:
    def test_existence_when_guaranteed(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = float(rng.uniform(0, 1))
            Q = int(rng.integers(10, 300))
            delta = float(rng.uniform(0.05, 1))
            # c2 = 2 = |f''| makes the box volume equal |det G_x|
            sol = minkowski_solve(GMap(X2), x, Q, delta, 0.1, 2.0)
            assert sol is not None, (x, Q, delta)
            q, p1, p2 = sol
            assert 0 <= q <= Q and math.gcd(math.gcd(q, p1), p2) == 1

    def test_localization(self):
        rng = np.random.default_rng(4)
        c0, c1, c2 = 0.1, 2.0, 2.0
        checked = 0
        for _ in range(100):
            x, Q, delta = float(rng.uniform(0, 1)), int(rng.integers(20, 300)), float(rng.uniform(0.05, 1))
            q, p1, _ = minkowski_solve(GMap(X2), x, Q, delta, c0, c2)
            if q > 2 * c0 * Q:
                checked += 1
                assert abs(x - p1 / q) <= c2 / (2 * c1 * c0**2 * Q**2 * delta) * (1 + 1e-9)
        assert checked > 10

    def test_q_zero_branch(self):
        # a generous first row makes (0, 0, -1) the first hit in (q, p1, p2) ascending order
        sol = minkowski_solve(GMap(X2), 0.3, 5, 10.0, 0.2, 2.0)
        assert sol == (0, 0, -1)

    def test_q_zero_with_p1(self):
        g = GMap(X2)
        x = 0.25
        sol = minkowski_solve(g, x, 3, 20.0, 0.1, 200.0)
        q, p1, p2 = sol
        assert q == 0 and abs(p1 * g.g2(x) + p2) <= 2.0

    def test_guard(self):
        with pytest.raises(GuardError):
            minkowski_solve(GMap(X2), 0.5, 10, 1e-9, 1e-3, 1.0)


class TestPipeline:
    def run_grid(self, n=200):
        J = Interval(F(0), F(1, 2))
        curve = Polynomial([0, 0, 1]).curve(J, name="x^2")
        consts = PipelineConstants.relaxed(0.1, 2.0, 2.0, C1=50.0)
        g = GMap(curve)
        xs = [(k + 0.5) / (2 * n) for k in range(n)]
        return curve, J, consts, [attach_point_pipeline(curve, x, 100, F(1, 2), consts, J=J, g=g) for x in xs]

    def test_triples_confirmed_by_enumeration(self):
        curve, J, consts, results = self.run_grid()
        R = set(enumerate_R(curve, CountParams(100, F(1, 2), J, F(consts.c0))))
        ok = [r for r in results if r.ok]
        assert ok
        assert all(r.triple in R for r in ok)
        assert all(r.constants == RELAXED for r in results)

    def test_localization(self):
        _, _, consts, results = self.run_grid()
        bound = localization_bound(consts, 100, 0.5)
        assert bound == pytest.approx(0.01)
        assert all(r.localization <= bound for r in results if r.ok)

    def test_stage_tags(self):
        _, _, _, results = self.run_grid()
        assert {r.stage for r in results} <= {OK, SMALL_Q, NO_POINT}
        assert all((r.triple is not None) == r.ok for r in results)

    def test_reproducible(self):
        assert self.run_grid(50)[3] == self.run_grid(50)[3]

    def test_paper_constants_mode(self):
        consts = PipelineConstants.paper(1.0, 1.0)
        assert consts.c0 == pytest.approx(7.574e-31, rel=1e-3)
        assert localization_bound(consts, 10, 1) == pytest.approx(consts.C1 / 100)

    def test_relaxed_default_C1(self):
        c = PipelineConstants.relaxed(0.1, 2.0, 2.0)
        assert c.C1 == pytest.approx(2.0 / (2 * 2.0 * 0.01))
        with pytest.raises(ValidationError):
            PipelineConstants.relaxed(0, 1, 1)
