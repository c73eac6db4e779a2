import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate as sci_integrate

from ratnear.curves import (
    Curve,
    Interval,
    Polynomial,
    battery,
    check_second_derivative_class,
)
from ratnear.mollify import (
    MollifySpec,
    bump,
    bump_d1,
    bump_d2,
    bump_mass,
    choose_epsilon,
    extend_constant,
    modulus_of_continuity,
    mollify,
)

# reference constant, agreed by scipy's adaptive quad and composite Simpson at 2*10^4 panels
BUMP_MASS = 0.0843896007480974


class TestBump:
    def test_centre(self):
        assert bump(0.0) == pytest.approx(math.exp(-2), rel=1e-15)

    def test_support(self):
        assert bump(1.0) == 0.0 and bump(-1.0) == 0.0 and bump(5.0) == 0.0

    def test_half(self):
        assert bump(0.5) == pytest.approx(math.exp(-4 - 4 / 9), rel=1e-14)
        assert bump(0.5) == pytest.approx(0.0117436, rel=1e-5)

    def test_range(self):
        xs = np.linspace(-1.5, 1.5, 3001)
        ys = bump(xs)
        assert ys.min() >= 0 and ys.max() <= math.exp(-2) + 1e-17

    def test_kernel_derivatives(self):
        xs = np.linspace(-0.95, 0.95, 41)
        h = 1e-6
        np.testing.assert_allclose(bump_d1(xs), (bump(xs + h) - bump(xs - h)) / (2 * h), atol=1e-7)
        np.testing.assert_allclose(bump_d2(xs), (bump_d1(xs + h) - bump_d1(xs - h)) / (2 * h), atol=1e-6)


class TestMass:
    def test_bounds(self):
        w = bump_mass()
        assert 0 < w < 2 * math.exp(-2)

    def test_dual_quadrature(self):
        w = bump_mass()
        adaptive, _ = sci_integrate.quad(bump, -1, 1, epsabs=1e-15, epsrel=1e-13, limit=200)
        xs = np.linspace(-1, 1, 20001)
        simpson = sci_integrate.simpson(bump(xs), x=xs)
        assert w == pytest.approx(adaptive, rel=1e-10)
        assert w == pytest.approx(simpson, rel=1e-10)
        assert w == pytest.approx(BUMP_MASS, rel=1e-12)


class TestExtendConstant:
    def test_endpoint_values(self):
        fh = extend_constant(Polynomial([0, 0, 1]).curve(Interval(0, 1)))
        assert fh.eval(-3.0) == 0.0 and fh.eval(2.0) == 1.0
        assert fh.eval(0.5) == 0.25

    def test_continuity_and_sup(self):
        fh = extend_constant(Polynomial([1, -2, 1]).curve(Interval(0, 2)))
        for z in (0.0, 2.0):
            assert fh.eval(z - 1e-12) == pytest.approx(fh.eval(z + 1e-12), abs=1e-11)
        xs = np.linspace(-5, 7, 2001)
        assert np.max(np.abs(fh.eval_array(xs))) == pytest.approx(1.0)


class TestMollified:
    def test_affine_is_reproduced(self):
        f = Polynomial([Fraction(1, 3), 2]).curve(Interval(-1, 1))
        fe = mollify(extend_constant(f), MollifySpec(0.05))
        xs = np.linspace(-0.9, 0.9, 31)
        assert np.max(np.abs(fe.eval_array(xs) - f.eval_array(xs))) <= 1e-10

    def test_parabola(self):
        t0 = time.perf_counter()
        f = Polynomial([0, 0, 1]).curve(Interval(-1, 1))
        fe = mollify(extend_constant(f), MollifySpec(0.01, 512))
        xs = np.linspace(-0.9, 0.9, 1001)
        assert np.max(np.abs(fe.eval_array(xs) - xs**2)) <= 0.021
        d2 = fe.d2_array(xs)
        assert d2.min() >= 1.99 and d2.max() <= 2.01
        assert time.perf_counter() - t0 < 5

    @pytest.mark.parametrize("curve", battery(), ids=lambda c: c.name)
    @pytest.mark.parametrize("eps", [0.1, 0.01])
    def test_uniform_closeness(self, curve, eps):
        fh = extend_constant(curve)
        fe = mollify(fh, MollifySpec(eps))
        xs = curve.domain.linspace(201)
        omega = modulus_of_continuity(fh, curve.domain, eps)
        assert np.max(np.abs(fe.eval_array(xs) - fh.eval_array(xs))) <= omega + 1e-8

    @pytest.mark.parametrize("curve", battery(), ids=lambda c: c.name)
    def test_class_preserved_on_shrunk_interval(self, curve):
        eps = 0.02
        fe = mollify(extend_constant(curve), MollifySpec(eps))
        inner = curve.domain.shrunk(2 * eps)
        tol = 1e-6
        rep = check_second_derivative_class(fe, inner, curve.c1 - tol, curve.c2 + tol, grid_n=101)
        assert rep.passed, f"{curve.name}: f_eps'' reached {rep.worst_quotient}"

    def test_kernel_d2_matches_finite_differences(self):
        f = battery()[6]
        fe = mollify(extend_constant(f), MollifySpec(0.05))
        rng = np.random.default_rng(5)
        for x in rng.uniform(0.1, 0.9, 50):
            h = 1e-3
            fd = (fe.eval(x + h) - 2 * fe.eval(x) + fe.eval(x - h)) / h**2
            assert fd == pytest.approx(fe.d2(x), abs=1e-5)

    def test_error_estimate_and_warning(self, caplog):
        f = Curve(np.abs, Interval(-1, 1), vectorized=True)
        fe = mollify(extend_constant(f), MollifySpec(0.3, quad_nodes=16, target_eta=1e-14))
        assert fe.error_estimate > 1e-14
        assert any("misses target" in r.message for r in caplog.records)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            MollifySpec(0.0)
        with pytest.raises(ValueError):
            MollifySpec(0.1, quad_nodes=8)


class TestChooseEpsilon:
    def test_parabola_modulus(self):
        f = extend_constant(Polynomial([0, 0, 1]).curve(Interval(-1, 1)))
        eps = choose_epsilon(f, Interval(-1, 1), 0.01)
        assert modulus_of_continuity(f, Interval(-1, 1), eps) < 0.01
        assert eps == pytest.approx(0.005, rel=0.05), "|x^2 - y^2| <= 2 eps near the ends"

    def test_rejects_non_positive_eta(self):
        f = extend_constant(Polynomial([0, 1]).curve(Interval(0, 1)))
        with pytest.raises(ValueError):
            choose_epsilon(f, Interval(0, 1), 0.0)
