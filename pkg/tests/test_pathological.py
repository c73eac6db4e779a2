from fractions import Fraction

import numpy as np
import pytest

from ratnear.curves import Interval, check_convexity_quotient, check_derivative_quotient
from ratnear.pathological import (
    DenseSetSpec,
    build,
    calkin_wilf,
    calkin_wilf_points,
)


class TestEnumeration:
    def test_calkin_wilf_prefix(self):
        it = calkin_wilf()
        got = [next(it) for _ in range(7)]
        assert got == [Fraction(1), Fraction(1, 2), Fraction(2), Fraction(1, 3), Fraction(3, 2), Fraction(2, 3), Fraction(3)]

    def test_points_distinct_and_inside(self):
        it = calkin_wilf_points(Fraction(-1), Fraction(2))
        pts = [next(it) for _ in range(3000)]
        assert len(set(pts)) == len(pts)
        assert all(-1 < p < 2 for p in pts)

    def test_points_dense(self):
        it = calkin_wilf_points(0, 1)
        pts = np.array([float(next(it)) for _ in range(5000)])
        inner = np.sort(pts[(pts > 0.2) & (pts < 0.8)])
        gap = np.max(np.diff(np.concatenate(([0.2], inner, [0.8]))))
        assert gap < 0.03, f"interior gap {gap}"
        assert pts.min() < pts[:1000].min(), "points keep approaching the endpoint"

    def test_tail_bound_dominates(self):
        spec = DenseSetSpec(Interval(Fraction(0), Fraction(1)))
        for N in (1, 10, 100):
            true_tail = sum(1 / n**2 for n in range(N + 1, 200000))
            assert spec.tail_bound(N) >= true_tail
        assert spec.tail_bound(10) > spec.tail_bound(11)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            DenseSetSpec(Interval(0, 1), scheme="harmonic")


class TestEvaluators:
    def test_below_every_breakpoint(self):
        ts = build(0, 1, 50)
        lowest = ts.breakpoints[0][0]
        assert ts.t_eval(lowest / 2)[0] == 1

    def test_above_every_breakpoint(self):
        ts = build(0, 1, 1000)
        value, err = ts.t_eval(Fraction(1))
        assert float(value) == pytest.approx(1 + sum(1 / n**2 for n in range(1, 1001)), rel=1e-14)
        assert float(value) == pytest.approx(2.6439, abs=1e-4)
        assert err <= Fraction(1, 1000)

    def test_strict_inequality_at_breakpoint(self):
        ts = build(0, 1, 20)
        a1 = ts.point(1)
        below = ts.t_eval(a1)[0]
        above = ts.t_eval(a1 + Fraction(1, 10**12))[0]
        assert above - below == 1, "c_1 joins only strictly to the right of a_1"

    def test_v_single_breakpoint(self):
        ts = build(0, 1, 1)
        a = ts.point(1)
        for x in (Fraction(1, 5), a, Fraction(9, 10)):
            assert ts.v_eval(x)[0] == x + max(x - a, 0)

    def test_start_values(self):
        ts = build(Fraction(1, 3), 2, 30)
        assert ts.v_eval(Fraction(1, 3))[0] == 0
        assert ts.f_eval(Fraction(1, 3))[0] == 0

    def test_no_breakpoints(self):
        ts = build(0, 1, 0)
        for x in (Fraction(1, 7), Fraction(1, 2), Fraction(1)):
            assert ts.f_eval(x)[0] == x * x / 2

    def test_v_increase_at_least_length(self):
        ts = build(0, 1, 100)
        assert ts.v_eval(Fraction(1))[0] - ts.v_eval(Fraction(0))[0] >= 1

    def test_float_and_exact_agree(self):
        ts = build(0, 1, 300)
        c = ts.curve()
        for x in (Fraction(1, 7), Fraction(2, 3), Fraction(99, 100)):
            assert c.eval(float(x)) == pytest.approx(float(ts.f_eval(x)[0]), rel=1e-13)
            assert c.exact_eval(x) == ts.f_eval(x)[0]

    def test_outside_rejected(self):
        with pytest.raises(ValueError):
            build(0, 1, 5).t_eval(Fraction(2))


class TestRefinement:
    def test_monotone_and_close(self):
        small, big = build(0, 1, 50), build(0, 1, 400)
        xs = np.linspace(0, 1, 401)
        assert np.all(big._float_eval(xs, "t") >= small._float_eval(xs, "t"))
        gap = np.max(np.abs(big._float_eval(xs, "f") - small._float_eval(xs, "f")))
        assert gap <= float(small.tail) / 2 + 1e-12

    def test_v_strictly_increasing(self):
        ts = build(0, 1, 500)
        rng = np.random.default_rng(2)
        a = np.sort(rng.uniform(0, 1, (1000, 2)), axis=1)
        a = a[a[:, 1] > a[:, 0]]
        assert np.all(ts._float_eval(a[:, 1], "v") > ts._float_eval(a[:, 0], "v"))

    @pytest.mark.parametrize("N", [10, 100, 1000])
    def test_class_membership(self, N):
        ts = build(0, 1, N)
        c2 = float(1 + ts.T_N + ts.tail)
        assert check_derivative_quotient(ts.curve(), Interval(0, 1), 1.0, c2).passed
        assert check_convexity_quotient(ts.curve(), Interval(0, 1), 1.0, c2).passed


class TestJumpProbe:
    def test_first_point(self):
        ts = build(0, 1, 2000)
        assert ts.jump_probe(1, Fraction(1, 10**6)) == pytest.approx(1.0, abs=float(ts.tail) + 1e-9)
        assert ts.jump_probe(1, Fraction(1, 10**6), exact=True) == 1.0

    def test_independent_of_window(self):
        ts = build(0, 1, 100)
        vals = {ts.jump_probe(7, Fraction(1, 10**k), exact=True) for k in (5, 6, 8)}
        assert vals == {1 / 49}

    def test_intruder_named(self):
        ts = build(0, 1, 100)
        with pytest.raises(ValueError, match="contains breakpoint"):
            ts.jump_probe(1, Fraction(1, 2))

    def test_non_breakpoint_window(self):
        ts = build(0, 1, 10)
        x = Fraction(1, 1000)
        assert all(p > x + Fraction(1, 10**4) for p, _ in ts.breakpoints)
        v = lambda y: ts.v_eval(y)[0]  # noqa: E731
        d = Fraction(1, 10**4)
        assert (v(x + d) - 2 * v(x) + v(x - d) if x - d >= 0 else 0) == 0
