"""A C^1 curve whose second derivative fails to exist on a dense set.

``t(x) = 1 + sum of c_n over the points a_n < x`` is a step function with a
jump at every point of a dense countable set; ``v`` is its integral and ``f``
the integral of ``v``. We keep the first ``N`` terms, which makes ``t_N``
piecewise constant, ``v_N`` piecewise linear and ``f_N`` piecewise quadratic,
and carry a rigorous bound on the discarded tail.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator

import numpy as np

from .curves import EXACT_ELEMENTARY, Curve, Interval


def calkin_wilf() -> Iterator[Fraction]:
    """All positive rationals, each exactly once: 1, 1/2, 2, 1/3, 3/2, 2/3, 3, ..."""
    q = Fraction(1)
    while True:
        yield q
        q = 1 / (2 * math.floor(q) - q + 1)


def calkin_wilf_points(x1, x2) -> Iterator[Fraction]:
    """Calkin-Wilf order pushed into ``(x1, x2)`` by ``r -> x1 + (x2 - x1) r / (1 + r)``."""
    a, b = Fraction(x1), Fraction(x2)
    for r in calkin_wilf():
        yield a + (b - a) * r / (1 + r)


WEIGHT_SCHEMES: dict[str, tuple[Callable[[int], Fraction], Callable[[int], Fraction]]] = {
    # c_n = n^-2: sum_{n>N} n^-2 < integral_N^inf dt/t^2 = 1/N
    "inverse-square": (lambda n: Fraction(1, n * n), lambda N: Fraction(1, N) if N else Fraction(2)),
    "geometric": (lambda n: Fraction(1, 2**n), lambda N: Fraction(1, 2**N)),
}


@dataclass(frozen=True)
class DenseSetSpec:
    """Enumeration ``n -> a_n`` of a dense subset of ``(x1, x2)`` with summable weights ``c_n``."""

    interval: Interval
    scheme: str = "inverse-square"
    points: Callable[[object, object], Iterator[Fraction]] = calkin_wilf_points

    def __post_init__(self):
        if self.scheme not in WEIGHT_SCHEMES:
            raise ValueError(f"unknown weight scheme {self.scheme!r}; choose from {sorted(WEIGHT_SCHEMES)}")

    def enumerate(self, count: int) -> list[Fraction]:
        it = self.points(self.interval.lo, self.interval.hi)
        return [next(it) for _ in range(count)]

    def weight(self, n: int) -> Fraction:
        return WEIGHT_SCHEMES[self.scheme][0](n)

    def tail_bound(self, N: int) -> Fraction:
        return WEIGHT_SCHEMES[self.scheme][1](N)


@dataclass(frozen=True)
class TruncatedSingular:
    spec: DenseSetSpec
    N: int
    breakpoints: tuple[tuple[Fraction, Fraction], ...] = field(repr=False)
    T_N: Fraction = field(repr=False)
    tail: Fraction

    @classmethod
    def build(cls, spec: DenseSetSpec, N: int) -> "TruncatedSingular":
        if N < 0:
            raise ValueError("N must be non-negative")
        pts = spec.enumerate(N)
        weights = [spec.weight(n) for n in range(1, N + 1)]
        bps = tuple(sorted(zip(pts, weights)))
        return cls(spec, N, bps, sum(weights, Fraction(0)), spec.tail_bound(N))

    @property
    def x1(self):
        return self.spec.interval.lo

    @property
    def x2(self):
        return self.spec.interval.hi

    def point(self, k: int) -> Fraction:
        """``a_k`` in enumeration order (1-based)."""
        if not 1 <= k <= self.N:
            raise IndexError(f"k={k} outside 1..{self.N}")
        return self._by_index[k - 1]

    @cached_property
    def _by_index(self) -> list[Fraction]:
        return self.spec.enumerate(self.N)

    # float tables: knots s_0 = x1, s_j = j-th breakpoint; T_j, V_j, F_j at s_j
    @cached_property
    def _float_tables(self):
        b = np.array([float(a) for a, _ in self.breakpoints])
        w = np.array([float(c) for _, c in self.breakpoints])
        knots = np.concatenate(([float(self.x1)], b))
        T = 1.0 + np.concatenate(([0.0], np.cumsum(w)))
        gaps = np.diff(knots)
        V = np.concatenate(([0.0], np.cumsum(T[:-1] * gaps)))
        F = np.concatenate(([0.0], np.cumsum(V[:-1] * gaps + T[:-1] * gaps**2 / 2)))
        return b, knots, T, V, F

    @cached_property
    def _exact_tables(self):
        b = [a for a, _ in self.breakpoints]
        knots = [Fraction(self.x1)] + b
        T, V, F = [Fraction(1)], [Fraction(0)], [Fraction(0)]
        for j, (_, c) in enumerate(self.breakpoints):
            gap = knots[j + 1] - knots[j]
            F.append(F[j] + V[j] * gap + T[j] * gap * gap / 2)
            V.append(V[j] + T[j] * gap)
            T.append(T[j] + c)
        return b, knots, T, V, F

    def _check(self, x):
        if not self.x1 <= x <= self.x2:
            raise ValueError(f"x={x} outside [{self.x1}, {self.x2}]")

    def _locate(self, x):
        if isinstance(x, Fraction):
            b, knots, T, V, F = self._exact_tables
            j = bisect.bisect_left(b, x)
        else:
            b, knots, T, V, F = self._float_tables
            j = np.searchsorted(b, x, side="left")
        return j, x - knots[j], T[j], V[j], F[j]

    def t_eval(self, x) -> tuple:
        """``t_N(x)`` (breakpoints strictly below ``x``) and the tail bound."""
        self._check(x)
        _, _, T, _, _ = self._locate(x)
        return T, self.tail

    def v_eval(self, x) -> tuple:
        self._check(x)
        _, dx, T, V, _ = self._locate(x)
        return V + T * dx, self.tail * (x - self.x1)

    def f_eval(self, x) -> tuple:
        self._check(x)
        _, dx, T, V, F = self._locate(x)
        return F + V * dx + T * dx * dx / 2, self.tail * (x - self.x1) ** 2 / 2

    def _float_eval(self, x, which: str):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any((xs < float(self.x1)) | (xs > float(self.x2))):
            raise ValueError("evaluation outside the construction interval")
        b, knots, T, V, F = self._float_tables
        j = np.searchsorted(b, xs, side="left")
        dx = xs - knots[j]
        out = {"t": T[j], "v": V[j] + T[j] * dx, "f": F[j] + V[j] * dx + T[j] * dx * dx / 2}[which]
        return float(out[0]) if scalar else out

    def curve(self) -> Curve:
        """Curve adapter: ``d1 = v_N`` and ``d2 = t_N``; exact on rationals."""
        return Curve(
            lambda x: self._float_eval(x, "f"),
            Interval(self.x1, self.x2),
            d1=lambda x: self._float_eval(x, "v"),
            d2=lambda x: self._float_eval(x, "t"),
            kind=EXACT_ELEMENTARY,
            exact=lambda x: self.f_eval(Fraction(x))[0],
            c1=1.0,
            c2=float(1 + self.T_N + self.tail),
            vectorized=True,
            name=f"pathological(N={self.N},{self.spec.scheme})",
        )

    def jump_probe(self, k: int, delta, exact: bool = False) -> float:
        """One-sided slope difference of ``v_N`` at ``a_k``; equals ``c_k`` once the window is clean."""
        a = self.point(k)
        d = Fraction(delta)
        if d <= 0:
            raise ValueError("delta must be positive")
        b = [p for p, _ in self.breakpoints]
        lo, hi = bisect.bisect_right(b, a - d), bisect.bisect_left(b, a + d)
        for p in b[lo:hi]:
            if p != a:
                raise ValueError(f"window ({float(a - d)}, {float(a + d)}) contains breakpoint {p} ({float(p)})")
        if exact:
            v = lambda x: self.v_eval(x)[0]  # noqa: E731
            return float((v(a + d) - 2 * v(a) + v(a - d)) / d)
        af, df = float(a), float(delta)
        vp, v0, vm = (self._float_eval(af + df, "v"), self._float_eval(af, "v"), self._float_eval(af - df, "v"))
        return ((vp - v0) - (v0 - vm)) / df


def build(x1, x2, N: int, scheme: str = "inverse-square") -> TruncatedSingular:
    return TruncatedSingular.build(DenseSetSpec(Interval(Fraction(x1), Fraction(x2)), scheme), N)
