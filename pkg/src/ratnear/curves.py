"""Curves, the second-derivative classes they live in, and domain extension."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable

import numpy as np

from ._numerics import EPS

EXACT_POLYNOMIAL = "exact-polynomial"
EXACT_ELEMENTARY = "exact-elementary"
SAMPLED = "sampled"
KINDS = (EXACT_POLYNOMIAL, EXACT_ELEMENTARY, SAMPLED)

D1_STEP = 1e-5
# d2 by central differences loses ~eps/h^2 to rounding; 1e-4 keeps that near 1e-8
D2_STEP = 1e-4
DELTA_FLOOR = 1e-6


@dataclass(frozen=True)
class Interval:
    lo: float | Fraction
    hi: float | Fraction

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``"lo:hi"``; decimal and ``a/b`` endpoints stay exact."""
        try:
            lo, hi = text.split(":")
            return cls(_exact_number(lo), _exact_number(hi))
        except ValueError as exc:
            raise ValueError(f"interval must look like lo:hi, got {text!r} ({exc})") from None

    @classmethod
    def real_line(cls) -> "Interval":
        return cls(-math.inf, math.inf)

    def length(self):
        return self.hi - self.lo

    @property
    def center(self):
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def scaled(self, factor) -> "Interval":
        """Same center, length multiplied by ``factor``."""
        half = self.length() * factor / 2
        return Interval(self.center - half, self.center + half)

    def shrunk(self, amount) -> "Interval":
        return Interval(self.lo + amount, self.hi - amount)

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def linspace(self, n: int) -> np.ndarray:
        return np.linspace(float(self.lo), float(self.hi), n)

    def __str__(self):
        return f"{self.lo}:{self.hi}"


def _exact_number(text: str) -> Fraction:
    text = text.strip()
    if text in ("inf", "+inf", "-inf"):
        raise ValueError("infinite endpoints are not accepted here")
    return Fraction(text)


class Polynomial:
    """Polynomial with exact rational coefficients, lowest degree first."""

    def __init__(self, coeffs: Iterable):
        cs = [Fraction(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs) or (Fraction(0),)
        self._float = [float(c) for c in self.coeffs]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        if isinstance(x, Rational):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        acc = 0.0 * x
        for c in reversed(self._float):
            acc = acc * x + c
        return acc

    def deriv(self) -> "Polynomial":
        return Polynomial([i * c for i, c in enumerate(self.coeffs)][1:] or [0])

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Polynomial(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = Polynomial([1])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def is_constant(self) -> bool:
        return self.degree == 0

    def integer_form(self) -> tuple[int, tuple[int, ...]]:
        """Return ``(D, n)`` with ``self(x) == sum(n[i] x^i) / D`` and integer ``n``."""
        den = 1
        for c in self.coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        return den, tuple(int(c * den) for c in self.coeffs)

    def __repr__(self):
        return f"Polynomial({[str(c) for c in self.coeffs]})"

    def curve(self, domain: Interval, name: str | None = None, **kw) -> "Curve":
        d1, d2 = self.deriv(), self.deriv().deriv()
        return Curve(
            self, domain, d1=d1, d2=d2, kind=EXACT_POLYNOMIAL, exact=self,
            poly=self, vectorized=True, name=name or repr(self), **kw,
        )


def _as_poly(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial([x])


class Curve:
    """A function on an interval with first and second derivatives.

    Missing derivatives fall back to central differences with relative step.
    ``exact`` (optional) maps ``Fraction -> Fraction`` and feeds the exact
    counting path. ``c1, c2`` record claimed class bounds when known.
    """

    def __init__(
        self,
        f: Callable,
        domain: Interval,
        *,
        d1: Callable | None = None,
        d2: Callable | None = None,
        kind: str = SAMPLED,
        exact: Callable | None = None,
        poly: Polynomial | None = None,
        c1: float | None = None,
        c2: float | None = None,
        vectorized: bool = False,
        name: str = "f",
    ):
        if kind not in KINDS:
            raise ValueError(f"unknown curve kind {kind!r}")
        self._f = f
        self._d1 = d1
        self._d2 = d2
        self.domain = domain
        self.kind = kind
        self.exact = exact
        self.poly = poly
        self.c1 = c1
        self.c2 = c2
        self.vectorized = vectorized
        self.name = name

    def __repr__(self):
        return f"Curve({self.name}, {self.domain}, kind={self.kind})"

    @property
    def has_exact_derivatives(self) -> bool:
        return self._d1 is not None and self._d2 is not None

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def eval(self, x):
        if isinstance(x, Rational):
            x = float(x)
        return self._f(x)

    __call__ = eval

    def exact_eval(self, x: Fraction) -> Fraction:
        if self.exact is None:
            raise TypeError(f"{self.name} has no exact rational evaluator")
        return self.exact(Fraction(x))

    def d1(self, x):
        if self._d1 is not None:
            return self._d1(float(x) if isinstance(x, Fraction) else x)
        x = float(x) if isinstance(x, Fraction) else x
        h = D1_STEP * (np.abs(x) + 1.0)
        return (self._f(x + h) - self._f(x - h)) / (2.0 * h)

    def d2(self, x):
        if self._d2 is not None:
            return self._d2(float(x) if isinstance(x, Fraction) else x)
        x = float(x) if isinstance(x, Fraction) else x
        h = D2_STEP * (np.abs(x) + 1.0)
        return (self._f(x + h) - 2.0 * self._f(x) + self._f(x - h)) / (h * h)

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.vectorized:
            return np.asarray(self._f(xs), dtype=float) + np.zeros_like(xs)
        return np.array([float(self._f(float(x))) for x in xs])

    def d2_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.vectorized:
            return np.asarray(self.d2(xs), dtype=float) + np.zeros_like(xs)
        return np.array([float(self.d2(float(x))) for x in xs])

    def negated(self) -> "Curve":
        neg = lambda g: (lambda x: -g(x)) if g is not None else None  # noqa: E731
        return Curve(
            neg(self._f), self.domain, d1=neg(self._d1), d2=neg(self._d2),
            kind=self.kind, exact=neg(self.exact), poly=-self.poly if self.poly else None,
            c1=self.c1, c2=self.c2, vectorized=self.vectorized, name=f"-({self.name})",
        )


@dataclass
class ClassReport:
    passed: bool
    worst_quotient: float
    worst_location: float
    samples_used: int
    tolerance: float
    sign: str | None = None
    skipped: int = 0
    failure: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _slack(values: np.ndarray, c1: float, c2: float) -> np.ndarray:
    """Signed distance to the window [c1, c2]; positive means violation."""
    return np.maximum(c1 - values, values - c2)


def _verdict(
    quotients: np.ndarray, where: np.ndarray, allowance: np.ndarray,
    c1: float, c2: float, tol: float, skipped: int = 0,
) -> ClassReport:
    if quotients.size == 0:
        return ClassReport(False, math.nan, math.nan, 0, tol, None, skipped, "no usable samples")
    bad = ~np.isfinite(quotients)
    if bad.any():
        k = int(np.argmax(bad))
        return ClassReport(False, float(quotients[k]), float(where[k]), int(quotients.size), tol,
                           None, skipped, f"non-finite sample at x={where[k]!r}")
    best: ClassReport | None = None
    best_slack = math.inf
    for sign, q in (("+", quotients), ("-", -quotients)):
        slack = _slack(q, c1, c2) - tol - allowance
        k = int(np.argmax(slack))
        rep = ClassReport(bool(slack[k] <= 0), float(q[k]), float(where[k]), int(q.size), tol, sign, skipped)
        if rep.passed:
            return rep
        if slack[k] < best_slack:
            best, best_slack = rep, slack[k]
    best.sign = None
    return best


def check_second_derivative_class(
    curve: Curve, I: Interval, c1: float, c2: float, grid_n: int = 1001, tol: float = 1e-9,
) -> ClassReport:
    """Sample ``f''`` on an equispaced grid and test ``c1 <= ±f'' <= c2``."""
    _check_window(c1, c2)
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    xs = I.linspace(grid_n)
    with np.errstate(all="ignore"):
        vals = curve.d2_array(xs)
    return _verdict(vals, xs, np.zeros_like(vals), c1, c2, tol)


def _check_window(c1, c2):
    if not (c2 >= c1 > 0):
        raise ValueError(f"need c2 >= c1 > 0, got c1={c1}, c2={c2}")


def _pairs(I: Interval, n: int, seed: int, centered: bool):
    """Seeded (x, delta) pairs.

    Every fourth pair uses the largest admissible delta, so the probes touch
    the endpoints of ``I``.
    """
    rng = np.random.default_rng(seed)
    lo, hi = float(I.lo), float(I.hi)
    xs = rng.uniform(lo, hi, n)
    if n:
        xs[0] = 0.5 * (lo + hi)
    room = np.minimum(xs - lo, hi - xs) if centered else hi - xs
    frac = rng.uniform(0.0, 1.0, n) ** 3  # bias towards small delta
    frac[::4] = 1.0
    return xs, room * frac


def check_convexity_quotient(
    curve: Curve, I: Interval, c1: float, c2: float, sample_pairs: int = 2000,
    seed: int = 0, tol: float = 1e-9,
) -> ClassReport:
    """Second difference quotients ``(f(x+d) - 2f(x) + f(x-d)) / d^2`` in ``[c1, c2]`` up to sign."""
    _check_window(c1, c2)
    xs, ds = _pairs(I, sample_pairs, seed, centered=True)
    floor = DELTA_FLOOR * float(I.length())
    keep = ds >= floor
    xs, ds = xs[keep], ds[keep]
    with np.errstate(all="ignore"):
        fp, f0, fm = curve.eval_array(xs + ds), curve.eval_array(xs), curve.eval_array(xs - ds)
        quot = (fp - 2.0 * f0 + fm) / ds**2
        allowance = 8.0 * EPS * (np.abs(fp) + 2.0 * np.abs(f0) + np.abs(fm)) / ds**2
    return _verdict(quot, xs, allowance, c1, c2, tol, skipped=int((~keep).sum()))


def check_derivative_quotient(
    curve: Curve, I: Interval, c1: float, c2: float, sample_pairs: int = 2000,
    seed: int = 0, tol: float = 1e-9,
) -> ClassReport:
    """First-derivative difference quotients ``(f'(x+d) - f'(x)) / d`` in ``[c1, c2]`` up to sign."""
    _check_window(c1, c2)
    xs, ds = _pairs(I, sample_pairs, seed, centered=False)
    floor = DELTA_FLOOR * float(I.length())
    keep = ds >= floor
    xs, ds = xs[keep], ds[keep]
    d1 = np.vectorize(lambda t: float(curve.d1(float(t))), otypes=[float])
    with np.errstate(all="ignore"):
        gp, g0 = d1(xs + ds), d1(xs)
        quot = (gp - g0) / ds
        allowance = 8.0 * EPS * (np.abs(gp) + np.abs(g0)) / ds
    return _verdict(quot, xs, allowance, c1, c2, tol, skipped=int((~keep).sum()))


def _taylor2(f0, f1, f2, z):
    return lambda x: f0 + f1 * (x - z) + f2 * (x - z) ** 2 / 2


def extend_taylor(curve: Curve) -> Curve:
    """Extend ``curve`` to the real line by its degree-2 Taylor polynomials at the endpoints.

    The result agrees with ``curve`` on its domain and is C^2 across the seams.
    """
    x1, x2 = curve.domain.lo, curve.domain.hi
    exact = curve.poly is not None
    if exact:
        p, dp, ddp = curve.poly, curve.poly.deriv(), curve.poly.deriv().deriv()
        left = [p(Fraction(x1)), dp(Fraction(x1)), ddp(Fraction(x1))]
        right = [p(Fraction(x2)), dp(Fraction(x2)), ddp(Fraction(x2))]
    else:
        left = [curve.eval(x1), curve.d1(x1), curve.d2(x1)]
        right = [curve.eval(x2), curve.d1(x2), curve.d2(x2)]
    fl, fr = [float(v) for v in left], [float(v) for v in right]
    a, b = float(x1), float(x2)

    def piecewise(inner, lfun, rfun):
        def g(x):
            if np.ndim(x):
                x = np.asarray(x, dtype=float)
                out = np.asarray(inner(np.clip(x, a, b)), dtype=float) + np.zeros_like(x)
                out = np.where(x < a, lfun(x), out)
                return np.where(x > b, rfun(x), out)
            if x < x1:
                return lfun(x)
            if x > x2:
                return rfun(x)
            return inner(x)
        return g

    f = piecewise(curve.eval, _taylor2(*fl, a), _taylor2(*fr, b))
    d1 = piecewise(curve.d1, lambda x: fl[1] + fl[2] * (x - a), lambda x: fr[1] + fr[2] * (x - b))
    d2 = piecewise(curve.d2, lambda x: fl[2] + 0.0 * x, lambda x: fr[2] + 0.0 * x)
    exact_fn = None
    if exact:
        xl, xr = Fraction(x1), Fraction(x2)
        exact_fn = _scalar_piecewise(curve.poly, _taylor2(*left, xl), _taylor2(*right, xr), xl, xr)
    return Curve(
        f, Interval.real_line(), d1=d1, d2=d2,
        kind=EXACT_ELEMENTARY if curve.kind != SAMPLED else SAMPLED,
        exact=exact_fn, c1=curve.c1, c2=curve.c2, vectorized=curve.vectorized,
        name=f"taylor2[{curve.name}]",
    )


def _scalar_piecewise(inner, lfun, rfun, a, b):
    def g(x):
        if x < a:
            return lfun(x)
        if x > b:
            return rfun(x)
        return inner(x)
    return g


def battery() -> list[Curve]:
    """Smooth test curves with known class bounds ``(c1, c2)`` on their domains."""
    third = Fraction(1, 3)
    out = [
        Polynomial([0, 0, 1]).curve(Interval(Fraction(-1), Fraction(1)), name="x^2", c1=2, c2=2),
        Polynomial([0, 0, Fraction(1, 2)]).curve(Interval(Fraction(0), Fraction(1)), name="x^2/2", c1=1, c2=1),
        Polynomial([0, 1, 0, third]).curve(Interval(Fraction(1, 2), Fraction(3, 2)), name="x^3/3+x", c1=1, c2=3),
        Polynomial([0, 0, 0, 1]).curve(Interval(Fraction(1), Fraction(2)), name="x^3", c1=6, c2=12),
        Polynomial([0, 0, 0, 0, 1]).curve(Interval(Fraction(1), Fraction(2)), name="x^4", c1=12, c2=48),
        Polynomial([1, -1, 1, Fraction(-1, 6)]).curve(Interval(Fraction(-1), Fraction(1)), name="1-x+x^2-x^3/6", c1=1, c2=3),
        Curve(np.exp, Interval(0.0, 1.0), d1=np.exp, d2=np.exp, kind=EXACT_ELEMENTARY,
              vectorized=True, name="exp(x)", c1=1.0, c2=math.e),
        Curve(np.cosh, Interval(-0.5, 0.5), d1=np.sinh, d2=np.cosh, kind=EXACT_ELEMENTARY,
              vectorized=True, name="cosh(x)", c1=1.0, c2=math.cosh(0.5)),
        Curve(lambda x: -np.log(x), Interval(1.0, 2.0), d1=lambda x: -1.0 / x, d2=lambda x: 1.0 / x**2,
              kind=EXACT_ELEMENTARY, vectorized=True, name="-log(x)", c1=0.25, c2=1.0),
        Curve(lambda x: -np.sqrt(1.0 - x * x), Interval(-0.5, 0.5),
              d1=lambda x: x / np.sqrt(1.0 - x * x), d2=lambda x: (1.0 - x * x) ** -1.5,
              kind=EXACT_ELEMENTARY, vectorized=True, name="circle", c1=1.0, c2=(0.75) ** -1.5),
    ]
    return out
