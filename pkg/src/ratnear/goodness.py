"""Empirical (C, alpha)-good testing and sampled checks of the sup lower bounds.

A function ``f`` is (C, alpha)-good on ``I`` when for every interval
``B`` inside ``I`` and every ``eps > 0`` the sublevel set
``{x in B : |f(x)| < eps * sup_B |f|}`` has measure at most ``C eps^alpha |B|``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._numerics import integrate, sample, sup_abs
from .curves import Curve, Interval
from .errors import ValidationError
from .lattice import GMap, wedge

MIN_BALL_FRACTION = 1e-3


@dataclass(frozen=True)
class GoodnessProbe:
    C: float
    alpha: float
    ball_samples: int = 50
    eps_grid: tuple[float, ...] = (0.5, 0.1, 0.01)
    measure_grid: int = 4096
    seed: int = 0
    tol: float = 1e-3

    def __post_init__(self):
        if not self.C > 0 or not self.alpha > 0:
            raise ValidationError("C and alpha must be positive")
        if any(not 0 < e < 1 for e in self.eps_grid):
            raise ValidationError("eps values must lie in (0, 1)")
        if self.measure_grid < 256:
            raise ValidationError("measure_grid must be at least 256")
        if self.ball_samples < 1:
            raise ValidationError("ball_samples must be positive")


@dataclass(frozen=True)
class BallRatio:
    lo: float
    hi: float
    eps: float
    sup: float
    measure: float
    ratio: float


@dataclass
class GoodnessReport:
    max_ratio: float
    worst_case: tuple[tuple[float, float], float] | None
    violations: int
    skipped: int
    rows: list[BallRatio] = field(default_factory=list)
    resolution: float = 0.0

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "worst_case": self.worst_case,
            "violations": self.violations,
            "skipped": self.skipped,
            "resolution": self.resolution,
        }


def _as_callable(fn) -> Callable:
    return fn.eval_array if isinstance(fn, Curve) else fn


def random_balls(I: Interval, n: int, rng: np.random.Generator) -> list[tuple[float, float]]:
    """Subintervals with endpoints uniform in ``I``; too short ones are redrawn."""
    lo, hi = float(I.lo), float(I.hi)
    out = []
    while len(out) < n:
        a, b = np.sort(rng.uniform(lo, hi, 2))
        if b - a >= MIN_BALL_FRACTION * (hi - lo):
            out.append((float(a), float(b)))
    return out


def sublevel_measure(fn: Callable, lo: float, hi: float, level: float, grid: int) -> float:
    """Midpoint-grid estimate of ``|{x in [lo, hi] : |fn(x)| < level}|``."""
    xs = lo + (np.arange(grid) + 0.5) * (hi - lo) / grid
    return float(np.count_nonzero(np.abs(sample(fn, xs)) < level)) * (hi - lo) / grid


def good_test(fn, I: Interval, probe: GoodnessProbe, balls: Sequence[tuple[float, float]] | None = None) -> GoodnessReport:
    """Measured ratios ``|B_eps| / (C eps^alpha |B|)`` over random balls and the eps grid."""
    f = _as_callable(fn)
    if balls is None:
        balls = random_balls(I, probe.ball_samples, np.random.default_rng(probe.seed))
    rows, skipped = [], 0
    worst, worst_case = 0.0, None
    for lo, hi in balls:
        s = sup_abs(f, lo, hi).value
        if s == 0.0:
            skipped += 1
            continue
        for eps in probe.eps_grid:
            m = sublevel_measure(f, lo, hi, eps * s, probe.measure_grid)
            ratio = m / (probe.C * eps**probe.alpha * (hi - lo))
            rows.append(BallRatio(lo, hi, eps, s, m, ratio))
            if ratio > worst:
                worst, worst_case = ratio, ((lo, hi), eps)
    violations = sum(1 for r in rows if r.ratio > 1 + probe.tol)
    return GoodnessReport(worst, worst_case, violations, skipped, rows, float(I.length()) / probe.measure_grid)


# -------------------------------------------------------------- lemma checks

PASS = "pass"
FAIL = "fail"
PRECONDITION = "precondition-fail"
SKIPPED = "skipped"


@dataclass(frozen=True)
class LemmaCheck:
    status: str
    lhs: float
    rhs: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def __bool__(self):
        return self.status == PASS


def _derivative(fn: Callable, dfn: Callable | None) -> Callable:
    if dfn is not None:
        return dfn

    def d(x):
        x = np.asarray(x, dtype=float)
        h = 1e-6 * (np.abs(x) + 1.0)
        return (sample(fn, x + h) - sample(fn, x - h)) / (2 * h)

    return d


def lemma_teclem_check(fn: Callable, B: Interval, lam: float, dfn: Callable | None = None,
                       grid: int = 1024, tol: float = 1e-12) -> LemmaCheck:
    """``inf |fn'| >= lam`` on ``B`` implies ``sup |fn| >= lam |B| / 2``."""
    lo, hi = float(B.lo), float(B.hi)
    d = _derivative(fn, dfn)
    inf_d = float(np.min(np.abs(sample(d, np.linspace(lo, hi, grid)))))
    rhs = 0.5 * lam * (hi - lo)
    sup = sup_abs(fn, lo, hi, grid)
    # central differences carry a relative error near 1e-10
    rtol = 1e-12 if dfn is not None else 1e-8
    if inf_d < lam * (1 - rtol):
        return LemmaCheck(PRECONDITION, sup.value, rhs, f"inf |f'| = {inf_d:.6g} < lambda")
    status = PASS if sup.upper >= rhs - tol else FAIL
    return LemmaCheck(status, sup.value, rhs)


def lemma_teclem3_check(fn: Callable, B: Interval, dfn: Callable | None = None,
                        grid: int = 1024, tol: float = 1e-9) -> LemmaCheck:
    """``sup |fn| >= 2 inf |fn|`` on ``B`` implies ``sup |fn| <= 2 * integral of |fn'|``."""
    lo, hi = float(B.lo), float(B.hi)
    xs = np.linspace(lo, hi, grid)
    vals = np.abs(sample(fn, xs))
    sup = sup_abs(fn, lo, hi, grid)
    inf = float(np.min(vals))
    d = _derivative(fn, dfn)
    rhs = 2.0 * integrate(lambda x: np.abs(sample(d, x)), lo, hi)
    if not sup.value >= 2 * inf or sup.value == 0.0:
        return LemmaCheck(SKIPPED, sup.value, rhs, "sup < 2 inf")
    status = PASS if sup.value <= rhs + tol else FAIL
    return LemmaCheck(status, sup.value, rhs)


# --------------------------------------------------- lower-bound battery

LEMMAS = ("vb1", "vb5", "skewdet", "ie_rho2")


@dataclass
class LemmaTally:
    trials: int = 0
    violations: int = 0
    min_margin: float = math.inf
    worst: dict | None = None

    def add(self, sup_upper: float, bound: float, case: dict):
        self.trials += 1
        margin = sup_upper / bound if bound > 0 else math.inf
        if margin < self.min_margin:
            self.min_margin, self.worst = margin, case
        if sup_upper < bound:
            self.violations += 1


@dataclass
class BatteryReport:
    curve: str
    c1: float
    M: float
    tallies: dict[str, LemmaTally]

    @property
    def violations(self) -> int:
        return sum(t.violations for t in self.tallies.values())

    def to_dict(self) -> dict:
        return {"curve": self.curve, "c1": self.c1, "M": self.M,
                "lemmas": {k: asdict(v) for k, v in self.tallies.items()}, "violations": self.violations}


def _unit_pair(rng) -> tuple[float, float]:
    """Random ``(a, b)`` with ``a^2 + b^2 >= 1``."""
    phi = rng.uniform(0, 2 * math.pi)
    r = 1.0 + rng.exponential(1.0)
    return r * math.cos(phi), r * math.sin(phi)


def _int_pair(rng, bound: int = 5):
    while True:
        u = tuple(int(v) for v in rng.integers(-bound, bound + 1, 3))
        w = tuple(int(v) for v in rng.integers(-bound, bound + 1, 3))
        if any(c != 0 for c in wedge(u, w)):
            return u, w


def lemma_lower_bounds_battery(curve: Curve, trials: int = 500, seed: int = 0,
                               c1: float | None = None, grid: int = 1024) -> BatteryReport:
    """Check the four sup lower bounds on random subintervals of the curve's domain.

    A violation is counted only when the certified upper estimate of the
    sampled sup falls below the bound.
    """
    c1 = curve.c1 if c1 is None else c1
    if c1 is None or not float(c1) > 0:
        raise ValidationError("the battery needs a positive c1")
    c1 = float(c1)
    I = curve.domain
    L = max(abs(float(I.lo)), abs(float(I.hi)))
    M = math.sqrt(1 + 4 * L * L)
    g = GMap(curve, extend=False)
    rng = np.random.default_rng(seed)
    tallies = {name: LemmaTally() for name in LEMMAS}
    f2 = curve.d2_array

    for lo, hi in random_balls(I, trials, rng):
        blen = hi - lo
        a, b = _unit_pair(rng)
        c = float(rng.normal(0, 2))
        sa, sb = float(rng.normal(0, 2)), float(rng.normal(0, 2))
        u, w = _int_pair(rng)
        p, q, r = (float(v) for v in wedge(u, w))
        case = {"B": (lo, hi), "a": a, "b": b, "c": c, "u": u, "w": w}

        eta_d = lambda x: a * g.g1d(x) + b * g.g2d(x)  # noqa: E731
        tallies["vb1"].add(sup_abs(eta_d, lo, hi, grid).upper, c1 * blen / (2 * M), case)

        eta = lambda x: a * g.g1(x) + b * g.g2(x) + c  # noqa: E731
        tallies["vb5"].add(sup_abs(eta, lo, hi, grid).upper, c1 * blen**2 / (32 * M), case)

        tilde = lambda x: (curve.eval_array(x) + sa * x + sb) * f2(x)  # noqa: E731
        tallies["skewdet"].add(sup_abs(tilde, lo, hi, grid).upper, c1 * c1 * blen**2 / 32,
                               dict(case, a_skew=sa, b_skew=sb))

        skew = lambda x: f2(x) * (p * curve.eval_array(x) - q * x + r)  # noqa: E731
        tallies["ie_rho2"].add(sup_abs(skew, lo, hi, grid).upper,
                               min(c1 * c1 * blen**2 / 32, c1 * blen / (2 * M)), case)
    return BatteryReport(curve.name, c1, M, tallies)


def random_polynomial(k: int, rng: np.random.Generator) -> np.polynomial.Polynomial:
    """Degree-``k`` polynomial with standard normal coefficients."""
    coeffs = rng.normal(size=k + 1)
    coeffs[-1] = coeffs[-1] if abs(coeffs[-1]) > 0.1 else 1.0
    return np.polynomial.Polynomial(coeffs)
