"""Explicit constants, hypothesis checklists, bound evaluation and verdicts.

Two families of constants share the names ``C1``/``C2``: the counting
constants (``PaperConstants``) and the lemma constants of the measure
estimate, which carry a ``_km`` suffix here.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .curves import Interval
from .errors import ValidationError

IDENTITY_RTOL = 1e-12

SATISFIED = "satisfied"
VIOLATED = "violated"
VACUOUS = "vacuous"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _check_window(c1, c2):
    if not c1 > 0:
        raise ValidationError(f"c1 must be positive, got {c1}")
    if not c2 >= c1:
        raise ValidationError(f"c2 must be >= c1, got c1={c1}, c2={c2}")


@dataclass(frozen=True)
class PaperConstants:
    c1: float
    c2: float
    E_hat: float
    c0: float
    C1: float
    C2: float
    C1_alt: float

    @property
    def identity_error(self) -> float:
        """Relative gap between the two closed forms of ``C1``."""
        return _rel(self.C1, self.C1_alt)

    @property
    def cube_identity_error(self) -> float:
        """Relative gap in ``C2^3 * 2 c0 = c2 * C1``."""
        return _rel(self.C2**3 * 2 * self.c0, self.c2 * self.C1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["identity_error"] = self.identity_error
        return d


def paper_constants(c1: float, c2: float) -> PaperConstants:
    c1, c2 = float(c1), float(c2)
    _check_window(c1, c2)
    E_hat = 3**6 * 2**5 * c2 / (c1 * min(1.0, math.sqrt(c1)))
    c0 = 2.0**-13 * E_hat**-6 / c2
    C1 = c2 / (2 * c1 * c0 * c0)
    C1_alt = 2.0**25 * E_hat**12 * c2**3 / c1
    C2 = (c2 * C1 / (2 * c0)) ** (1.0 / 3.0)
    pc = PaperConstants(c1, c2, E_hat, c0, C1, C2, C1_alt)
    if pc.identity_error > IDENTITY_RTOL:
        raise ArithmeticError(f"C1 closed forms disagree: {C1!r} vs {C1_alt!r}")
    return pc


# ------------------------------------------------------------ measure side

E1 = "E1"
E2 = "E2"
GENERAL = "general"


@dataclass(frozen=True)
class KMConstants:
    c1: float
    c2: float
    L: float
    J_len: float
    delta: float
    K: float
    T: float
    M: float
    C0: float
    C_branches: tuple[float, float]
    C: float
    theta: float
    rho: float
    E: float
    C1_km: float
    C2_km: float
    regimes: tuple[str, ...]
    checklist: tuple[tuple[str, bool], ...]

    @property
    def regime(self) -> str:
        return self.regimes[0] if self.regimes else GENERAL

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime
        d["checklist"] = dict(self.checklist)
        return d


def km_constants(c1, c2, L, J: Interval | float, delta, K, T) -> KMConstants:
    """Constants of the measure estimate for the B_g set."""
    c1, c2, L = float(c1), float(c2), float(L)
    _check_window(c1, c2)
    delta, K, T = float(delta), float(K), float(T)
    if not (delta > 0 and K > 0 and T > 0):
        raise ValidationError("delta, K and T must be positive")
    jl = float(J.length()) if isinstance(J, Interval) else float(J)
    M = math.sqrt(1 + 4 * L * L)
    C0 = 4 * c2 / c1
    branches = (C0 * math.sqrt(32), 24 * math.sqrt(6 * C0 * M))
    C = max(branches)
    theta = (delta * K * T) ** (1.0 / 3.0)
    rho = min(
        1.0,
        c1,
        c1 * jl * theta / (32 * M) * max(16 / delta, jl / K),
        c1 * c1 * jl * jl * T / (32 * theta),
    )
    E = 648 * C / math.sqrt(rho)
    regimes = []
    if T >= max(64 * M * M * jl**-3, 32 / c1 * jl**-2):
        regimes.append(E1)
    if T >= max(4 * M * M, 32 / c1**2) / jl**2 and delta <= K:
        regimes.append(E2)
    checklist = (
        ("0<delta<=1", 0 < delta <= 1),
        ("K>0", K > 0),
        ("T>1", T > 1),
        ("delta*K*T<=1", delta * K * T <= 1),
    )
    return KMConstants(
        c1, c2, L, jl, delta, K, T, M, C0, branches, C, theta, rho, E,
        2 * max(C0, math.sqrt(32 * C0 * M)), C0 * math.sqrt(32), tuple(regimes), checklist,
    )


def thm9_bound(kc: KMConstants, J: Interval | float | None = None) -> float:
    """``E (delta K T)^(1/6) |J|``."""
    jl = kc.J_len if J is None else (float(J.length()) if isinstance(J, Interval) else float(J))
    return kc.E * math.sqrt(kc.theta) * jl


@dataclass(frozen=True)
class BoundVerdict:
    bound_value: float
    measured: float
    status: str
    hypothesis_checklist: tuple[tuple[str, bool], ...] = ()
    ceiling: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hypothesis_checklist"] = dict(self.hypothesis_checklist)
        return d


def upper_verdict(bound: float, measured: float, ceiling: float | None,
                  checklist: Sequence[tuple[str, bool]] = (), slack: float = 0.0) -> BoundVerdict:
    """Verdict on ``measured <= bound``; vacuous when the bound is no better than ``ceiling`` or a hypothesis fails."""
    checklist = tuple(checklist)
    failed = [name for name, ok in checklist if not ok]
    if failed:
        return BoundVerdict(bound, measured, VACUOUS, checklist, ceiling, "hypotheses fail: " + ",".join(failed))
    if measured > bound + slack:
        return BoundVerdict(bound, measured, VIOLATED, checklist, ceiling)
    if ceiling is not None and bound >= ceiling:
        return BoundVerdict(bound, measured, VACUOUS, checklist, ceiling, "bound exceeds the trivial ceiling")
    return BoundVerdict(bound, measured, SATISFIED, checklist, ceiling)


def lower_verdict(bound: float, measured: float, checklist: Sequence[tuple[str, bool]] = ()) -> BoundVerdict:
    checklist = tuple(checklist)
    failed = [name for name, ok in checklist if not ok]
    if failed:
        return BoundVerdict(bound, measured, VACUOUS, checklist, None, "hypotheses fail: " + ",".join(failed))
    if bound <= 0:
        return BoundVerdict(bound, measured, VACUOUS, checklist, None, "bound is not positive")
    status = SATISFIED if measured >= bound else VIOLATED
    return BoundVerdict(bound, measured, status, checklist)


def thm9_verdict(kc: KMConstants, measured: float, resolution: float = 0.0) -> BoundVerdict:
    """Compare a measured ``|B_g|`` against the estimate; ``resolution`` is the grid half width."""
    bound = thm9_bound(kc)
    return upper_verdict(bound, measured, kc.J_len, kc.checklist, slack=resolution)


# ----------------------------------------------------------- counting side

@dataclass(frozen=True)
class Thm1Check:
    items: tuple[tuple[str, bool], ...]
    thresholds: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.items)

    def failed(self) -> list[str]:
        return [name for name, ok in self.items if not ok]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "items": dict(self.items), "thresholds": self.thresholds}


def thm1_check(Q, delta, J: Interval | float, pc: PaperConstants) -> Thm1Check:
    Q, delta = float(Q), float(delta)
    jl = float(J.length()) if isinstance(J, Interval) else float(J)
    c0, c1, c2 = pc.c0, pc.c1, pc.c2
    lower_a = 128 / (c0 * c1 * c1) * jl**-3
    lower_b = 16 / (c0 * c1 * c1) * jl**-2
    upper_b = c0 * c0 / c2 / (delta * delta) if delta > 0 else math.inf
    items = (
        ("|J|<=1/2", jl <= 0.5),
        ("Q>1", Q > 1),
        ("delta<=1", delta <= 1),
        ("delta*Q^2*|J|>=8*C1", delta * Q * Q * jl >= 8 * pc.C1),
        ("Q*delta>=C2", Q * delta >= pc.C2),
        ("Q-range", Q >= lower_a or upper_b >= Q >= lower_b),
    )
    thresholds = {
        "Q_min_from_8C1": math.sqrt(8 * pc.C1 / (delta * jl)) if delta > 0 and jl > 0 else math.inf,
        "Q_min_from_C2": pc.C2 / delta if delta > 0 else math.inf,
        "Q_min_branch_a": lower_a,
        "Q_range_branch_b": (lower_b, upper_b),
    }
    return Thm1Check(items, thresholds)


def thm1_lower_bound(Q, delta, J: Interval | float, pc: PaperConstants) -> float:
    """``delta Q^2 |J| / (4 C1)``."""
    jl = float(J.length()) if isinstance(J, Interval) else float(J)
    return float(delta) * float(Q) ** 2 * jl / (4 * pc.C1)


def thm1_verdict(n: int, Q, delta, J, pc: PaperConstants) -> BoundVerdict:
    return lower_verdict(thm1_lower_bound(Q, delta, J, pc), n, thm1_check(Q, delta, J, pc).items)


def thm2_verdict(covered: float, Q, delta, J, pc: PaperConstants) -> BoundVerdict:
    """Covering statement: the union of ``rho``-balls meets at least half of ``J``."""
    jl = float(J.length()) if isinstance(J, Interval) else float(J)
    return lower_verdict(0.5 * jl, covered, thm1_check(Q, delta, J, pc).items)


def thm2_rho(Q, delta, pc: PaperConstants) -> float:
    return pc.C1 / (float(delta) * float(Q) ** 2)


# -------------------------------------------------------------- shape bounds

def shape_bounds(Q, delta, const: float = 1.0, C: float = 1.0, eps: float = 0.0,
                 lip_theta: float | None = None, vv2_eps: float = 0.0) -> dict:
    """Shapes of the known upper and lower bounds, each times the caller's constant ``const``.

    ``C`` is the curvature constant ``max{c2, 1/c1}`` of the Huxley shape;
    the three-term shape needs ``lip_theta`` and is omitted without it.
    """
    Q, delta = float(Q), float(delta)
    out = {
        "Hux": const * (C ** (10 / 3) * delta ** (1 - eps) * Q * Q + C ** (1 / 3) * Q),
        "VV1": const * (delta * Q * Q + delta**-0.5 * Q),
        "BDVV": const * delta * Q * Q,
    }
    if lip_theta is not None:
        th = lip_theta
        out["VV2"] = const * (delta * Q * Q + delta**-0.5 * Q ** (0.5 + vv2_eps) + delta ** ((th - 1) / 2) * Q ** ((3 - th) / 2))
    return out


@dataclass(frozen=True)
class ShapeFit:
    name: str
    constant: float
    ratios: tuple[float, ...]
    stability: float
    lower: bool

    def to_dict(self) -> dict:
        return asdict(self)


def fit_shape(name: str, sweep: Iterable[tuple[float, float, int]], lower: bool = False, **kw) -> ShapeFit:
    """Smallest constant making the shape an upper bound (largest for ``lower``) on measured ``(Q, delta, N)``.

    ``stability`` is the max/min ratio of the per-point constants.
    """
    ratios = []
    for Q, delta, n in sweep:
        base = shape_bounds(Q, delta, 1.0, **kw)[name]
        ratios.append(n / base)
    if not ratios:
        raise ValidationError("empty sweep")
    const = min(ratios) if lower else max(ratios)
    stab = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    return ShapeFit(name, const, tuple(ratios), stab, lower)


# --------------------------------------------------------- goodness constants

def goodness_constants(kind: str, **args) -> float:
    """Named constants of the goodness lemmas.

    ``polynomial``: ``k``; ``lemma_Ck``: ``kappa, kappa0, kappa1, kappa2, r``;
    ``C0``: ``c1, c2``; ``C1_km``: ``c1, c2, M``; ``C2_km``: ``c1, c2``.
    """
    if kind == "polynomial":
        k = int(args["k"])
        if k < 1:
            raise ValidationError("polynomial degree must be >= 1")
        return 2 * k * (k + 1) ** (1 / k)
    if kind == "lemma_Ck":
        kap, k0, k1, k2 = (float(args[n]) for n in ("kappa", "kappa0", "kappa1", "kappa2"))
        r = int(args["r"])
        if min(kap, k0, k1, k2) <= 0:
            raise ValidationError("kappa constants must be positive")
        s = k1 * kap + k2
        return max(4.0, 4 * s / kap, (r + 1) * math.sqrt(2 * s / k0))
    if kind in ("C0", "C1_km", "C2_km"):
        c1, c2 = float(args["c1"]), float(args["c2"])
        _check_window(c1, c2)
        C0 = 4 * c2 / c1
        if kind == "C0":
            return C0
        if kind == "C2_km":
            return C0 * math.sqrt(32)
        return 2 * max(C0, math.sqrt(32 * C0 * float(args["M"])))
    raise ValidationError(f"unknown constant kind {kind!r}")
