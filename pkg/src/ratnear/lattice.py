"""Dual map, the matrices h(x), sublattice norms, B_g membership and point attachment.

For a curve ``f`` the dual map is ``g1 = x f' - f``, ``g2 = -f'`` and
``ghat = (g1, g2, 1)``. With ``theta = (delta K T)^(1/3)`` and
``t = (theta/delta, theta/K, theta/T)`` we use ``h(x) = diag(t) G_x`` where
``G_x`` has rows ``(g1, g2, 1)``, ``(g1', g2', 0)``, ``(1, 0, 0)``.

Wedges of two vectors in R^3 use the lexicographic basis ``(e12, e13, e23)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .counting import RationalTriple
from .curves import Curve, Interval, extend_taylor
from .errors import GuardError, ValidationError

# relative slack on the float inequalities of the lattice systems
SLACK = 1e-12
RANGE_GUARD = 10**7
BOX_GUARD = 2 * 10**7


def _within(value, bound):
    return np.abs(value) <= bound * (1.0 + SLACK) + SLACK


class GMap:
    """The dual map of ``curve``, evaluated on its Taylor extension to the real line."""

    def __init__(self, curve: Curve, extend: bool = True):
        self.source = curve
        self._ext = extend_taylor(curve) if extend and math.isfinite(float(curve.domain.lo)) else curve

    def f(self, x):
        return self._ext.eval(x)

    def f1(self, x):
        return self._ext.d1(x)

    def f2(self, x):
        return self._ext.d2(x)

    def g1(self, x):
        return x * self.f1(x) - self.f(x)

    def g2(self, x):
        return -self.f1(x)

    def g1d(self, x):
        return x * self.f2(x)

    def g2d(self, x):
        return -self.f2(x)

    def ghat(self, x) -> np.ndarray:
        return np.array([self.g1(x), self.g2(x), 1.0])

    def ghat_d(self, x) -> np.ndarray:
        return np.array([self.g1d(x), self.g2d(x), 0.0])

    def G(self, x) -> np.ndarray:
        return np.array([self.ghat(x), self.ghat_d(x), [1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class KMParams:
    delta: float
    K: float
    T: float
    J: Interval

    def __post_init__(self):
        if not (self.delta > 0 and self.K > 0 and self.T > 0):
            raise ValidationError("delta, K and T must be positive")

    @property
    def theta(self) -> float:
        return (self.delta * self.K * self.T) ** (1.0 / 3.0)

    @property
    def t(self) -> tuple[float, float, float]:
        th = self.theta
        return th / self.delta, th / self.K, th / self.T

    def checklist(self) -> list[tuple[str, bool]]:
        """The standing conditions on ``(delta, K, T)`` of the measure theorem."""
        return [
            ("0<delta<=1", 0 < self.delta <= 1),
            ("K>0", self.K > 0),
            ("T>1", self.T > 1),
            ("delta*K*T<=1", self.delta * self.K * self.T <= 1),
        ]


@dataclass(frozen=True)
class LatticeBasis:
    vectors: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if not 1 <= len(self.vectors) <= 3:
            raise ValidationError("a basis has between 1 and 3 vectors")
        for v in self.vectors:
            if len(v) != 3 or not all(isinstance(c, (int, np.integer)) for c in v):
                raise ValidationError(f"basis vectors must be integer 3-vectors, got {v}")
        if np.linalg.matrix_rank(np.array(self.vectors, dtype=float)) != len(self.vectors):
            raise ValidationError("basis vectors are linearly dependent")

    @property
    def rank(self) -> int:
        return len(self.vectors)


def wedge(u: Sequence[float], w: Sequence[float]) -> np.ndarray:
    """``u ^ w`` in the basis ``(e12, e13, e23)``."""
    u, w = list(u), list(w)
    return np.array([u[0] * w[1] - u[1] * w[0], u[0] * w[2] - u[2] * w[0], u[1] * w[2] - u[2] * w[1]])


def h_matrix(g: GMap, x: float, p: KMParams) -> np.ndarray:
    return np.diag(p.t) @ g.G(x)


def lattice_norm(h: np.ndarray, basis: LatticeBasis) -> float:
    """Sup-norm of the wedge of the image of ``basis`` under ``h``."""
    cols = [h @ np.asarray(v, dtype=float) for v in basis.vectors]
    scale = max(float(np.max(np.abs(c))) for c in cols)
    if basis.rank == 1:
        value = float(np.max(np.abs(cols[0])))
    elif basis.rank == 2:
        value = float(np.max(np.abs(wedge(cols[0], cols[1]))))
    else:
        value = abs(float(np.linalg.det(h))) * abs(float(np.linalg.det(np.array(basis.vectors, dtype=float).T)))
    if value <= 1e-14 * max(scale, 1.0) ** basis.rank:
        raise GuardError(f"transformed basis is numerically rank deficient (norm {value:.3g})")
    return value


def wedge_components(g: GMap, x: float, p: KMParams, u, w) -> np.ndarray:
    """Closed form of ``h u ^ h w``: ``(t1 t2 skew, t1 t3 (w1 u - u1 w).ghat, t2 t3 (w1 u - u1 w).ghat')``."""
    t1, t2, t3 = p.t
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    via_det, _ = skew_gradient(g, u, w, x)
    mix = w[0] * u - u[0] * w
    return np.array([t1 * t2 * via_det, t1 * t3 * mix @ g.ghat(x), t2 * t3 * mix @ g.ghat_d(x)])


def skew_gradient(g: GMap, u, w, x: float) -> tuple[float, float]:
    """``(u.ghat)(w.ghat') - (u.ghat')(w.ghat)`` and its closed form ``f''(p f - q x + r)``."""
    pqr = wedge(u, w)
    if not np.any(pqr != 0):
        raise ValidationError("u ^ w = 0: the vectors must be independent")
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    gh, ghd = g.ghat(x), g.ghat_d(x)
    via_det = float((u @ gh) * (w @ ghd) - (u @ ghd) * (w @ gh))
    p_, q_, r_ = (float(c) for c in pqr)
    via_formula = float(g.f2(x) * (p_ * g.f(x) - q_ * x + r_))
    return via_det, via_formula


# ------------------------------------------------------------------ B_g

def _bg_candidates(g: GMap, x: float, delta: float, K: float, T: float) -> np.ndarray:
    """All integer solutions of the B_g system at ``x`` in scan order ``(q, p1, p2)``."""
    f2 = float(g.f2(x))
    if f2 == 0.0:
        raise ValidationError(f"f''({x}) = 0: the B_g search needs f'' bounded away from zero")
    g1, g2 = float(g.g1(x)), float(g.g2(x))
    g1d, g2d = float(g.g1d(x)), float(g.g2d(x))
    qmax = math.floor(T)
    half = K / abs(f2)
    if 2 * half + 3 > RANGE_GUARD:
        raise GuardError(f"p1 range {2 * half:.3g} exceeds guard {RANGE_GUARD}")
    q = np.arange(-qmax, qmax + 1, dtype=np.int64)
    lo = np.floor(q * x - half).astype(np.int64) - 1
    hi = np.ceil(q * x + half).astype(np.int64) + 1
    q, p1 = _expand(q, lo, hi)
    keep = _within(q * g1d + p1 * g2d, K)
    q, p1 = q[keep], p1[keep]
    centre = -(q * g1 + p1 * g2)
    lo2 = np.floor(centre - delta).astype(np.int64) - 1
    hi2 = np.ceil(centre + delta).astype(np.int64) + 1
    idx, p2 = _expand(np.arange(q.size), lo2, hi2)
    q, p1 = q[idx], p1[idx]
    keep = _within(q * g1 + p1 * g2 + p2, delta) & ((q != 0) | (p1 != 0) | (p2 != 0))
    return np.stack([q[keep], p1[keep], p2[keep]], axis=1)


def _expand(values: np.ndarray, lower: np.ndarray, upper: np.ndarray):
    counts = np.maximum(upper - lower + 1, 0)
    rep = np.repeat(np.arange(values.size), counts)
    starts = np.cumsum(counts) - counts
    offset = np.arange(rep.size) - np.repeat(starts, counts)
    return values[rep], lower[rep] + offset


def bg_membership(g: GMap, x: float, p: KMParams) -> tuple[int, int, int] | None:
    """First nonzero integer solution of the B_g system at ``x`` (``q``, then ``p1``, then ``p2`` ascending)."""
    sols = _bg_candidates(g, x, p.delta, p.K, p.T)
    return tuple(int(v) for v in sols[0]) if len(sols) else None


def bg_brute_force(g: GMap, x: float, p: KMParams) -> tuple[int, int, int] | None:
    """Full-box search over ``|q| <= T`` and a box for ``(p1, p2)`` that contains every solution."""
    f2 = abs(float(g.f2(x)))
    g1, g2 = float(g.g1(x)), float(g.g2(x))
    g1d, g2d = float(g.g1d(x)), float(g.g2d(x))
    qmax = math.floor(p.T)
    b1 = math.ceil(qmax * abs(x) + p.K / f2) + 1
    b2 = math.ceil(qmax * abs(g1) + b1 * abs(g2) + p.delta) + 1
    if (2 * qmax + 1) * (2 * b1 + 1) * (2 * b2 + 1) > BOX_GUARD:
        raise GuardError("brute-force box too large")
    for q in range(-qmax, qmax + 1):
        for p1 in range(-b1, b1 + 1):
            if not _within(q * g1d + p1 * g2d, p.K):
                continue
            for p2 in range(-b2, b2 + 1):
                if (q, p1, p2) != (0, 0, 0) and _within(q * g1 + p1 * g2 + p2, p.delta):
                    return q, p1, p2
    return None


@dataclass(frozen=True)
class MeasureEstimate:
    fraction: float
    half_width: float
    members: int
    grid_n: int

    def measure(self, J: Interval) -> float:
        return self.fraction * float(J.length())


def bg_measure_estimate(g: GMap, p: KMParams, grid_n: int = 400) -> MeasureEstimate:
    """Share of a midpoint grid on ``J`` lying in B_g; ``half_width = |J| / grid_n``."""
    if grid_n < 100:
        raise ValidationError("grid_n must be at least 100")
    lo, hi = float(p.J.lo), float(p.J.hi)
    xs = lo + (np.arange(grid_n) + 0.5) * (hi - lo) / grid_n
    members = sum(1 for x in xs if len(_bg_candidates(g, float(x), p.delta, p.K, p.T)))
    return MeasureEstimate(members / grid_n, (hi - lo) / grid_n, members, grid_n)


# ------------------------------------------------------------- Minkowski

def minkowski_solve(g: GMap, x: float, Q: float, delta: float, c0_star: float, c2: float) -> tuple[int, int, int] | None:
    """First coprime nonzero ``(q, p1, p2)`` with ``0 <= q <= Q`` and

    ``|q g1 + p1 g2 + p2| <= c0 delta`` and ``|q g1' + p1 g2'| <= c2 / (c0 Q delta)``.
    """
    if not c0_star > 0:
        raise ValidationError("c0_star must be positive")
    a = c0_star * delta
    b = c2 / (c0_star * Q * delta)
    f2 = float(g.f2(x))
    if f2 == 0.0:
        raise ValidationError(f"f''({x}) = 0")
    g1, g2 = float(g.g1(x)), float(g.g2(x))
    g1d, g2d = float(g.g1d(x)), float(g.g2d(x))
    half = b / abs(f2)
    if 2 * half + 3 > RANGE_GUARD:
        raise GuardError(f"p1 range {2 * half:.3g} exceeds guard {RANGE_GUARD}")
    q = np.arange(0, math.floor(Q) + 1, dtype=np.int64)
    q, p1 = _expand(q, np.floor(q * x - half).astype(np.int64) - 1, np.ceil(q * x + half).astype(np.int64) + 1)
    keep = _within(q * g1d + p1 * g2d, b)
    q, p1 = q[keep], p1[keep]
    centre = -(q * g1 + p1 * g2)
    idx, p2 = _expand(np.arange(q.size), np.floor(centre - a).astype(np.int64) - 1, np.ceil(centre + a).astype(np.int64) + 1)
    q, p1 = q[idx], p1[idx]
    keep = _within(q * g1 + p1 * g2 + p2, a) & ((q != 0) | (p1 != 0) | (p2 != 0))
    keep &= np.gcd(np.gcd(q, p1), p2) == 1
    if not keep.any():
        return None
    k = int(np.argmax(keep))
    return int(q[k]), int(p1[k]), int(p2[k])


PAPER = "paper-constants"
RELAXED = "relaxed"


@dataclass(frozen=True)
class PipelineConstants:
    mode: str
    c0: float
    C1: float
    c1: float
    c2: float

    @classmethod
    def paper(cls, c1: float, c2: float) -> "PipelineConstants":
        from .bounds import paper_constants

        pc = paper_constants(c1, c2)
        return cls(PAPER, pc.c0, pc.C1, c1, c2)

    @classmethod
    def relaxed(cls, c0: float, c1: float, c2: float, C1: float | None = None) -> "PipelineConstants":
        if not c0 > 0:
            raise ValidationError("relaxed c0 must be positive")
        return cls(RELAXED, c0, c2 / (2 * c1 * c0 * c0) if C1 is None else C1, c1, c2)


OK = "ok"
NO_POINT = "no-lattice-point"
SMALL_Q = "small-q"
OUTSIDE_J = "outside-J"
FINAL = "final-inequality"


@dataclass(frozen=True)
class AttachResult:
    x: float
    stage: str
    triple: RationalTriple | None
    witness: tuple[int, int, int] | None
    localization: float | None
    constants: str
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def ok(self) -> bool:
        return self.stage == OK


def attach_point_pipeline(curve: Curve, x: float, Q, delta, consts: PipelineConstants,
                          J: Interval | None = None, g: GMap | None = None) -> AttachResult:
    """Attach a rational point of ``R^{c0}`` near ``x`` by the linear-forms argument.

    The returned stage names the first step that failed.
    """
    g = g or GMap(curve)
    wit = minkowski_solve(g, x, float(Q), float(delta), consts.c0, consts.c2)
    if wit is None:
        return AttachResult(x, NO_POINT, None, None, None, consts.mode)
    q, p1, p2 = wit
    if not q > 2 * consts.c0 * float(Q):
        return AttachResult(x, SMALL_Q, None, wit, None, consts.mode)
    dist = abs(x - p1 / q)
    if J is not None and not (Fraction(J.lo) <= Fraction(p1, q) <= Fraction(J.hi)):
        return AttachResult(x, OUTSIDE_J, None, wit, dist, consts.mode)
    thr = Fraction(delta) / Fraction(Q)
    if curve.is_exact and isinstance(delta, (int, Fraction)) and isinstance(Q, (int, Fraction)):
        good = abs(curve.exact_eval(Fraction(p1, q)) - Fraction(p2, q)) <= thr
    else:
        good = abs(float(curve.eval(p1 / q)) - p2 / q) <= float(thr)
    if not good:
        return AttachResult(x, FINAL, None, wit, dist, consts.mode)
    return AttachResult(x, OK, RationalTriple(q, p1, p2), wit, dist, consts.mode)


def localization_bound(consts: PipelineConstants, Q: float, delta: float) -> float:
    """``C1 / (delta Q^2)``."""
    return consts.C1 / (float(delta) * float(Q) ** 2)
