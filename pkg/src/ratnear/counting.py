"""Rational points near a curve: enumeration, counting, covering measure, closure margin.

A triple ``(q, p1, p2)`` with ``gcd(q, p1, p2) = 1`` is counted when
``c*Q < q <= Q``, ``p1/q`` lies in the closed interval ``J`` and
``|f(p1/q) - p2/q| <= delta/Q``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .curves import Curve, Interval
from .errors import GuardError, ValidationError

EXACT = "exact"
FLOAT = "float"
FLOAT_MARGIN = 1e-12
ORACLE_Q_MAX = 2000
INT64_SAFE = 2**62


class RationalTriple(NamedTuple):
    q: int
    p1: int
    p2: int

    @property
    def point(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.p1, self.q), Fraction(self.p2, self.q)

    def is_valid(self) -> bool:
        return self.q >= 1 and math.gcd(math.gcd(self.q, self.p1), self.p2) == 1


@dataclass(frozen=True)
class CountParams:
    Q: Fraction | float
    delta: Fraction | float
    J: Interval
    c: Fraction | float = 0
    arithmetic: str = EXACT
    margin: float = FLOAT_MARGIN

    def __post_init__(self):
        # Q = 1 is accepted so the single-denominator hand case stays expressible
        if not self.Q >= 1:
            raise ValidationError(f"Q must be >= 1, got {self.Q}")
        if not self.delta >= 0:
            raise ValidationError(f"delta must be >= 0, got {self.delta}")
        if not 0 <= self.c < 1:
            raise ValidationError(f"c must lie in [0, 1), got {self.c}")
        if self.arithmetic not in (EXACT, FLOAT):
            raise ValidationError(f"arithmetic must be 'exact' or 'float', got {self.arithmetic!r}")

    @property
    def threshold(self) -> Fraction:
        """``delta / Q`` as an exact fraction."""
        return Fraction(self.delta) / Fraction(self.Q)

    def q_bounds(self) -> tuple[int, int]:
        """Inclusive integer range of admissible denominators."""
        return math.floor(Fraction(self.c) * Fraction(self.Q)) + 1, math.floor(Fraction(self.Q))

    def replace(self, **kw) -> "CountParams":
        d = {k: getattr(self, k) for k in ("Q", "delta", "J", "c", "arithmetic", "margin")}
        d.update(kw)
        return CountParams(**d)

    def to_dict(self) -> dict:
        return {"Q": str(self.Q), "delta": str(self.delta), "J": str(self.J), "c": str(self.c),
                "arithmetic": self.arithmetic, "margin": self.margin}


@dataclass
class CountReport:
    n: int
    triples: list[RationalTriple] | None
    boundary_hits: int
    params: CountParams
    margin_sensitive: bool = False
    one_p2_per_p1: bool = True
    truncated: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "boundary_hits": self.boundary_hits,
            "margin_sensitive": self.margin_sensitive,
            "one_p2_per_p1": self.one_p2_per_p1,
            "params": self.params.to_dict(),
        }
        if self.triples is not None:
            out["triples"] = [list(t) for t in self.triples]
            out["truncated"] = self.truncated
        out.update(self.extra)
        return out


def _p1_range(q: int, J: Interval) -> tuple[int, int]:
    return math.ceil(q * Fraction(J.lo)), math.floor(q * Fraction(J.hi))


def _coprime(q: int, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    return np.gcd(np.gcd(q, p1), p2) == 1


def _expand(p1: np.ndarray, lower: np.ndarray, upper: np.ndarray):
    counts = np.maximum(upper - lower + 1, 0)
    if not counts.any():
        return p1[:0], p1[:0]
    rep = np.repeat(np.arange(p1.size), counts)
    starts = np.cumsum(counts) - counts
    offset = np.arange(rep.size) - np.repeat(starts, counts)
    return p1[rep], lower[rep] + offset


def _poly_q(q: int, lo: int, hi: int, D: int, ns: tuple[int, ...], a: int, b: int) -> list[tuple]:
    """All coprime (q, p1, p2) for one denominator, by integer comparison.

    With ``e = max(deg, 1)`` and ``Nv = sum n_i p1^i q^(e-i)`` we have
    ``f(p1/q) = Nv / (D q^e)``, and the condition becomes
    ``|b Nv - b D q^(e-1) p2| <= a D q^e``.
    """
    d = len(ns) - 1
    e = max(d, 1)
    qe = q**e
    den = b * D * q ** (e - 1)
    span = a * D * qe
    bound = b * sum(abs(n) for n in ns) * max(abs(lo), abs(hi), q) ** e + span
    if bound < INT64_SAFE and den < INT64_SAFE:
        p1 = np.arange(lo, hi + 1, dtype=np.int64)
        acc = np.full(p1.shape, ns[d], dtype=np.int64)
        for i in range(d - 1, -1, -1):
            acc = acc * p1 + ns[i] * q ** (d - i)
        if e > d:
            acc = acc * q
        num = b * acc
        lower = -((span - num) // den)  # ceil((num - span) / den)
        upper = (num + span) // den
        p1s, p2s = _expand(p1, lower, upper)
        keep = _coprime(q, p1s, p2s)
        return list(zip([q] * int(keep.sum()), p1s[keep].tolist(), p2s[keep].tolist()))
    out = []
    for p in range(lo, hi + 1):
        acc = 0
        for i in range(d, -1, -1):
            acc = acc * p + ns[i] * q ** (d - i)
        num = b * acc * q ** (e - d)
        for p2 in range(-((span - num) // den), (num + span) // den + 1):
            if math.gcd(math.gcd(q, p), p2) == 1:
                out.append((q, p, p2))
    return out


def _fraction_q(curve: Curve, q: int, lo: int, hi: int, t: Fraction) -> list[tuple]:
    out = []
    qt = q * t
    for p in range(lo, hi + 1):
        center = q * curve.exact_eval(Fraction(p, q))
        for p2 in range(math.ceil(center - qt), math.floor(center + qt) + 1):
            if math.gcd(math.gcd(q, p), p2) == 1:
                out.append((q, p, p2))
    return out


def _float_q(curve: Curve, q: int, lo: int, hi: int, t: float, margin: float) -> tuple[list[tuple], int]:
    p1 = np.arange(lo, hi + 1, dtype=np.int64)
    fv = curve.eval_array(p1 / q)
    band = margin * (1.0 + np.abs(fv))
    lower = np.ceil(q * (fv - t - band)).astype(np.int64)
    upper = np.floor(q * (fv + t + band)).astype(np.int64)
    idx = np.arange(p1.size)
    rows, p2s = _expand(idx, lower, upper)
    dist = np.abs(fv[rows] - p2s / q)
    near = np.abs(dist - t) < band[rows]
    ok = (dist <= t) | near
    ok &= _coprime(q, p1[rows], p2s)
    hits = int((near & ok).sum())
    return list(zip([q] * int(ok.sum()), p1[rows][ok].tolist(), p2s[ok].tolist())), hits


def _enumerate(curve: Curve, params: CountParams, q_lo: int | None = None, q_hi: int | None = None):
    qa, qb = params.q_bounds()
    qa = qa if q_lo is None else max(qa, q_lo)
    qb = qb if q_hi is None else min(qb, q_hi)
    t = params.threshold
    out: list[tuple] = []
    hits = 0
    if params.arithmetic == EXACT:
        if not curve.is_exact:
            raise ValidationError(f"exact mode needs a curve with rational values at rationals; {curve.name} has none")
        poly = curve.poly
        if poly is not None:
            D, ns = poly.integer_form()
        for q in range(max(qa, 1), qb + 1):
            lo, hi = _p1_range(q, params.J)
            if lo > hi:
                continue
            if poly is not None:
                out.extend(_poly_q(q, lo, hi, D, ns, t.numerator, t.denominator))
            else:
                out.extend(_fraction_q(curve, q, lo, hi, t))
    else:
        tf = float(t)
        for q in range(max(qa, 1), qb + 1):
            lo, hi = _p1_range(q, params.J)
            if lo > hi:
                continue
            got, h = _float_q(curve, q, lo, hi, tf, params.margin)
            out.extend(got)
            hits += h
    return [RationalTriple(*tr) for tr in out], hits


def enumerate_R(curve: Curve, params: CountParams, q_lo: int | None = None, q_hi: int | None = None) -> list[RationalTriple]:
    """Coprime triples near ``curve``, sorted by ``(q, p1, p2)``.

    ``q_lo``/``q_hi`` restrict the denominator range (used for sharding).
    """
    return _enumerate(curve, params, q_lo, q_hi)[0]


def shard_ranges(params: CountParams, k: int) -> list[tuple[int, int]]:
    qa, qb = params.q_bounds()
    qa = max(qa, 1)
    if qb < qa:
        return []
    edges = np.linspace(qa, qb + 1, k + 1).astype(int)
    return [(int(a), int(b) - 1) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def enumerate_sharded(curve: Curve, params: CountParams, shards: int) -> list[RationalTriple]:
    parts = [enumerate_R(curve, params, a, b) for a, b in shard_ranges(params, shards)]
    return sorted(tr for part in parts for tr in part)


def count_report(curve: Curve, params: CountParams, keep: int | None = 100_000) -> CountReport:
    triples, hits = _enumerate(curve, params)
    truncated = keep is not None and len(triples) > keep
    return CountReport(
        n=len(triples),
        triples=triples[:keep] if keep is not None else triples,
        boundary_hits=hits,
        params=params,
        margin_sensitive=hits > 0,
        one_p2_per_p1=params.threshold < Fraction(1, 2),
        truncated=truncated,
    )


def count_N(curve: Curve, Q, delta, J: Interval, arithmetic: str | None = None, keep: int | None = 100_000) -> CountReport:
    """``N_f(Q, delta, J)``: triples with ``0 < q <= Q`` (no lower cutoff)."""
    if arithmetic is None:
        arithmetic = EXACT if curve.is_exact else FLOAT
    return count_report(curve, CountParams(Q, delta, J, 0, arithmetic), keep)


# ---------------------------------------------------------------- measure

@dataclass(frozen=True)
class IntervalUnion:
    intervals: tuple[Interval, ...]

    @classmethod
    def from_intervals(cls, items: Iterable[Interval]) -> "IntervalUnion":
        merged: list[list] = []
        for iv in sorted(items, key=lambda i: (i.lo, i.hi)):
            if merged and iv.lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], iv.hi)
            else:
                merged.append([iv.lo, iv.hi])
        return cls(tuple(Interval(a, b) for a, b in merged))

    def measure(self):
        return sum((iv.length() for iv in self.intervals), 0)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)


def delta_union(triples: Iterable[RationalTriple], rho, J: Interval) -> IntervalUnion:
    """Union of the closed balls ``[p1/q - rho, p1/q + rho]`` clipped to ``J``."""
    if not rho > 0:
        raise ValidationError("rho must be positive")
    exact = isinstance(rho, (int, Fraction)) and isinstance(J.lo, (int, Fraction)) and isinstance(J.hi, (int, Fraction))
    pieces = []
    for tr in triples:
        x = Fraction(tr.p1, tr.q) if exact else tr.p1 / tr.q
        clipped = Interval(x - rho, x + rho).intersect(J)
        if clipped is not None:
            pieces.append(clipped)
    return IntervalUnion.from_intervals(pieces)


# --------------------------------------------------------- closure margin

def closure_margin(curve_bar: Curve, params: CountParams):
    """Smallest excess ``|f(p1/q) - p2/q| - delta/Q`` over the triples that miss the threshold by at most 1.

    Returns ``(eps_star, size of the widened set)``; ``eps_star`` is ``inf``
    when nothing lies in the widened band.
    """
    Q = Fraction(params.Q)
    wide = params.replace(delta=Fraction(params.delta) + Q)  # threshold 1 + delta/Q
    r_star = enumerate_R(curve_bar, wide)
    inside = set(enumerate_R(curve_bar, params))
    t = params.threshold
    best = math.inf
    for tr in r_star:
        if tr in inside:
            continue
        if params.arithmetic == EXACT:
            gap = abs(curve_bar.exact_eval(Fraction(tr.p1, tr.q)) - Fraction(tr.p2, tr.q)) - t
        else:
            gap = abs(float(curve_bar.eval(tr.p1 / tr.q)) - tr.p2 / tr.q) - float(t)
        if gap < best:
            best = gap
    return best, len(r_star)


# ------------------------------------------------------------------ oracle

def brute_force_oracle(curve: Curve, params: CountParams) -> list[RationalTriple]:
    """Independent triple loop: every ``p1`` near ``qJ``, every ``|p2| <= q*max|f| + q*delta/Q + 1``."""
    Qf = Fraction(params.Q)
    if Qf > ORACLE_Q_MAX:
        raise GuardError(f"brute-force oracle refuses Q={params.Q} > {ORACLE_Q_MAX}")
    J = params.J
    jlo, jhi = Fraction(J.lo), Fraction(J.hi)
    cQ = Fraction(params.c) * Qf
    t = params.threshold
    exact = params.arithmetic == EXACT
    values: dict[tuple[int, int], object] = {}
    for q in range(1, math.floor(Qf) + 1):
        if not cQ < q:
            continue
        for p1 in range(math.floor(q * jlo) - 1, math.ceil(q * jhi) + 2):
            if jlo <= Fraction(p1, q) <= jhi:
                x = Fraction(p1, q)
                values[q, p1] = curve.exact_eval(x) if exact else float(curve.eval(p1 / q))
    if not values:
        return []
    fmax = max(abs(v) for v in values.values())
    out = []
    tn, td = t.numerator, t.denominator
    tf = float(t)
    for (q, p1), v in values.items():
        reach = math.ceil(q * fmax + q * t) + 1
        if exact:
            vn, vd = v.numerator, v.denominator
            for p2 in range(-reach, reach + 1):
                if abs(vn * q - p2 * vd) * td <= tn * vd * q and math.gcd(q, p1, p2) == 1:
                    out.append(RationalTriple(q, p1, p2))
        else:
            band = params.margin * (1.0 + abs(v))
            for p2 in range(-reach, reach + 1):
                if abs(v - p2 / q) < tf + band and math.gcd(q, p1, p2) == 1:
                    out.append(RationalTriple(q, p1, p2))
    return sorted(out)


def report_dict(report: CountReport) -> dict:
    return asdict(report)
