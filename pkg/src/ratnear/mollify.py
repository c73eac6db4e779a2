"""Smoothing by convolution with a compactly supported bump.

``f_eps(x) = (1/w) * integral_{-1}^{1} B(z) fhat(x - eps z) dz`` where ``fhat``
is ``f`` extended to the real line. Derivatives are taken under the
integral sign, moving them onto the kernel:
``f_eps^(k)(x) = (1/(w eps^k)) * integral B^(k)(z) fhat(x - eps z) dz``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ._numerics import composite_gauss
from .curves import SAMPLED, Curve, Interval

log = logging.getLogger(__name__)

BUMP_MAX = math.exp(-2.0)


def _phase(x):
    """Exponent of the bump and its first two derivatives on ``|x| < 1``."""
    am, ap = x - 1.0, x + 1.0
    phi = -1.0 / am**2 - 1.0 / ap**2
    dphi = 2.0 / am**3 + 2.0 / ap**3
    ddphi = -6.0 / am**4 - 6.0 / ap**4
    return phi, dphi, ddphi


def _kernel(x, order: int):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    out = np.zeros_like(x)
    xi = x[inside]
    phi, dphi, ddphi = _phase(xi)
    b = np.exp(phi)
    out[inside] = (b, dphi * b, (ddphi + dphi**2) * b)[order]
    return out


def bump(x):
    """``exp(-1/(x-1)^2 - 1/(x+1)^2)`` on ``|x| < 1``, zero elsewhere."""
    out = _kernel(x, 0)
    return float(out) if np.ndim(x) == 0 else out


def bump_d1(x):
    out = _kernel(x, 1)
    return float(out) if np.ndim(x) == 0 else out


def bump_d2(x):
    out = _kernel(x, 2)
    return float(out) if np.ndim(x) == 0 else out


@lru_cache(maxsize=1)
def bump_mass() -> float:
    """``w``, the integral of the bump over [-1, 1]."""
    nodes, weights = composite_gauss(4096)
    return float(np.dot(weights, _kernel(nodes, 0)))


def extend_constant(curve: Curve) -> Curve:
    """Extend by the endpoint values: ``f(x1)`` left of the domain, ``f(x2)`` right of it."""
    a, b = float(curve.domain.lo), float(curve.domain.hi)
    fa, fb = float(curve.eval(a)), float(curve.eval(b))

    def fhat(x):
        if np.ndim(x):
            x = np.asarray(x, dtype=float)
            inner = curve.eval_array(np.clip(x, a, b))
            return np.where(x < a, fa, np.where(x > b, fb, inner))
        if x < a:
            return fa
        if x > b:
            return fb
        return curve.eval(x)

    return Curve(fhat, Interval.real_line(), kind=SAMPLED, vectorized=True,
                 c1=curve.c1, c2=curve.c2, name=f"const-ext[{curve.name}]")


@dataclass(frozen=True)
class MollifySpec:
    epsilon: float
    quad_nodes: int = 512
    target_eta: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.quad_nodes < 16:
            raise ValueError("quad_nodes must be at least 16")


class MollifiedCurve(Curve):
    """``f_eps`` with kernel-differentiated ``d1``/``d2``; ``error_estimate`` compares two node counts."""

    def __init__(self, fhat: Curve, spec: MollifySpec):
        self.fhat = fhat
        self.spec = spec
        self._nodes, self._weights = composite_gauss(spec.quad_nodes)
        self._kern = [_kernel(self._nodes, k) * self._weights for k in range(3)]
        w = bump_mass()
        eps = spec.epsilon
        self._scale = (1.0 / w, 1.0 / (w * eps), 1.0 / (w * eps * eps))
        super().__init__(
            lambda x: self._conv(x, 0), fhat.domain,
            d1=lambda x: self._conv(x, 1), d2=lambda x: self._conv(x, 2),
            kind=SAMPLED, vectorized=True, c1=fhat.c1, c2=fhat.c2,
            name=f"mollified[{fhat.name}, eps={eps}]",
        )
        self.error_estimate = self._estimate_error()
        if spec.target_eta is not None and self.error_estimate > spec.target_eta:
            log.warning("quad_nodes=%d misses target eta=%g (estimated quadrature error %.3g)",
                        spec.quad_nodes, spec.target_eta, self.error_estimate)

    def _conv(self, x, order: int, kern: np.ndarray | None = None, nodes: np.ndarray | None = None):
        kern = self._kern[order] if kern is None else kern
        nodes = self._nodes if nodes is None else nodes
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        vals = self.fhat.eval_array((xs[:, None] - self.spec.epsilon * nodes[None, :]).ravel())
        out = self._scale[order] * (vals.reshape(xs.size, nodes.size) @ kern)
        return float(out[0]) if np.ndim(x) == 0 else out

    def _estimate_error(self) -> float:
        """Max change of ``f_eps`` on a probe grid when the node count is halved."""
        coarse_n, coarse_w = composite_gauss(max(8, self.spec.quad_nodes // 2))
        kern = _kernel(coarse_n, 0) * coarse_w
        dom = self.fhat.domain
        lo = float(dom.lo) if math.isfinite(dom.lo) else -1.0
        hi = float(dom.hi) if math.isfinite(dom.hi) else 1.0
        probe = np.linspace(lo, hi, 17)
        return float(np.max(np.abs(self._conv(probe, 0) - self._conv(probe, 0, kern, coarse_n))))


def mollify(fhat: Curve, spec: MollifySpec) -> MollifiedCurve:
    return MollifiedCurve(fhat, spec)


def modulus_of_continuity(fhat: Curve, I: Interval, eps: float, grid: int = 2001) -> float:
    """Sampled ``sup_{|x'-x| <= eps} |fhat(x') - fhat(x)|`` for ``x`` in an ``eps``-neighbourhood of ``I``."""
    lo, hi = float(I.lo) - eps, float(I.hi) + eps
    xs = np.linspace(lo, hi, grid)
    ys = fhat.eval_array(xs)
    shifts = np.linspace(-eps, eps, 33)
    best = 0.0
    for s in shifts:
        best = max(best, float(np.max(np.abs(fhat.eval_array(xs + s) - ys))))
    return best


def choose_epsilon(fhat: Curve, I: Interval, eta: float, eps_max: float = 1.0, iters: int = 40) -> float:
    """Largest ``eps`` (by bisection) whose sampled modulus of continuity stays below ``eta``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    lo, hi = 0.0, eps_max
    if modulus_of_continuity(fhat, I, hi) < eta:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if modulus_of_continuity(fhat, I, mid) < eta:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise ValueError(f"no epsilon found for eta={eta}")
    return lo


def sup_distance(a: Callable, b: Callable, xs: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a(xs)) - np.asarray(b(xs)))))
