"""Shared numerical helpers: composite Gauss-Legendre rules and grid sups."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

EPS = float(np.finfo(float).eps)
PANEL_ORDER = 8


@lru_cache(maxsize=64)
def composite_gauss(n_nodes: int, lo: float = -1.0, hi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite 8-point Gauss-Legendre rule on [lo, hi].

    ``n_nodes`` is rounded up to a multiple of the panel order.
    """
    panels = max(1, -(-n_nodes // PANEL_ORDER))
    ref_x, ref_w = np.polynomial.legendre.leggauss(PANEL_ORDER)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def integrate(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n_nodes: int = 2048) -> float:
    if hi <= lo:
        return 0.0
    nodes, weights = composite_gauss(n_nodes, float(lo), float(hi))
    return float(np.dot(weights, fn(nodes)))


def sample(fn: Callable, xs: np.ndarray) -> np.ndarray:
    """Evaluate ``fn`` on an array, falling back to a scalar loop."""
    try:
        out = np.asarray(fn(xs), dtype=float)
        if out.shape == xs.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(float(x))) for x in xs])


@dataclass(frozen=True)
class SupEstimate:
    """Grid estimate of ``sup |fn|`` on an interval.

    ``value`` is attained at a sampled point, so it never exceeds the true
    sup; ``upper`` adds the Lipschitz-bounded discretisation error.
    """

    value: float
    location: float
    upper: float


def sup_abs(fn: Callable, lo: float, hi: float, grid: int = 1024) -> SupEstimate:
    xs = np.linspace(lo, hi, grid)
    ys = np.abs(sample(fn, xs))
    k = int(np.argmax(ys))
    best, where = float(ys[k]), float(xs[k])
    h = (hi - lo) / (grid - 1) if grid > 1 else 0.0
    # one refinement pass around the grid argmax
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    fine = np.linspace(a, b, 65)
    fy = np.abs(sample(fn, fine))
    j = int(np.argmax(fy))
    if fy[j] > best:
        best, where = float(fy[j]), float(fine[j])
    if grid > 1:
        slopes = np.abs(np.diff(ys)) / h
        lip = 2.0 * float(np.max(slopes)) if slopes.size else 0.0
    else:
        lip = 0.0
    return SupEstimate(best, where, best + 0.5 * lip * h)
