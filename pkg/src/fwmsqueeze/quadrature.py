"""Adaptive Gauss-Legendre quadrature for vector-valued complex integrands."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def _rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel(f, a, b, n):
    x, w = _rule(n)
    half = 0.5 * (b - a)
    vals = np.asarray(f(half * x + 0.5 * (a + b)))
    # integrand returns shape (..., n_nodes)
    return half * (vals @ w)


def adaptive_gauss_legendre(f, a: float, b: float, abstol: float = 1e-10,
                            reltol: float = 1e-13, order: int = 16, max_depth: int = 30):
    """Integrate ``f`` over ``[a, b]``.

    ``f`` maps a 1-d node array of shape ``(m,)`` to values of shape
    ``(..., m)``.  Each panel compares an ``order``-point rule with a
    ``2*order``-point rule and is bisected until the difference meets
    ``max(abstol * width / (b - a), reltol * |I|)`` componentwise.
    Returns ``(integral, error_estimate)``.
    """
    total = 0.0
    err = 0.0
    stack = [(a, b, 0)]
    span = b - a
    while stack:
        lo, hi, depth = stack.pop()
        coarse = _panel(f, lo, hi, order)
        fine = _panel(f, lo, hi, 2 * order)
        diff = np.abs(fine - coarse)
        allowed = np.maximum(abstol * (hi - lo) / span, reltol * np.abs(fine))
        if np.all(diff <= allowed) or depth >= max_depth:
            if depth >= max_depth and not np.all(diff <= allowed):
                raise QuadratureError(f"no convergence on [{lo}, {hi}]")
            total = total + fine
            err = err + diff
            continue
        mid = 0.5 * (lo + hi)
        stack.append((mid, hi, depth + 1))
        stack.append((lo, mid, depth + 1))
    return total, err
