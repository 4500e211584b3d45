"""Bracketed root finding helpers built on scipy's Brent solver."""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError

XTOL = 1e-14
RTOL = 4 * np.finfo(float).eps


def brent(func: Callable[[float], float], a: float, b: float,
          xtol: float = XTOL, name: str = "root") -> float:
    """Root of ``func`` on ``[a, b]``; endpoints are accepted when they are exact zeros."""
    fa, fb = func(a), func(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise ConvergenceError(f"{name}: no sign change on [{a!r}, {b!r}]")
    try:
        return brentq(func, a, b, xtol=xtol, rtol=RTOL, maxiter=500)
    except RuntimeError as exc:  # pragma: no cover - brentq only fails on maxiter
        raise ConvergenceError(f"{name}: {exc}") from exc


def fold_roots(func: Callable[[float], float], lo: float, hi: float,
               folds: tuple[float, float] | None, dedupe: float = 1e-10):
    """All roots of a function that is decreasing, increasing, decreasing on ``[lo, hi]``.

    ``folds`` holds the local minimum and maximum; ``None`` means the function is
    monotone decreasing. Returns ``(eta, segment)`` pairs with segment 0 (left),
    1 (middle, increasing) or 2 (right). Where the root lies beyond ``lo`` or
    ``hi`` the clamp value itself is returned.
    """
    if folds is None:
        return [(clamped_root(func, lo, hi), 0)]
    a, b = folds
    roots = []
    fa, fb = func(a), func(b)
    if fa <= 0:
        roots.append((clamped_root(func, lo, a), 0))
    if fa <= 0 <= fb and b > a:
        roots.append((brent(func, a, b, name="middle root"), 1))
    if fb >= 0:
        roots.append((clamped_root(func, b, hi), 2))
    out = []
    for eta, seg in roots:
        # marginal roots sit on a fold; keep the outer (stable) copy
        if out and abs(eta - out[-1][0]) < dedupe:
            if seg == 1:
                continue
            if out[-1][1] == 1:
                out[-1] = (eta, seg)
                continue
        out.append((eta, seg))
    return out


def clamped_root(func, lo, hi):
    """Root of a decreasing ``func`` on ``[lo, hi]``, or the end it lies beyond."""
    flo, fhi = func(lo), func(hi)
    if flo < 0:
        return lo
    if fhi > 0:
        return hi
    return brent(func, lo, hi)
