"""Independent reference computations for the logistic law.

Nothing here imports the package: closed forms, plain bisection and brute-force
grids only, so agreement with the library is a genuine cross-check.
"""
from __future__ import annotations

import math

import numpy as np

BETA = math.pi / math.sqrt(3.0)
J_A = 27.0 * math.sqrt(3.0) / (8.0 * math.pi)
J_B = 4.0 * math.sqrt(3.0) / math.pi
ETA_A = 1.0 / 3.0
# Γ̃(η) = logit(η)/β + 1/(β(1-η)) and Γ̃'(η) = 1/(β η (1-η)²), evaluated at 1/3
H_A = -(0.75 + math.log(2.0)) / BETA
H_B = -2.0 / BETA
CLAMP = 1e-12


def sf(x):
    """Logistic survival function with unit variance."""
    return 0.5 * (1.0 - np.tanh(0.5 * BETA * np.asarray(x, dtype=float)))


def gamma(eta):
    eta = np.asarray(eta, dtype=float)
    return np.log(eta / (1.0 - eta)) / BETA


def D(j, eta):
    return j * np.asarray(eta, dtype=float) - gamma(eta)


def boundaries(j):
    """``(η_L, η_U, p̂_L, p̂_U)`` from ``β η (1-η) = 1/j``."""
    s = math.sqrt(1.0 - 4.0 / (BETA * j))
    e_L, e_U = 0.5 * (1.0 - s), 0.5 * (1.0 + s)
    return e_L, e_U, float(D(j, e_L)), float(D(j, e_U))


def bisect(f, a, b, iters=200):
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def logit_grid(n, lo=CLAMP):
    z = np.linspace(math.log(lo / (1 - lo)), math.log((1 - lo) / lo), n)
    return 0.5 * (1.0 + np.tanh(0.5 * z)), z


def demand_roots(j, p_hat, n=100_000):
    """Sign scan of ``η - sf(p̂ - jη)`` on a logit grid, each bracket bisected."""
    eta, _ = logit_grid(n)
    r = eta - sf(p_hat - j * eta)
    idx = np.nonzero(np.sign(r[:-1]) != np.sign(r[1:]))[0]

    def f(e):
        return e - float(sf(p_hat - j * e))

    return [bisect(f, float(eta[k]), float(eta[k + 1])) for k in idx]


def max_profit(j, h, n=100_000):
    """Brute-force profit maximum over stable demands with non-negative price.

    The grid is uniform in logit(η) and includes η_L and η_U exactly; an
    interior grid maximum is refined by a parabola through its neighbours.
    """
    eta, _ = logit_grid(n)
    segments = [(CLAMP, 1 - CLAMP)]
    if j > J_B:
        e_L, e_U, _, _ = boundaries(j)
        segments = [(CLAMP, e_L), (e_U, 1 - CLAMP)]
    best = -math.inf
    for a, b in segments:
        e = eta[(eta > a) & (eta < b)]
        e = np.concatenate([[a], e, [b]])
        z = np.log(e / (1 - e))
        price = h + D(j, e)
        pi = np.where(price >= 0, e * price, -math.inf)
        k = int(np.argmax(pi))
        val = float(pi[k])
        if 0 < k < len(e) - 1 and np.all(np.isfinite(pi[k - 1:k + 2])):
            z0, z1, z2 = z[k - 1:k + 2]
            y0, y1, y2 = pi[k - 1:k + 2]
            denom = (z0 - z1) * (z0 - z2) * (z1 - z2)
            A = (z2 * (y1 - y0) + z1 * (y0 - y2) + z0 * (y2 - y1)) / denom
            B = (z2 * z2 * (y0 - y1) + z1 * z1 * (y2 - y0) + z0 * z0 * (y1 - y2)) / denom
            if A < 0:
                zs = -B / (2 * A)
                if z0 <= zs <= z2:
                    es = 0.5 * (1 + math.tanh(0.5 * zs))
                    ps = h + float(D(j, es))
                    if ps >= 0:
                        val = max(val, es * ps)
        best = max(best, val)
    return best


def branch_profit_maxima(j, h, n=200_001):
    """First and last local maxima of ``η (h + D(j; η))`` on a logit grid, parabola-refined."""
    eta, z = logit_grid(n, lo=1e-9)
    pi = eta * (h + D(j, eta))
    k = np.nonzero((pi[1:-1] > pi[:-2]) & (pi[1:-1] >= pi[2:]))[0] + 1

    def refine(i):
        y0, y1, y2 = pi[i - 1:i + 2]
        return float(y1 + (y2 - y0) ** 2 / (8 * (2 * y1 - y0 - y2)))

    return refine(int(k[0])), refine(int(k[-1]))


def first_order_h(j, lo, hi):
    """``h`` at which the low and high local profit maxima are equal."""
    def f(h):
        low, high = branch_profit_maxima(j, h)
        return high - low
    return bisect(f, lo, hi, iters=40)


def d_tilde(j, eta):
    """``2jη - Γ̃(η)`` with ``Γ̃(η) = logit(η)/β + 1/(β(1-η))``."""
    return 2.0 * j * eta - (math.log(eta / (1.0 - eta)) + 1.0 / (1.0 - eta)) / BETA


def eta_plus(j):
    """Upper root of ``Γ̃'(η) = 1/(β η (1-η)²) = 2j`` (needs ``j > J_A``)."""
    return bisect(lambda e: 1.0 / (BETA * e * (1 - e) ** 2) - 2.0 * j, ETA_A, 1 - CLAMP)


def high_profit_eta(j, h):
    """η of the high-branch profit maximum: root of ``D̃ = -h`` above η_+."""
    lo = eta_plus(j) if j > J_A else CLAMP
    return bisect(lambda e: d_tilde(j, e) + h, lo, 1 - CLAMP)


def coexistence_width(j):
    """``h_- - h_+`` from the two roots of ``Γ̃' = 2j``."""
    e_minus = bisect(lambda e: 1.0 / (BETA * e * (1 - e) ** 2) - 2.0 * j, CLAMP, ETA_A)
    return d_tilde(j, eta_plus(j)) - d_tilde(j, e_minus)
