"""Leading-order expansions of the high-branch supply optimum near B and near h_0(j).

Three regimes are covered, each with a small parameter ε:

* fixed j = j_B, h = h_B + ε
* fixed h = h_B, j = j_B + ε
* fixed j > j_B, h = h_0(j) + ε, where h_0 = -p̂_U is the null-price line

The exact counterpart of every prediction is the InteriorHigh candidate of the
supply solver, so the order of accuracy can be measured directly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .demand import branch_boundaries
from .distribution import GammaFunctions
from .errors import ConvergenceError, DomainError
from .supply import SupplyKind, coexistence_etas, d_tilde, interior_extrema

VALID_EPS = 0.1
DIVERGENCE_COEF = 1e3


class Regime(str, Enum):
    FIXED_J = "fixed_j"
    FIXED_H = "fixed_h"
    NULL_PRICE = "null_price"


@dataclass(frozen=True)
class ExpansionResult:
    epsilon: float
    p_plus: float
    eta_plus: float
    profit_plus: float
    regime: Regime
    j: float
    h: float
    eta_0: float  # value of η_+ reached as ε -> 0 (jump from 0 when regime is at B)

    @property
    def valid(self) -> bool:
        return self.epsilon <= VALID_EPS


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not (math.isfinite(eps) and eps >= 0):
        raise DomainError(f"epsilon must be finite and non-negative, got {eps}")
    if eps > VALID_EPS:
        warnings.warn(f"epsilon={eps} > {VALID_EPS}: expansion used outside its range",
                      RuntimeWarning, stacklevel=3)
    return eps


def _b_point(g: GammaFunctions):
    c = g.critical
    g3 = float(g.d3gamma(c.eta_B))
    if not g3 > 0:
        raise DomainError(f"Gamma'''(eta_B)={g3} <= 0: distribution is not regular at B")
    h_B = -(c.j_B * c.eta_B - float(g.gamma(c.eta_B)))
    return c.j_B, h_B, c.eta_B, g3


def near_B_fixed_j(g: GammaFunctions, eps: float) -> ExpansionResult:
    """``j = j_B``, ``h = h_B + ε``: linear price and square-root demand."""
    eps = _check_eps(eps)
    j_B, h_B, e_B, g3 = _b_point(g)
    a = math.sqrt(2.0 / (e_B * g3))
    return ExpansionResult(epsilon=eps, p_plus=eps, eta_plus=e_B + a * math.sqrt(eps),
                           profit_plus=e_B * eps + a * eps ** 1.5, regime=Regime.FIXED_J,
                           j=j_B, h=h_B + eps, eta_0=e_B)


def near_B_fixed_h(g: GammaFunctions, eps: float) -> ExpansionResult:
    """``h = h_B``, ``j = j_B + ε``."""
    eps = _check_eps(eps)
    j_B, h_B, e_B, g3 = _b_point(g)
    a = math.sqrt(4.0 / g3)
    return ExpansionResult(epsilon=eps, p_plus=e_B * eps, eta_plus=e_B + a * math.sqrt(eps),
                           profit_plus=e_B ** 2 * eps + e_B * a * eps ** 1.5,
                           regime=Regime.FIXED_H, j=j_B + eps, h=h_B, eta_0=e_B)


def null_price_coefficient(g: GammaFunctions, j: float) -> tuple[float, float]:
    """``(η_0, 1/(η_0 Γ''(η_0)))`` on the null-price line at ``j``."""
    if j <= g.critical.j_B:
        raise DomainError(f"null-price line exists only for j > j_B={g.critical.j_B}")
    bb = branch_boundaries(g, j)
    e0 = bb.eta_U
    g2 = float(g.d2gamma(e0))
    coef = math.inf if g2 == 0 else 1.0 / (e0 * g2)
    return e0, coef


def near_null_price(g: GammaFunctions, j: float, eps: float) -> ExpansionResult:
    """``h = h_0(j) + ε`` at fixed ``j > j_B``; the η coefficient diverges as ``j -> j_B``."""
    eps = _check_eps(eps)
    e0, coef = null_price_coefficient(g, j)
    if not abs(coef) < DIVERGENCE_COEF:
        warnings.warn(f"near-null-price coefficient {coef:.3g} diverges close to j_B",
                      RuntimeWarning, stacklevel=2)
    h0 = -branch_boundaries(g, j).p_hat_U
    return ExpansionResult(epsilon=eps, p_plus=eps, eta_plus=e0 + coef * eps,
                           profit_plus=e0 * eps + coef * eps * eps, regime=Regime.NULL_PRICE,
                           j=j, h=h0 + eps, eta_0=e0)


def expand(g: GammaFunctions, regime: Regime | str, eps: float, j: float | None = None):
    regime = Regime(regime)
    if regime is Regime.FIXED_J:
        return near_B_fixed_j(g, eps)
    if regime is Regime.FIXED_H:
        return near_B_fixed_h(g, eps)
    if j is None:
        raise DomainError("the null-price regime needs j")
    return near_null_price(g, j, eps)


def exact_high(g: GammaFunctions, j: float, h: float) -> tuple[float, float, float]:
    """``(p, η, π)`` of the exact InteriorHigh (or unique) profit maximum."""
    cands = interior_extrema(g, j, h)
    for kind in (SupplyKind.INTERIOR_HIGH, SupplyKind.INTERIOR_UNIQUE):
        for c in cands:
            if c.kind is kind:
                return c.price, c.eta, c.profit
    raise ConvergenceError(f"no high-branch profit maximum at j={j}, h={h}")


def convergence_table(g: GammaFunctions, regime: Regime | str, epsilons,
                      j: float | None = None) -> list[dict]:
    """Rows ``epsilon, predicted, exact, abs_error`` for η_+ along a regime."""
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for eps in epsilons:
            r = expand(g, regime, eps, j)
            exact = exact_high(g, r.j, r.h)[1]
            rows.append({"epsilon": float(eps), "predicted": r.eta_plus, "exact": exact,
                         "abs_error": abs(r.eta_plus - exact)})
    return rows


def coexistence_width(g: GammaFunctions, eps: float) -> float:
    """``h_-(j) - h_+(j)`` at ``j = j_A + ε``."""
    j = g.j_A + eps
    etas = coexistence_etas(g, j)
    if etas is None:
        return 0.0
    e_minus, e_plus = etas
    return d_tilde(g, j, e_plus) - d_tilde(g, j, e_minus)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
