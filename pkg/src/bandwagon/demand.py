"""Customer equilibria: the fixed point η = 1 - F(p̂ - jη) and its branches.

Equilibria are the roots of ``p̂ = D(j; η) = jη - Γ(η)``. For ``j > j_B`` the
function ``D`` has a minimum at η_L and a maximum at η_U, and prices between
``p̂_L = D(η_L)`` and ``p̂_U = D(η_U)`` admit a low and a high stable demand
separated by an unstable one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._roots import brent, fold_roots
from .distribution import ETA_CLAMP, GammaFunctions

CUSP_TOL = 1e-12


class Branch(str, Enum):
    LOW = "low"
    HIGH = "high"
    UNIQUE = "unique"
    MIDDLE = "middle"


@dataclass(frozen=True)
class MarketParams:
    """Normalized social strength ``j`` and mean willingness to pay ``h`` (net of cost)."""

    j: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.j) and self.j >= 0):
            raise ValueError(f"j must be finite and non-negative, got {self.j}")
        if not math.isfinite(self.h):
            raise ValueError(f"h must be finite, got {self.h}")

    def p_hat(self, p: float) -> float:
        return p - self.h


@dataclass(frozen=True)
class Equilibrium:
    eta: float
    stable: bool
    branch: Branch


@dataclass(frozen=True)
class DemandEquilibria:
    j: float
    p_hat: float
    roots: tuple[Equilibrium, ...]

    @property
    def stable(self) -> list[Equilibrium]:
        return [r for r in self.roots if r.stable]

    def low(self) -> Equilibrium:
        """Smallest stable equilibrium (the coordination-failure outcome)."""
        return self.stable[0]

    def high(self) -> Equilibrium:
        """Largest stable equilibrium (the coordinated outcome)."""
        return self.stable[-1]


@dataclass(frozen=True)
class BranchBoundaries:
    eta_L: float
    eta_U: float
    p_hat_L: float
    p_hat_U: float

    @property
    def width(self) -> float:
        return self.p_hat_U - self.p_hat_L


def d_fun(g: GammaFunctions, j: float, eta):
    """Shifted inverse demand ``D(j; η) = jη - Γ(η)``."""
    if isinstance(eta, float):
        return j * eta - g.gamma(eta)
    e = np.asarray(eta, dtype=float)
    out = j * e - g.gamma(e)
    return float(out) if np.ndim(out) == 0 else out


def d_fun_prime(g: GammaFunctions, j: float, eta):
    """``D'(j; η) = j - Γ'(η)``; stable equilibria have ``D' <= 0``."""
    return j - g.dgamma(eta)


def inverse_demand(g: GammaFunctions, j: float, h: float, eta):
    """Posted price at which a fraction η buys: ``p^d = h + D(j; η)``."""
    return h + d_fun(g, j, eta)


def branch_boundaries(g: GammaFunctions, j: float) -> BranchBoundaries | None:
    """Marginal-stability points ``Γ'(η) = j``; ``None`` below ``j_B``.

    At ``j = j_B`` (relative tolerance 1e-12) the degenerate cusp is returned.
    """
    c = g.critical
    if j < c.j_B * (1 - CUSP_TOL):
        return None
    if j <= c.j_B * (1 + CUSP_TOL):
        p = float(d_fun(g, c.j_B, c.eta_B))
        return BranchBoundaries(c.eta_B, c.eta_B, p, p)

    def slope(e):
        return float(g.dgamma(e)) - j

    eta_L = brent(slope, ETA_CLAMP, c.eta_B, name="eta_L")
    eta_U = brent(slope, c.eta_B, 1 - ETA_CLAMP, name="eta_U")
    return BranchBoundaries(eta_L, eta_U, float(d_fun(g, j, eta_L)), float(d_fun(g, j, eta_U)))


def demand_equilibria(g: GammaFunctions, j: float, p_hat: float,
                      bounds: BranchBoundaries | None = None) -> DemandEquilibria:
    """Every root of ``p̂ = D(j; η)`` in (0, 1), tagged with stability and branch.

    Roots whose true value lies beyond the ``1e-12`` clamp are reported at the
    clamp, where the fixed-point residual is still below 1e-12.
    """
    if bounds is None:
        bounds = branch_boundaries(g, j)

    def resid(e):
        return float(d_fun(g, j, e)) - p_hat

    folds = None if bounds is None or bounds.width <= 0 else (bounds.eta_L, bounds.eta_U)
    found = fold_roots(resid, ETA_CLAMP, 1 - ETA_CLAMP, folds)
    multi = folds is not None and bounds.p_hat_L <= p_hat <= bounds.p_hat_U
    roots = []
    for eta, seg in found:
        if not multi:
            branch = Branch.UNIQUE
        else:
            branch = (Branch.LOW, Branch.MIDDLE, Branch.HIGH)[seg]
        roots.append(Equilibrium(eta=eta, stable=seg != 1, branch=branch))
    return DemandEquilibria(j=j, p_hat=p_hat, roots=tuple(roots))


def classify_eta(g: GammaFunctions, j: float, eta: float,
                 bounds: BranchBoundaries | None = None) -> tuple[bool, Branch]:
    """Stability and branch of the equilibrium sitting at ``η`` (at price ``D(j; η)``)."""
    if bounds is None:
        bounds = branch_boundaries(g, j)
    if bounds is None or bounds.width <= 0:
        return True, Branch.UNIQUE
    p = float(d_fun(g, j, eta))
    stable = not (bounds.eta_L < eta < bounds.eta_U)
    if not bounds.p_hat_L <= p <= bounds.p_hat_U:
        return stable, Branch.UNIQUE
    if eta <= bounds.eta_L:
        return stable, Branch.LOW
    if eta >= bounds.eta_U:
        return stable, Branch.HIGH
    return stable, Branch.MIDDLE


def demand_curve(g: GammaFunctions, j: float, etas) -> list[dict]:
    """Rows ``eta, p_hat, stable, branch`` of the shifted inverse demand on a grid."""
    bounds = branch_boundaries(g, j)
    rows = []
    for e in np.asarray(etas, dtype=float):
        stable, branch = classify_eta(g, j, float(e), bounds)
        rows.append({"eta": float(e), "p_hat": float(d_fun(g, j, e)),
                     "stable": stable, "branch": branch.value})
    return rows
