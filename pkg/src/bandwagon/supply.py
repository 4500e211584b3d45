"""Monopolist's profit maximization.

With ``h`` and ``p`` measured net of the unit cost, the seller maximizes
``π = p η`` along the inverse demand ``p = h + D(j; η)``. Interior extrema solve

    -h = D̃(j; η) = 2jη - Γ̃(η),     maxima where D̃'(j; η) <= 0,

which mirrors the demand problem with Γ̃ and 2j in place of Γ and j. For
``j > j_A`` D̃ has a minimum at η_- and a maximum at η_+ so two local maxima
can coexist; for ``j > j_B`` the low demand branch also ends at η_L, where the
profit may have a boundary maximum.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from ._roots import brent, fold_roots
from .demand import BranchBoundaries, branch_boundaries, d_fun
from .distribution import ETA_CLAMP, GammaFunctions
from .errors import NoViableStrategy

APEX_TOL = 1e-5
TIE_RTOL = 1e-10


class SupplyKind(str, Enum):
    INTERIOR_LOW = "interior_low"
    INTERIOR_HIGH = "interior_high"
    INTERIOR_UNIQUE = "interior_unique"
    BOUNDARY_L = "boundary_L"


@dataclass(frozen=True)
class SupplyCandidate:
    eta: float
    price: float
    profit: float
    kind: SupplyKind
    viable: bool

    def as_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


@dataclass(frozen=True)
class SupplyOptimum:
    j: float
    h: float
    candidates: tuple[SupplyCandidate, ...]
    best: SupplyCandidate
    coordination_required: bool = False
    windfall_possible: bool = False
    criticality_margin: float | None = None
    tie: bool = False
    bounds: BranchBoundaries | None = field(default=None, repr=False)

    def candidate(self, kind: SupplyKind) -> SupplyCandidate | None:
        for c in self.candidates:
            if c.kind is kind:
                return c
        return None

    def as_dict(self) -> dict:
        return {
            "j": self.j,
            "h": self.h,
            "candidates": [c.as_dict() for c in self.candidates],
            "global": self.best.as_dict(),
            "flags": {
                "coordination_required": self.coordination_required,
                "windfall_possible": self.windfall_possible,
                "criticality_margin": self.criticality_margin,
                "tie": self.tie,
            },
        }


def d_tilde(g: GammaFunctions, j: float, eta):
    """``D̃(j; η) = 2jη - Γ̃(η) = d/dη [η D(j; η)]``."""
    if isinstance(eta, float):
        return 2.0 * j * eta - g.gamma_tilde(eta)
    e = np.asarray(eta, dtype=float)
    out = 2.0 * j * e - g.gamma_tilde(e)
    return float(out) if np.ndim(out) == 0 else out


def d_tilde_prime(g: GammaFunctions, j: float, eta):
    return 2.0 * j - g.dgamma_tilde(eta)


def effective_supply_price(g: GammaFunctions, j: float, eta):
    """Effective supply ``p^s(η) = -η D'(j; η) = η [Γ'(η) - j]``."""
    if isinstance(eta, float):
        return eta * (g.dgamma(eta) - j)
    e = np.asarray(eta, dtype=float)
    out = e * (g.dgamma(e) - j)
    return float(out) if np.ndim(out) == 0 else out


def coexistence_etas(g: GammaFunctions, j: float) -> tuple[float, float] | None:
    """Extrema ``η_- < η_A < η_+`` of D̃, i.e. the roots of ``Γ̃'(η) = 2j``.

    ``None`` for ``j <= j_A``; within ``1e-5`` of ``j_A`` both collapse onto η_A.
    """
    j_A, eta_A = g.j_A, g.eta_A
    if j <= j_A:
        return None
    if j - j_A < APEX_TOL:
        return eta_A, eta_A

    def slope(e):
        return float(g.dgamma_tilde(e)) - 2.0 * j

    return (brent(slope, ETA_CLAMP, eta_A, name="eta_minus"),
            brent(slope, eta_A, 1 - ETA_CLAMP, name="eta_plus"))


def _make_candidate(g, j, eta, kind, bounds) -> SupplyCandidate:
    price = effective_supply_price(g, j, eta)
    in_gap = bounds is not None and bounds.eta_L < eta < bounds.eta_U
    return SupplyCandidate(eta=eta, price=price, profit=price * eta, kind=kind,
                           viable=price >= 0 and not in_gap)


def interior_extrema(g: GammaFunctions, j: float, h: float,
                     bounds: BranchBoundaries | None = None) -> list[SupplyCandidate]:
    """Local profit maxima solving ``-h = D̃(j; η)`` with ``D̃' <= 0``.

    The intermediate root (a profit minimum) is dropped. Candidates inside the
    unstable demand gap are kept but marked non-viable.
    """
    if bounds is None:
        bounds = branch_boundaries(g, j)
    folds = coexistence_etas(g, j)
    if folds is not None and folds[0] == folds[1]:
        folds = None

    def resid(e):
        return d_tilde(g, j, e) + h

    out = []
    for eta, seg in fold_roots(resid, ETA_CLAMP, 1 - ETA_CLAMP, folds):
        if seg == 1:
            continue
        if folds is None:
            kind = SupplyKind.INTERIOR_UNIQUE
        else:
            kind = SupplyKind.INTERIOR_LOW if seg == 0 else SupplyKind.INTERIOR_HIGH
        out.append(_make_candidate(g, j, eta, kind, bounds))
    return out


def boundary_extrema(g: GammaFunctions, j: float, h: float,
                     bounds: BranchBoundaries | None = None) -> SupplyCandidate | None:
    """Profit maximum at the end η_L of the low demand branch.

    Along the low branch ``dπ/dη = h + D̃(j; η)``, which equals ``h + p̂_L`` at
    η_L, so the end point is a local maximum exactly when its price is positive.
    """
    if bounds is None:
        bounds = branch_boundaries(g, j)
    if bounds is None or bounds.width <= 0:
        return None
    price = h + bounds.p_hat_L
    if price <= 0:
        return None
    return SupplyCandidate(eta=bounds.eta_L, price=price, profit=price * bounds.eta_L,
                           kind=SupplyKind.BOUNDARY_L, viable=True)


def optimize(g: GammaFunctions, j: float, h: float) -> SupplyOptimum:
    """Global profit maximum over all candidates, with coordination-risk flags.

    Raises :class:`NoViableStrategy` if no candidate has a non-negative price.
    """
    bounds = branch_boundaries(g, j)
    cands = interior_extrema(g, j, h, bounds)
    edge = boundary_extrema(g, j, h, bounds)
    if edge is not None:
        cands.append(edge)
    viable = sorted((c for c in cands if c.viable), key=lambda c: c.profit, reverse=True)
    if not viable:
        raise NoViableStrategy(f"no candidate with a non-negative price at j={j}, h={h}")
    best = viable[0]
    tie = False
    if len(viable) > 1:
        second = viable[1]
        if abs(best.profit - second.profit) <= TIE_RTOL * max(abs(best.profit), abs(second.profit)):
            pair = {best.kind, second.kind}
            if pair == {SupplyKind.INTERIOR_LOW, SupplyKind.INTERIOR_HIGH}:
                tie = True
                best = best if best.kind is SupplyKind.INTERIOR_LOW else second

    coordination = windfall = False
    margin = None
    if bounds is not None and bounds.width > 0:
        p_hat = best.price - h
        inside = bounds.p_hat_L < p_hat < bounds.p_hat_U
        if best.kind is SupplyKind.INTERIOR_HIGH:
            coordination = inside
            margin = bounds.p_hat_U - p_hat
        elif best.kind is SupplyKind.INTERIOR_LOW:
            windfall = inside
    return SupplyOptimum(j=j, h=h, candidates=tuple(cands), best=best,
                         coordination_required=coordination, windfall_possible=windfall,
                         criticality_margin=margin, tie=tie, bounds=bounds)


def profit_curve(g: GammaFunctions, j: float, h: float, etas) -> list[dict]:
    """Rows ``eta, p_d, p_s, pi`` with demand price, effective supply price and profit ``η p_d``."""
    e = np.asarray(etas, dtype=float)
    p_d = h + d_fun(g, j, e)
    p_s = effective_supply_price(g, j, e)
    return [{"eta": float(a), "p_d": float(b), "p_s": float(c), "pi": float(a * b)}
            for a, b, c in zip(e, np.atleast_1d(p_d), np.atleast_1d(p_s))]
