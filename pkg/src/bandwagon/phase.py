"""Boundary curves and critical points of the customer and supply phase diagrams.

Customer plane (j, p̂): the lines p̂_L(j) and p̂_U(j) bound the region with two
stable demands and meet at the cusp B.

Supply plane (j, h):
  h_plus, h_minus   bounds of the region with two local profit maxima (apex A)
  h_ch              first-order line where both maxima give the same profit
  h_zero = -p̂_U     null-price line of the high strategy (starts at B)
  minus_pL          above it the low branch end η_L is a local profit maximum
  h_M               below it the optimal high price needs customer coordination
  h_m               above it the low strategy's price lies in the multi-valued band
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._roots import brent, clamped_root
from .demand import branch_boundaries, d_fun
from .distribution import ETA_CLAMP, GammaFunctions
from .errors import ConvergenceError, DomainError
from .supply import APEX_TOL, coexistence_etas, d_tilde, effective_supply_price

J_MAX = 10.0
BASE_POINTS = 400
HCH_XTOL = 1e-10

CUSTOMER_FILES = {"pL": "phase_customer_pL.csv", "pU": "phase_customer_pU.csv"}
SUPPLY_FILES = {
    "h_plus": "phase_supply_hplus.csv",
    "h_minus": "phase_supply_hminus.csv",
    "h_ch": "phase_supply_hch.csv",
    "h_zero": "phase_supply_h0.csv",
    "minus_pL": "phase_supply_minus_pL.csv",
    "h_M": "phase_supply_hM.csv",
    "h_m": "phase_supply_hm.csv",
}


@dataclass(frozen=True)
class PhaseCurve:
    name: str
    j: np.ndarray
    value: np.ndarray
    j_min: float
    j_max: float

    def __call__(self, j):
        """Linear interpolation of the sampled curve."""
        return np.interp(j, self.j, self.value)

    def rows(self) -> list[dict]:
        return [{"j": float(a), "value": float(b)} for a, b in zip(self.j, self.value)]


@dataclass(frozen=True)
class CriticalPoint:
    j: float
    value: float
    eta: float


@dataclass(frozen=True)
class CriticalPoints:
    A: CriticalPoint
    B_demand: CriticalPoint
    B_supply: CriticalPoint
    C: CriticalPoint
    D: CriticalPoint

    def as_dict(self) -> dict:
        out = {}
        for name in ("A", "B_demand", "B_supply", "C", "D"):
            p = getattr(self, name)
            key = "p_hat" if name == "B_demand" else "h"
            out[name] = {"j": p.j, key: p.value, "eta": p.eta}
        return out


# ---------------------------------------------------------------------------
# pointwise lines

def apex(g: GammaFunctions) -> CriticalPoint:
    """Point A where the two local profit maxima are born."""
    e = g.eta_A
    h_A = float(g.gamma_tilde(e)) - e * float(g.dgamma_tilde(e))
    return CriticalPoint(j=g.j_A, value=h_A, eta=e)


def cusp(g: GammaFunctions) -> CriticalPoint:
    """Customer cusp B as (j_B, p̂_B)."""
    c = g.critical
    return CriticalPoint(j=c.j_B, value=float(d_fun(g, c.j_B, c.eta_B)), eta=c.eta_B)


def coexistence_at(g: GammaFunctions, j: float) -> tuple[float, float]:
    """``(h_plus, h_minus) = -D̃(j; η_±(j))``."""
    etas = coexistence_etas(g, j)
    if etas is None:
        raise DomainError(f"no coexistence of profit maxima for j={j} <= j_A={g.j_A}")
    e_minus, e_plus = etas
    return -d_tilde(g, j, e_plus), -d_tilde(g, j, e_minus)


def demand_lines_at(g: GammaFunctions, j: float) -> tuple[float, float, float, float]:
    """``(η_L, η_U, p̂_L, p̂_U)``; collapses to the cusp within 1e-5 of j_B."""
    b = cusp(g)
    if j < b.j:
        raise DomainError(f"demand is single valued for j={j} < j_B={b.j}")
    if j - b.j < APEX_TOL:
        return b.eta, b.eta, b.value, b.value
    bb = branch_boundaries(g, j)
    return bb.eta_L, bb.eta_U, bb.p_hat_L, bb.p_hat_U


def risk_etas(g: GammaFunctions, j: float) -> tuple[float, float]:
    """``(η_M, η_m)``: high-branch root of D = p̂_L and low-branch root of D = p̂_U."""
    eta_L, eta_U, pL, pU = demand_lines_at(g, j)
    if eta_L == eta_U:
        return eta_L, eta_L
    eta_M = clamped_root(lambda e: d_fun(g, j, e) - pL, eta_U, 1 - ETA_CLAMP)
    eta_m = clamped_root(lambda e: d_fun(g, j, e) - pU, ETA_CLAMP, eta_L)
    return eta_M, eta_m


def risk_at(g: GammaFunctions, j: float) -> tuple[float, float]:
    """``(h_M, h_m) = (-D̃(j; η_M), -D̃(j; η_m))``."""
    eta_M, eta_m = risk_etas(g, j)
    return -d_tilde(g, j, eta_M), -d_tilde(g, j, eta_m)


def _branch_root(g, j, h, lo, hi):
    return clamped_root(lambda e: d_tilde(g, j, e) + h, lo, hi)


def first_order_line(g: GammaFunctions, j: float, seed: float | None = None) -> float:
    """``h_ch(j)``: mean willingness to pay at which low and high strategies tie.

    Solves ``π_high(h) - π_low(h) = 0`` on ``[max(h_+, h_0), h_-]``. ``seed`` (a
    nearby previous solution) is tried first with a narrow bracket.
    """
    if j <= g.j_A:
        raise DomainError(f"h_ch is defined only for j > j_A={g.j_A}")
    a = apex(g)
    if j - a.j < APEX_TOL:
        return a.value
    e_minus, e_plus = coexistence_etas(g, j)
    h_plus, h_minus = -d_tilde(g, j, e_plus), -d_tilde(g, j, e_minus)
    floor = h_plus
    if j > g.critical.j_B:
        floor = max(h_plus, -demand_lines_at(g, j)[3])

    def gap(h):
        lo = _branch_root(g, j, h, ETA_CLAMP, e_minus)
        hi = _branch_root(g, j, h, e_plus, 1 - ETA_CLAMP)
        return (effective_supply_price(g, j, hi) * hi
                - effective_supply_price(g, j, lo) * lo)

    if floor >= h_minus:
        raise ConvergenceError(f"h_ch({j}): viable high strategy never coexists with the low one")
    if seed is not None and floor < seed < h_minus:
        width = 0.02 * (h_minus - floor) + 1e-9
        a_, b_ = max(floor, seed - width), min(h_minus, seed + width)
        if gap(a_) < 0 < gap(b_):
            return brent(gap, a_, b_, xtol=HCH_XTOL, name="h_ch")
    if not gap(floor) < 0 < gap(h_minus):
        raise ConvergenceError(f"h_ch({j}): profit difference does not change sign")
    return brent(gap, floor, h_minus, xtol=HCH_XTOL, name="h_ch")


# ---------------------------------------------------------------------------
# critical points

def _bisect_j(func, lo, hi, name, step=0.05):
    """Scan upward from ``lo`` for the first sign change of ``func``, then refine."""
    a, f_a = lo, func(lo)
    while a < hi:
        b = min(a + step, hi)
        f_b = func(b)
        if f_a * f_b <= 0:
            return brent(func, a, b, xtol=1e-12, name=name)
        a, f_a = b, f_b
    raise ConvergenceError(f"{name}: no sign change on [{lo}, {hi}]")


def critical_points(g: GammaFunctions) -> CriticalPoints:
    """Points A, B (customer and supply planes), C and D."""
    A = apex(g)
    B = cusp(g)
    B_supply = CriticalPoint(j=B.j, value=-B.value, eta=B.eta)
    j_start = B.j + 10 * APEX_TOL

    def c_func(j):
        return risk_etas(g, j)[1] - coexistence_etas(g, j)[0]

    j_C = _bisect_j(c_func, j_start, J_MAX, "j_C")
    eta_m = risk_etas(g, j_C)[1]
    C = CriticalPoint(j=j_C, value=risk_at(g, j_C)[1], eta=eta_m)

    def d_func(j):
        return risk_at(g, j)[1] + demand_lines_at(g, j)[2]

    j_D = _bisect_j(d_func, j_C, J_MAX, "j_D")
    eta_L, _, pL, _ = demand_lines_at(g, j_D)
    D = CriticalPoint(j=j_D, value=-pL, eta=eta_L)
    return CriticalPoints(A=A, B_demand=B, B_supply=B_supply, C=C, D=D)


# ---------------------------------------------------------------------------
# tracing

def default_j_grid(g: GammaFunctions, j_min: float, j_max: float = J_MAX,
                   n: int = BASE_POINTS) -> np.ndarray:
    """Geometric grid from 1.05 j_A to ``j_max`` restricted to ``j > j_min``, with ``j_min`` prepended."""
    base = np.geomspace(1.05 * g.j_A, j_max, n)
    return np.concatenate([[j_min], base[base > j_min]])


def trace(name: str, func, j_grid, tol: float = 1e-2, max_depth: int = 8) -> PhaseCurve:
    """Sample ``func`` on ``j_grid`` and bisect intervals whose value jump exceeds ``tol``.

    The threshold scales with ``max(1, |value|)`` so fast-growing lines are not over-refined.
    """
    js = [float(x) for x in np.sort(np.asarray(j_grid, dtype=float))]
    vals = [func(j) for j in js]
    for _ in range(max_depth):
        new_j, new_v = [js[0]], [vals[0]]
        split = False
        for k in range(1, len(js)):
            scale = max(1.0, abs(vals[k]), abs(vals[k - 1]))
            if abs(vals[k] - vals[k - 1]) > tol * scale:
                mid = 0.5 * (js[k - 1] + js[k])
                new_j.append(mid)
                new_v.append(func(mid))
                split = True
            new_j.append(js[k])
            new_v.append(vals[k])
        js, vals = new_j, new_v
        if not split:
            break
    return PhaseCurve(name=name, j=np.array(js), value=np.array(vals), j_min=js[0], j_max=js[-1])


def customer_lines(g: GammaFunctions, j_grid=None, tol: float = 1e-2) -> dict[str, PhaseCurve]:
    """``pL`` and ``pU`` on ``j >= j_B``."""
    j_B = g.critical.j_B
    grid = default_j_grid(g, j_B) if j_grid is None else np.asarray(j_grid, dtype=float)
    grid = grid[grid >= j_B]
    return {
        "pL": trace("pL", lambda j: demand_lines_at(g, j)[2], grid, tol),
        "pU": trace("pU", lambda j: demand_lines_at(g, j)[3], grid, tol),
    }


def coexistence_lines(g: GammaFunctions, j_grid=None, tol: float = 1e-2) -> dict[str, PhaseCurve]:
    j_A = g.j_A
    grid = default_j_grid(g, j_A) if j_grid is None else np.asarray(j_grid, dtype=float)
    grid = grid[grid > j_A] if j_grid is not None else grid
    if grid.size == 0:
        empty = np.array([])
        return {n: PhaseCurve(n, empty, empty, j_A, j_A) for n in ("h_plus", "h_minus")}
    ap = apex(g)

    def at(j, k):
        if j <= j_A:
            return ap.value
        return coexistence_at(g, j)[k]

    return {"h_plus": trace("h_plus", lambda j: at(j, 0), grid, tol),
            "h_minus": trace("h_minus", lambda j: at(j, 1), grid, tol)}


def first_order_curve(g: GammaFunctions, j_grid=None, tol: float = 1e-2) -> PhaseCurve:
    """``h_ch`` traced by continuation: each solve is seeded by the previous one."""
    j_A = g.j_A
    grid = default_j_grid(g, j_A) if j_grid is None else np.asarray(j_grid, dtype=float)
    ap = apex(g)
    state = {"prev": None}

    def at(j):
        if j <= j_A:
            return ap.value
        val = first_order_line(g, j, seed=state["prev"])
        state["prev"] = val
        return val

    return trace("h_ch", at, grid, tol)


def demand_mirror_lines(g: GammaFunctions, j_grid=None, tol: float = 1e-2) -> dict[str, PhaseCurve]:
    """``minus_pL = -p̂_L`` and the null-price line ``h_zero = -p̂_U``."""
    j_B = g.critical.j_B
    grid = default_j_grid(g, j_B) if j_grid is None else np.asarray(j_grid, dtype=float)
    grid = grid[grid >= j_B]
    return {"minus_pL": trace("minus_pL", lambda j: -demand_lines_at(g, j)[2], grid, tol),
            "h_zero": trace("h_zero", lambda j: -demand_lines_at(g, j)[3], grid, tol)}


def risk_lines(g: GammaFunctions, j_grid=None, tol: float = 1e-2) -> dict[str, PhaseCurve]:
    """``h_M`` (coordination risk of the high strategy) and ``h_m`` (windfall of the low one)."""
    j_B = g.critical.j_B
    grid = default_j_grid(g, j_B) if j_grid is None else np.asarray(j_grid, dtype=float)
    grid = grid[grid >= j_B]
    return {"h_M": trace("h_M", lambda j: risk_at(g, j)[0], grid, tol),
            "h_m": trace("h_m", lambda j: risk_at(g, j)[1], grid, tol)}


def supply_lines(g: GammaFunctions, j_grid=None, tol: float = 1e-2) -> dict[str, PhaseCurve]:
    curves = coexistence_lines(g, j_grid, tol)
    curves["h_ch"] = first_order_curve(g, j_grid, tol)
    curves.update(demand_mirror_lines(g, j_grid, tol))
    curves.update(risk_lines(g, j_grid, tol))
    return curves
