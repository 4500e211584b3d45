"""Market dynamics: best-response demand, price sweeps and scripted pricing policies.

Customers update synchronously on the fraction of buyers of the previous step.
In the mean-field limit this is the iteration ``η <- 1 - F(p̂ - jη)``. The map is
nondecreasing in η, so from any start it moves monotonically to the nearest
fixed point in the direction of its first step. :func:`settle` returns that
limit directly, which is how the price policies follow the current branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ._roots import brent
from .demand import BranchBoundaries, branch_boundaries, classify_eta, d_fun, demand_equilibria
from .distribution import ETA_CLAMP, GammaFunctions, IwpDistribution
from .errors import DomainError
from .supply import SupplyKind, optimize

DELTA = 1e-6
MF_TOL = 1e-12
SWEEP_STEPS = 2000
RAMP_STEPS = 200
TATONNEMENT_STEP = 1e-3
SEED_MAX = 2 ** 64 - 1


# ---------------------------------------------------------------------------
# agents

@dataclass(frozen=True)
class AgentPopulation:
    """Quenched idiosyncratic willingness to pay of ``N`` agents (kept sorted)."""

    x: np.ndarray
    seed: int | None = None

    @classmethod
    def draw(cls, dist: IwpDistribution, n: int, seed: int | None = None) -> "AgentPopulation":
        if n <= 0:
            raise DomainError(f"population size must be positive, got {n}")
        if seed is not None and not 0 <= int(seed) <= SEED_MAX:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        rng = np.random.default_rng(None if seed is None else int(seed))
        x = np.sort(np.asarray(dist.sample(rng, n), dtype=float))
        x.setflags(write=False)
        return cls(x=x, seed=seed)

    @property
    def N(self) -> int:
        return int(self.x.size)

    def fraction_at_least(self, threshold: float) -> float:
        """Share of agents with ``x_i >= threshold``."""
        return (self.N - int(np.searchsorted(self.x, threshold, side="left"))) / self.N


def best_response_step(pop: AgentPopulation, j: float, p_hat: float, eta: float) -> float:
    """Synchronous update: agent i buys iff ``x_i + jη - p̂ >= 0``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    return pop.fraction_at_least(p_hat - j * eta)


def finite_n_equilibrium(pop: AgentPopulation, j: float, p_hat: float, eta0: float,
                         max_steps: int = 100_000) -> tuple[float, int, bool]:
    """Iterate best responses until the buyer count stops changing."""
    eta = float(eta0)
    for step in range(1, max_steps + 1):
        new = best_response_step(pop, j, p_hat, eta)
        if new == eta:
            return eta, step, True
        eta = new
    return eta, max_steps, False


# ---------------------------------------------------------------------------
# mean field

def settle(g: GammaFunctions, j: float, p_hat: float, eta0: float,
           bounds: BranchBoundaries | None = None) -> float:
    """Limit of the mean-field iteration started at ``eta0``.

    The iteration grows η exactly where ``D(j; η) > p̂``, so the limit is the
    first root of ``D - p̂`` met when walking from ``eta0`` in that direction.
    Between the folds of D the sign change is bracketed segment by segment.
    """
    def resid(e):
        return float(d_fun(g, j, e)) - p_hat

    lo, hi = ETA_CLAMP, 1.0 - ETA_CLAMP
    e0 = min(max(float(eta0), lo), hi)
    r0 = resid(e0)
    if r0 == 0.0:
        return e0
    folds = [] if bounds is None or bounds.width <= 0 else [bounds.eta_L, bounds.eta_U]
    a = e0
    if r0 > 0:
        for b in [f for f in folds if f > e0] + [hi]:
            if resid(b) <= 0:
                return brent(resid, a, b, name="settle")
            a = b
        return hi
    for b in [f for f in reversed(folds) if f < e0] + [lo]:
        if resid(b) >= 0:
            return brent(resid, b, a, name="settle")
        a = b
    return lo


@dataclass(frozen=True)
class MeanFieldResult:
    eta: float
    steps: int
    converged: bool


def mean_field_iterate(g: GammaFunctions, j: float, p_hat: float, eta0: float,
                       max_steps: int = 100_000, tol: float = MF_TOL) -> MeanFieldResult:
    """Plain iteration ``η <- 1 - F(p̂ - jη)`` until ``|Δη| < tol``.

    On convergence the iterate is polished onto the fixed point it approaches,
    removing the ``tol / (1 - jf)`` lag of a linearly converging sequence.
    """
    if not 0.0 <= eta0 <= 1.0:
        raise DomainError(f"eta0 must lie in [0, 1], got {eta0}")
    sf = g.dist.sf
    eta = float(eta0)
    for step in range(1, max_steps + 1):
        new = float(sf(p_hat - j * eta))
        if abs(new - eta) < tol:
            return MeanFieldResult(settle(g, j, p_hat, new, branch_boundaries(g, j)), step, True)
        eta = new
    return MeanFieldResult(eta, max_steps, False)


# ---------------------------------------------------------------------------
# market state and records

@dataclass(frozen=True)
class MarketRecord:
    t: int
    p: float
    eta: float
    pi: float
    branch: str

    def as_dict(self) -> dict:
        return {"t": self.t, "p": self.p, "eta": self.eta, "pi": self.pi, "branch": self.branch}


@dataclass
class MarketState:
    """Demand following its branch as the seller posts prices."""

    g: GammaFunctions
    j: float
    h: float
    eta: float
    bounds: BranchBoundaries | None = None
    history: list[MarketRecord] = field(default_factory=list)

    @classmethod
    def start(cls, g: GammaFunctions, j: float, h: float, eta: float) -> "MarketState":
        return cls(g=g, j=j, h=h, eta=float(eta), bounds=branch_boundaries(g, j))

    @property
    def p_hat(self) -> float:
        return self.history[-1].p - self.h if self.history else math.nan

    @property
    def branch(self) -> str:
        return self.history[-1].branch if self.history else "unique"

    def side(self) -> str:
        """``low`` or ``high`` side of the unstable gap (``unique`` without one)."""
        b = self.bounds
        if b is None or b.width <= 0:
            return "unique"
        return "low" if self.eta < 0.5 * (b.eta_L + b.eta_U) else "high"

    def post(self, p: float) -> MarketRecord:
        self.eta = settle(self.g, self.j, p - self.h, self.eta, self.bounds)
        branch = classify_eta(self.g, self.j, self.eta, self.bounds)[1].value
        rec = MarketRecord(t=len(self.history), p=float(p), eta=self.eta,
                           pi=float(p) * self.eta, branch=branch)
        self.history.append(rec)
        return rec


# ---------------------------------------------------------------------------
# policies

@dataclass(frozen=True)
class ConstantPrice:
    p: float
    eta0: float = 0.0


@dataclass(frozen=True)
class LinearSweep:
    """Shifted price ``p̂`` moved linearly from ``p_hat_start`` to ``p_hat_end``."""

    p_hat_start: float
    p_hat_end: float
    steps: int = SWEEP_STEPS


@dataclass(frozen=True)
class Introductory:
    delta: float = DELTA
    ramp_steps: int = RAMP_STEPS


@dataclass(frozen=True)
class Tatonnement:
    step: float = TATONNEMENT_STEP
    start: str = "low"


@dataclass(frozen=True)
class MinimaxRegret:
    delta: float = DELTA


PricePolicy = Union[ConstantPrice, LinearSweep, Introductory, Tatonnement, MinimaxRegret]


@dataclass(frozen=True)
class Jump:
    t: int
    direction: str  # "down" or "up" in η
    p_hat_before: float
    p_hat_after: float
    eta_before: float
    eta_after: float


@dataclass
class SweepResult:
    history: list[MarketRecord]
    jumps: list[Jump]


@dataclass
class PolicyOutcome:
    policy: str
    j: float
    h: float
    feasible: bool
    reason: str = ""
    final_price: float = math.nan
    final_eta: float = math.nan
    final_profit: float = math.nan
    history: list[MarketRecord] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"policy": self.policy, "j": self.j, "h": self.h, "feasible": self.feasible,
                "reason": self.reason, "final_price": self.final_price,
                "final_eta": self.final_eta, "final_profit": self.final_profit,
                "details": self.details}


def _follow(state: MarketState, prices, jumps: list[Jump] | None = None) -> None:
    for p in prices:
        before_side, before_eta, before_p = state.side(), state.eta, state.p_hat
        rec = state.post(float(p))
        after_side = state.side()
        if jumps is not None and len(state.history) > 1 and after_side != before_side:
            jumps.append(Jump(t=rec.t, direction="up" if rec.eta > before_eta else "down",
                              p_hat_before=before_p, p_hat_after=rec.p - state.h,
                              eta_before=before_eta, eta_after=rec.eta))


def sweep_price(g: GammaFunctions, j: float, h: float, policy: LinearSweep,
                eta0: float = 1.0, state: MarketState | None = None) -> SweepResult:
    """Move ``p̂`` linearly, following the current branch and logging jumps.

    ``policy.steps`` increments are taken, so ``steps + 1`` prices are posted.
    """
    if state is None:
        state = MarketState.start(g, j, h, eta0)
    first = len(state.history)
    jumps: list[Jump] = []
    p_hats = np.linspace(policy.p_hat_start, policy.p_hat_end, policy.steps + 1)
    _follow(state, h + p_hats, jumps)
    return SweepResult(history=state.history[first:], jumps=jumps)


@dataclass
class HysteresisLoop:
    up: SweepResult
    down: SweepResult

    @property
    def jumps(self) -> list[Jump]:
        return self.up.jumps + self.down.jumps


def hysteresis_loop(g: GammaFunctions, j: float, p_hat_max: float, p_hat_min: float = 0.0,
                    steps: int = SWEEP_STEPS, h: float = 0.0) -> HysteresisLoop:
    """Sweep ``p̂`` up from ``p_hat_min`` (starting on the high branch) and back down."""
    state = MarketState.start(g, j, h, 1.0)
    up = sweep_price(g, j, h, LinearSweep(p_hat_min, p_hat_max, steps), state=state)
    down = sweep_price(g, j, h, LinearSweep(p_hat_max, p_hat_min, steps), state=state)
    return HysteresisLoop(up=up, down=down)


def guaranteed_profit(g: GammaFunctions, j: float, h: float, p: float) -> tuple[float, float]:
    """``(η, π)`` at price ``p`` if customers coordinate on the worst stable equilibrium."""
    eta = demand_equilibria(g, j, p - h).low().eta
    return eta, p * eta


def _direct(policy: str, g, j, h) -> PolicyOutcome:
    opt = optimize(g, j, h)
    state = MarketState.start(g, j, h, opt.best.eta)
    rec = state.post(opt.best.price)
    return PolicyOutcome(policy=policy, j=j, h=h, feasible=True, reason="single-valued demand",
                         final_price=rec.p, final_eta=rec.eta, final_profit=rec.pi,
                         history=state.history, details={"target": opt.best.kind.value})


def _high_target(g, j, h):
    c = optimize(g, j, h).candidate(SupplyKind.INTERIOR_HIGH)
    return c if c is not None and c.viable else None


def _finish(policy, state, target, details) -> PolicyOutcome:
    rec = state.history[-1]
    return PolicyOutcome(policy=policy, j=state.j, h=state.h, feasible=True,
                         final_price=rec.p, final_eta=rec.eta, final_profit=rec.pi,
                         history=state.history,
                         details={**details, "target_price": target.price,
                                  "target_eta": target.eta, "target_profit": target.profit})


def run_introductory(g: GammaFunctions, j: float, h: float, delta: float = DELTA,
                     ramp_steps: int = RAMP_STEPS) -> PolicyOutcome:
    """Post ``p* - δ`` with ``p* = h + p̂_L`` so only the high demand survives, then ramp up."""
    bounds = branch_boundaries(g, j)
    if bounds is None or bounds.width <= 0:
        return _direct("introductory", g, j, h)
    p_star = h + bounds.p_hat_L
    details = {"p_star": p_star, "delta": delta}
    if p_star - delta < 0:
        return PolicyOutcome(policy="introductory", j=j, h=h, feasible=False,
                             reason="introductory price would lie below cost", details=details)
    target = _high_target(g, j, h)
    if target is None:
        return PolicyOutcome(policy="introductory", j=j, h=h, feasible=False,
                             reason="no viable high-branch optimum", details=details)
    state = MarketState.start(g, j, h, 0.0)
    state.post(p_star - delta)
    _follow(state, np.linspace(p_star - delta, target.price, ramp_steps + 1)[1:])
    return _finish("introductory", state, target, details)


def run_tatonnement(g: GammaFunctions, j: float, h: float, start: str = "low",
                    step: float = TATONNEMENT_STEP) -> PolicyOutcome:
    """Lower the price in small steps until demand jumps to the high branch, then raise it.

    The run starts at the globally optimal price with customers on the ``start``
    side. It is trapped when the price reaches cost with demand still low.
    """
    if start not in ("low", "high"):
        raise DomainError(f"start must be 'low' or 'high', got {start!r}")
    bounds = branch_boundaries(g, j)
    if bounds is None or bounds.width <= 0:
        return _direct("tatonnement", g, j, h)
    opt = optimize(g, j, h)
    state = MarketState.start(g, j, h, 0.0 if start == "low" else 1.0)
    p = opt.best.price
    state.post(p)
    details = {"start": start, "p_start": p, "step": step}
    while state.side() == "low":
        if p <= 0.0:
            details["p_floor"] = 0.0
            rec = state.history[-1]
            return PolicyOutcome(policy="tatonnement", j=j, h=h, feasible=False,
                                 reason="trapped on the low branch down to cost",
                                 final_price=rec.p, final_eta=rec.eta, final_profit=rec.pi,
                                 history=state.history, details=details)
        p = max(p - step, 0.0)
        state.post(p)
    details["p_escape"] = state.history[-1].p
    target = _high_target(g, j, h)
    if target is None:
        return PolicyOutcome(policy="tatonnement", j=j, h=h, feasible=False,
                             reason="no viable high-branch optimum", history=state.history,
                             details=details)
    n = max(1, int(math.ceil(abs(target.price - p) / step)))
    _follow(state, np.linspace(p, target.price, n + 1)[1:])
    return _finish("tatonnement", state, target, details)


def run_minimax_regret(g: GammaFunctions, j: float, h: float, delta: float = DELTA) -> PolicyOutcome:
    """Best profit that does not rely on customer coordination.

    Fallbacks are the InteriorLow optimum, and the price ``h + p̂_L - δ`` whose
    only equilibrium is on the high branch (admissible when that price is positive).
    """
    bounds = branch_boundaries(g, j)
    if bounds is None or bounds.width <= 0:
        return _direct("minimax_regret", g, j, h)
    opt = optimize(g, j, h)
    fallbacks = {}
    low = opt.candidate(SupplyKind.INTERIOR_LOW)
    if low is not None and low.viable:
        eta, pi = guaranteed_profit(g, j, h, low.price)
        fallbacks["interior_low"] = {"price": low.price, "eta": eta, "profit": pi}
    p2 = h + bounds.p_hat_L - delta
    if p2 >= 0:
        eta, pi = guaranteed_profit(g, j, h, p2)
        fallbacks["edge_high"] = {"price": p2, "eta": eta, "profit": pi}
    details = {"coordination_required": opt.coordination_required, "fallbacks": fallbacks,
               "global_price": opt.best.price, "global_profit": opt.best.profit}
    if not opt.coordination_required:
        choice = {"price": opt.best.price, "eta": opt.best.eta, "profit": opt.best.profit}
        details["choice"] = "global"
    elif fallbacks:
        name = max(fallbacks, key=lambda k: fallbacks[k]["profit"])
        choice = fallbacks[name]
        details["choice"] = name
    else:
        return PolicyOutcome(policy="minimax_regret", j=j, h=h, feasible=False,
                             reason="no coordination-free price with positive margin",
                             details=details)
    state = MarketState.start(g, j, h, 0.0)
    state.post(choice["price"])
    rec = state.history[-1]
    return PolicyOutcome(policy="minimax_regret", j=j, h=h, feasible=True, final_price=rec.p,
                         final_eta=rec.eta, final_profit=rec.pi, history=state.history,
                         details=details)


def run_constant(g: GammaFunctions, j: float, h: float, policy: ConstantPrice,
                 max_steps: int = 10_000) -> PolicyOutcome:
    """Mean-field demand dynamics at a fixed price, one record per iteration."""
    sf = g.dist.sf
    p_hat = policy.p - h
    bounds = branch_boundaries(g, j)
    eta = float(policy.eta0)
    history = []
    for t in range(max_steps + 1):
        branch = classify_eta(g, j, min(max(eta, ETA_CLAMP), 1 - ETA_CLAMP), bounds)[1].value
        history.append(MarketRecord(t=t, p=policy.p, eta=eta, pi=policy.p * eta, branch=branch))
        new = float(sf(p_hat - j * eta))
        if abs(new - eta) < MF_TOL:
            break
        eta = new
    rec = history[-1]
    return PolicyOutcome(policy="constant", j=j, h=h, feasible=policy.p >= 0, final_price=rec.p,
                         final_eta=rec.eta, final_profit=rec.pi, history=history,
                         details={"steps": len(history) - 1})


def run_policy(g: GammaFunctions, j: float, h: float, policy: PricePolicy) -> PolicyOutcome:
    if isinstance(policy, ConstantPrice):
        return run_constant(g, j, h, policy)
    if isinstance(policy, LinearSweep):
        res = sweep_price(g, j, h, policy)
        rec = res.history[-1]
        return PolicyOutcome(policy="sweep", j=j, h=h, feasible=True, final_price=rec.p,
                             final_eta=rec.eta, final_profit=rec.pi, history=res.history,
                             details={"jumps": [vars(x) for x in res.jumps]})
    if isinstance(policy, Introductory):
        return run_introductory(g, j, h, policy.delta, policy.ramp_steps)
    if isinstance(policy, Tatonnement):
        return run_tatonnement(g, j, h, policy.start, policy.step)
    if isinstance(policy, MinimaxRegret):
        return run_minimax_regret(g, j, h, policy.delta)
    raise DomainError(f"unknown policy {policy!r}")
