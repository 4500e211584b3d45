"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from bandwagon.asymptotics import (coexistence_width, exact_high, loglog_slope,  # noqa: E402
                                   near_B_fixed_h, near_B_fixed_j, near_null_price)
from bandwagon.demand import branch_boundaries, demand_equilibria  # noqa: E402
from bandwagon.distribution import make_gamma  # noqa: E402
from bandwagon.errors import NoViableStrategy  # noqa: E402
from bandwagon.phase import (critical_points, customer_lines, first_order_line,  # noqa: E402
                             risk_at)
from bandwagon.simulate import (AgentPopulation, finite_n_equilibrium,  # noqa: E402
                                hysteresis_loop, mean_field_iterate, run_introductory,
                                run_tatonnement)
from bandwagon.supply import SupplyKind, optimize  # noqa: E402

G = make_gamma("logistic")
FOLD_MARGIN = 0.05


class Check:
    """Collects sub-results of one criterion and prints a single verdict line."""

    def __init__(self, capsys, number, title, budget):
        self.capsys, self.number, self.title, self.budget = capsys, number, title, budget
        self.failures = []
        self.t0 = time.perf_counter()

    def expect(self, ok, what):
        if not ok:
            self.failures.append(what)

    def close(self, summary=""):
        elapsed = time.perf_counter() - self.t0
        if elapsed >= self.budget:
            self.failures.append(f"runtime {elapsed:.2f}s >= {self.budget}s")
        verdict = "PASS" if not self.failures else "FAIL"
        line = f"[{verdict}] criterion {self.number}: {self.title} ({elapsed:.2f}s / {self.budget}s)"
        if summary:
            line += f" | {summary}"
        if self.failures:
            line += " | failed: " + "; ".join(self.failures)
        with self.capsys.disabled():
            print("\n" + line)
        assert not self.failures, line


def test_criterion_1_critical_points(capsys):
    c = Check(capsys, 1, "critical points A, B, C, D", 5.0)
    cp = critical_points(G)
    c.expect(abs(cp.A.j - 27 * math.sqrt(3) / (8 * math.pi)) < 1e-8, "j_A exact formula")
    c.expect(abs(cp.A.j - 1.86) <= 0.005, "j_A printed value")
    c.expect(abs(cp.B_demand.j - 4 * math.sqrt(3) / math.pi) < 1e-8, "j_B exact formula")
    printed = {"h_A": (cp.A.value, -0.80), "j_B": (cp.B_demand.j, 2.21),
               "h_B": (cp.B_supply.value, -1.10), "j_C": (cp.C.j, 2.61),
               "h_C": (cp.C.value, -1.09), "j_D": (cp.D.j, 3.27), "h_D": (cp.D.value, -1.42)}
    for name, (got, ref) in printed.items():
        c.expect(abs(got - ref) <= 0.01, f"{name}={got:.4f} vs {ref}")
    c.close(", ".join(f"{k}={v[0]:.4f}" for k, v in printed.items()))


def test_criterion_2_first_order_transition(capsys):
    c = Check(capsys, 2, "first-order line at j = 2.5", 1.0)
    h_ch = first_order_line(G, 2.5)
    c.expect(abs(h_ch + 1.247) <= 0.005, f"h_ch(2.5)={h_ch:.5f}")
    low, high = optimize(G, 2.5, -1.27), optimize(G, 2.5, -1.23)
    c.expect(low.best.kind is SupplyKind.INTERIOR_LOW, "(2.5,-1.27) not on the low branch")
    c.expect(high.best.kind is SupplyKind.INTERIOR_HIGH, "(2.5,-1.23) not on the high branch")
    c.close(f"h_ch(2.5)={h_ch:.5f}, low at -1.27, high at -1.23")


def test_criterion_3_scenario_matrix(capsys):
    c = Check(capsys, 3, "policy verdicts at j = 3.5", 1.0)
    p_L = branch_boundaries(G, 3.5).p_hat_L
    h_ch = first_order_line(G, 3.5)
    c.expect(abs(h_ch + 2.0) < 0.05, f"h_ch(3.5)={h_ch:.4f}")

    intro = run_introductory(G, 3.5, -1.2)
    opt = optimize(G, 3.5, -1.2)
    c.expect(intro.feasible, "h=-1.2: introductory price not viable")
    c.expect(opt.best.kind is SupplyKind.INTERIOR_HIGH
             and abs(intro.final_profit - opt.best.profit) < 1e-6, "h=-1.2: high optimum not reached")

    opt = optimize(G, 3.5, -1.4)
    bb = opt.bounds
    inside = all(bb.p_hat_L < opt.candidate(k).price + 1.4 < bb.p_hat_U
                 for k in (SupplyKind.INTERIOR_LOW, SupplyKind.INTERIOR_HIGH))
    c.expect(inside, "h=-1.4: strategies not both inside the multi-valued region")
    c.expect(-1.4 + p_L > 0 and run_introductory(G, 3.5, -1.4).feasible, "h=-1.4: p* not viable")

    c.expect(-1.5 + p_L < 0 and not run_introductory(G, 3.5, -1.5).feasible,
             "h=-1.5: introductory price should not exist")
    c.expect(not run_tatonnement(G, 3.5, -1.5).feasible, "h=-1.5: tatonnement should be trapped")
    c.close(f"p*(-1.2)={-1.2 + p_L:.4f}, p*(-1.4)={-1.4 + p_L:.4f}, p*(-1.5)={-1.5 + p_L:.4f}")


def test_criterion_4_hysteresis(capsys):
    c = Check(capsys, 4, "hysteresis jumps at j = 5", 1.0)
    _, _, p_L, p_U = oracles.boundaries(5.0)
    loop = hysteresis_loop(G, 5.0, p_hat_max=4.0)  # 2000 steps over [0, 4]: step 2e-3
    c.expect(len(loop.up.jumps) == 1 and len(loop.down.jumps) == 1, "expected one jump per sweep")
    down_at = loop.up.jumps[0].p_hat_after if loop.up.jumps else math.nan
    up_at = loop.down.jumps[0].p_hat_after if loop.down.jumps else math.nan
    c.expect(abs(down_at - p_U) <= 2e-3, f"downward jump at {down_at:.5f}, p_U={p_U:.5f}")
    c.expect(abs(up_at - p_L) <= 2e-3, f"upward jump at {up_at:.5f}, p_L={p_L:.5f}")
    c.close(f"down at {down_at:.4f} (p_U={p_U:.4f}), up at {up_at:.4f} (p_L={p_L:.4f})")


def test_criterion_5_asymptotic_orders(capsys):
    c = Check(capsys, 5, "asymptotic exponents", 10.0)
    eps = np.geomspace(1e-6, 1e-3, 12)
    slopes = {}
    for name, fn in (("fixed_j", near_B_fixed_j), ("fixed_h", near_B_fixed_h)):
        d = [exact_high(G, fn(G, e).j, fn(G, e).h)[1] - 0.5 for e in eps]
        slopes[name] = loglog_slope(eps, d)
        c.expect(abs(slopes[name] - 0.5) <= 0.02, f"{name} slope {slopes[name]:.4f}")
    err = []
    for e in eps:
        r = near_null_price(G, 5.0, e)
        err.append(abs(r.eta_plus - exact_high(G, r.j, r.h)[1]))
    slopes["null_price_error"] = loglog_slope(eps, err)
    c.expect(abs(slopes["null_price_error"] - 2.0) <= 0.1, "null-price error not second order")
    # below 1e-5 the coexistence pair is closed analytically, so the fit starts at 3e-5
    we = np.geomspace(3e-5, 1e-2, 12)
    slopes["width"] = loglog_slope(we, [coexistence_width(G, e) for e in we])
    c.expect(abs(slopes["width"] - 1.5) <= 0.05, f"width slope {slopes['width']:.4f}")
    c.close(", ".join(f"{k}={v:.4f}" for k, v in slopes.items()))


def test_criterion_6_oracle_equivalence(capsys):
    c = Check(capsys, 6, "optimizer and demand roots vs brute force", 60.0)
    rng = np.random.default_rng(20240601)
    worst, skipped = 0.0, 0
    for j, h in zip(rng.uniform(0.5, 8, 500), rng.uniform(-4, 2, 500)):
        ref = oracles.max_profit(float(j), float(h))
        try:
            got = optimize(G, float(j), float(h)).best.profit
        except NoViableStrategy:
            skipped += 1
            c.expect(ref <= 0, f"no strategy reported at ({j}, {h}) but oracle finds {ref}")
            continue
        worst = max(worst, abs(got - ref) / abs(ref))
    c.expect(worst <= 1e-6, f"profit rel error {worst:.2e}")
    root_err, count_bad = 0.0, 0
    for j, p in zip(rng.uniform(0, 8, 1000), rng.uniform(-3, 11, 1000)):
        ref = oracles.demand_roots(float(j), float(p))
        got = [r.eta for r in demand_equilibria(G, float(j), float(p)).roots]
        if len(ref) != len(got):
            count_bad += 1
            continue
        root_err = max(root_err, max(abs(a - b) for a, b in zip(got, ref)))
    c.expect(count_bad == 0, f"{count_bad} root-count mismatches")
    c.expect(root_err <= 1e-10, f"root error {root_err:.2e}")
    c.close(f"profit rel err {worst:.1e}, root err {root_err:.1e}, no-strategy cases {skipped}")


def test_criterion_7_structural_invariants(capsys):
    c = Check(capsys, 7, "structural invariants", 30.0)
    for j in np.linspace(2.3, 8, 24):
        for h in np.linspace(-5, 2, 29):
            try:
                opt = optimize(G, float(j), float(h))
            except NoViableStrategy:
                continue
            c.expect(opt.best.kind is not SupplyKind.BOUNDARY_L, f"BoundaryL global at ({j}, {h})")
    for j in np.linspace(2.3, 8, 12):
        bb = branch_boundaries(G, float(j))
        for p in np.linspace(bb.p_hat_L, bb.p_hat_U, 9)[1:-1]:
            eq = demand_equilibria(G, float(j), float(p), bb)
            if p > 0:
                c.expect(eq.low().eta * p < eq.high().eta * p, f"branch profit order at ({j}, {p})")
    cp = critical_points(G)
    for j in np.linspace(cp.C.j + 1e-3, 10, 40):
        c.expect(first_order_line(G, float(j)) < risk_at(G, float(j))[1], f"h_ch >= h_m at j={j}")
    lines = customer_lines(G)
    for key, sign in (("pL", -1), ("pU", 1)):
        cv = lines[key]
        slopes = np.diff(cv.value) / np.diff(cv.j)
        c.expect(np.all(sign * np.diff(slopes) > -1e-9), f"{key} curvature sign")
    for name in ("logistic", "gaussian"):
        c.expect(make_gamma(name).check_supply_regularity()[0], f"{name} regularity")
    c.close("BoundaryL never global, branch order, h_ch < h_m above C, curvature, regularity")


def _finite_n_settings(rng, n):
    """Random (j, p̂, start) with p̂ kept FOLD_MARGIN away from the branch ends."""
    out = []
    while len(out) < n:
        j = float(rng.uniform(0.5, 8.0))
        start = "low" if len(out) % 2 == 0 else "high"
        bb = branch_boundaries(G, j)
        if bb is None or bb.p_hat_U - bb.p_hat_L < 2 * FOLD_MARGIN:
            lo, hi = -2.0, j + 2.0
        elif start == "low":
            lo, hi = bb.p_hat_L + FOLD_MARGIN, j + 2.0
        else:
            lo, hi = -2.0, bb.p_hat_U - FOLD_MARGIN
        p = float(rng.uniform(lo, hi))
        if bb is not None and min(abs(p - bb.p_hat_L), abs(p - bb.p_hat_U)) < FOLD_MARGIN:
            continue
        out.append((j, p, start))
    return out


def test_criterion_8_finite_n(capsys):
    c = Check(capsys, 8, "finite-N vs mean field at N = 10^4", 30.0)
    n = 10_000
    rng = np.random.default_rng(8)
    worst, branches = 0.0, set()
    for k, (j, p, start) in enumerate(_finite_n_settings(rng, 100)):
        pop = AgentPopulation.draw(G.dist, n, seed=1000 + k)
        eta0 = 0.0 if start == "low" else 1.0
        eta_n, _, ok = finite_n_equilibrium(pop, j, p, eta0)
        mf = mean_field_iterate(G, j, p, eta0)
        roots = oracles.demand_roots(j, p)
        ref = roots[0] if start == "low" else roots[-1]
        c.expect(ok and mf.converged, f"no convergence at ({j}, {p}, {start})")
        c.expect(abs(mf.eta - ref) < 1e-10, f"mean field off the oracle root at ({j}, {p})")
        worst = max(worst, abs(eta_n - mf.eta))
        if len(roots) == 3:
            branches.add(start)
    c.expect(worst <= 5 / math.sqrt(n), f"max |eta_N - eta_MF| = {worst:.4f}")
    c.expect(branches == {"low", "high"}, "both branches of the bistable band must be exercised")
    c.close(f"max |eta_N - eta_MF| = {worst:.4f} (bound {5 / math.sqrt(n):.3f})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
