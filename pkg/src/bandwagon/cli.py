"""Command-line front end: every computation emitted as CSV or JSON data.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, phase, simulate
from .demand import demand_curve
from .distribution import make_gamma
from .errors import ConvergenceError, DomainError, NoViableStrategy
from .supply import optimize

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
DEFAULT_DEMAND_GRID = 1001


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# output

def fmt(x) -> str:
    """12 significant digits for floats, lowercase booleans, plain strings otherwise."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    if x is None:
        return ""
    return str(x)


def jsonable(obj):
    """Floats rounded to 12 significant digits; NaN and infinities become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(format(x, ".12g")) if math.isfinite(x) else None
    if hasattr(obj, "value"):  # enums
        return obj.value
    return obj


def dumps_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2) + "\n"


def dumps_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


class Sink:
    """Writes named outputs into a directory, or to stdout when none is given."""

    def __init__(self, out: str | None, stdout):
        self.dir = None if out is None else Path(out)
        self.stdout = stdout
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        if self.dir is None:
            self.stdout.write(text)
        else:
            (self.dir / name).write_text(text)
            self.stdout.write(f"{self.dir / name}\n")

    def table(self, stem: str, rows: list[dict], fmt_: str, columns=None) -> None:
        if fmt_ == "json":
            self.write(stem + ".json", dumps_json(rows))
        else:
            self.write(stem + ".csv", dumps_csv(rows, columns))


# ---------------------------------------------------------------------------
# configuration

def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use ``-`` or ``_``."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v.strip("\"'")
    return out


def _floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"expected finite numbers, got {text!r}")
    return vals


def _float(text) -> float:
    vals = _floats(text)
    if len(vals) != 1:
        raise ConfigError(f"expected a single number, got {text!r}")
    return vals[0]


def _seed(text) -> int:
    try:
        s = int(text)
    except ValueError as exc:
        raise ConfigError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= s <= simulate.SEED_MAX:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {s}")
    return s


def _positive_int(text) -> int:
    try:
        n = int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc
    if n <= 0:
        raise ConfigError(f"expected a positive integer, got {n}")
    return n


COMMON = {"dist": ("logistic", str), "out": (None, str), "format": ("csv", str)}
OPTIONS = {
    "demand": {"j": (None, _floats), "grid": (DEFAULT_DEMAND_GRID, _positive_int)},
    "phase-customer": {"grid": (phase.BASE_POINTS, _positive_int), "j_max": (phase.J_MAX, _float)},
    "phase-supply": {"grid": (phase.BASE_POINTS, _positive_int), "j_max": (phase.J_MAX, _float)},
    "optimize": {"j": (None, _float), "h": (None, _float)},
    "simulate": {"policy": ("sweep", str), "j": (None, _float), "h": (0.0, _float),
                 "p_hat": (None, _floats), "p": (None, _float), "steps": (None, _positive_int),
                 "start": ("low", str), "seed": (0, _seed), "agents": (10_000, _positive_int),
                 "eta0": (0.0, _float)},
    "check-dist": {},
    "asymptotics": {"regime": ("fixed_j", str), "j": (5.0, _float), "grid": (13, _positive_int)},
}
POLICIES = ("sweep", "introductory", "tatonnement", "minimax-regret", "constant", "finite-n")
REQUIRED = {"demand": ("j",), "optimize": ("j", "h"), "simulate": ("j",)}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bandwagon", description="Bandwagon-goods market model: data emission.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in OPTIONS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key = value file; flags override it")
        sp.add_argument("--dist", default=None, help="logistic | gaussian | table:<path>")
        sp.add_argument("--out", default=None, help="output directory (stdout if omitted)")
        sp.add_argument("--format", default=None, choices=("csv", "json"))
        for key in opts:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (in increasing precedence) and validate."""
    command = args.command
    schema = {**COMMON, **OPTIONS[command]}
    file_cfg = read_config(args.config) if args.config else {}
    unknown = sorted(set(file_cfg) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    cfg = {}
    for key, (default, conv) in schema.items():
        raw = getattr(args, key, None)
        if raw is None:
            raw = file_cfg.get(key)
        cfg[key] = default if raw is None else conv(raw)
    for key in REQUIRED.get(command, ()):
        if cfg[key] is None:
            raise ConfigError(f"{command} needs --{key.replace('_', '-')}")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    if command == "simulate" and cfg["policy"] not in POLICIES:
        raise ConfigError(f"policy must be one of {', '.join(POLICIES)}")
    if command == "simulate" and cfg["start"] not in ("low", "high"):
        raise ConfigError("start must be low or high")
    if command == "asymptotics":
        try:
            asymptotics.Regime(cfg["regime"])
        except ValueError as exc:
            raise ConfigError(f"unknown regime {cfg['regime']!r}") from exc
    try:
        cfg["g"] = make_gamma(cfg["dist"])
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad distribution {cfg['dist']!r}: {exc}") from exc
    return cfg


# ---------------------------------------------------------------------------
# commands

def cmd_demand(cfg, sink: Sink) -> None:
    g, n = cfg["g"], cfg["grid"]
    etas = np.arange(1, n + 1) / (n + 1)
    cols = ["eta", "p_hat", "stable", "branch"]
    if cfg["format"] == "json":
        curves = [{"j": j, "rows": demand_curve(g, j, etas)} for j in cfg["j"]]
        sink.write("demand.json", dumps_json(curves))
        return
    for j in cfg["j"]:
        if j < 0:
            raise DomainError(f"j must be non-negative, got {j}")
        sink.table(f"demand_j{fmt(j)}", demand_curve(g, j, etas), "csv", cols)


def _grid(cfg, j_min):
    g = cfg["g"]
    base = np.geomspace(1.05 * g.j_A, cfg["j_max"], cfg["grid"])
    return np.concatenate([[j_min], base[base > j_min]])


def _emit_curves(curves, files, cfg, sink, stem):
    if cfg["format"] == "json":
        sink.write(stem + ".json", dumps_json({k: c.rows() for k, c in curves.items()}))
        return
    for key, fname in files.items():
        sink.write(fname, dumps_csv(curves[key].rows(), ["j", "value"]))


def cmd_phase_customer(cfg, sink: Sink) -> None:
    g = cfg["g"]
    curves = phase.customer_lines(g, _grid(cfg, g.critical.j_B))
    _emit_curves(curves, phase.CUSTOMER_FILES, cfg, sink, "phase_customer")
    sink.write("critical_points.json", dumps_json(phase.critical_points(g).as_dict()))


def cmd_phase_supply(cfg, sink: Sink) -> None:
    g = cfg["g"]
    grid = _grid(cfg, g.j_A)
    curves = phase.coexistence_lines(g, grid)
    curves["h_ch"] = phase.first_order_curve(g, grid)
    grid_B = grid[grid >= g.critical.j_B]
    grid_B = np.concatenate([[g.critical.j_B], grid_B[grid_B > g.critical.j_B]])
    curves.update(phase.demand_mirror_lines(g, grid_B))
    curves.update(phase.risk_lines(g, grid_B))
    _emit_curves(curves, phase.SUPPLY_FILES, cfg, sink, "phase_supply")
    sink.write("critical_points.json", dumps_json(phase.critical_points(g).as_dict()))


def cmd_optimize(cfg, sink: Sink) -> None:
    res = optimize(cfg["g"], cfg["j"], cfg["h"])
    sink.write("optimum.json", dumps_json(res.as_dict()))
    if sink.dir is not None and cfg["format"] == "csv":
        sink.table("candidates", [c.as_dict() for c in res.candidates], "csv")


def _policy(cfg):
    name, steps = cfg["policy"], cfg["steps"]
    if name == "introductory":
        return simulate.Introductory(ramp_steps=steps or simulate.RAMP_STEPS)
    if name == "tatonnement":
        return simulate.Tatonnement(start=cfg["start"])
    if name == "minimax-regret":
        return simulate.MinimaxRegret()
    if name == "constant":
        if cfg["p"] is None:
            raise ConfigError("the constant policy needs --p")
        return simulate.ConstantPrice(p=cfg["p"], eta0=cfg["eta0"])
    raise AssertionError(name)


def cmd_simulate(cfg, sink: Sink) -> None:
    g, j, h, name = cfg["g"], cfg["j"], cfg["h"], cfg["policy"]
    if name == "sweep":
        bounds = cfg["p_hat"] or [max(j, 1.0)]
        lo, hi = (0.0, bounds[0]) if len(bounds) == 1 else (bounds[0], bounds[1])
        loop = simulate.hysteresis_loop(g, j, hi, lo, cfg["steps"] or simulate.SWEEP_STEPS, h)
        history = loop.up.history + loop.down.history
        outcome = {"policy": "sweep", "j": j, "h": h, "p_hat_min": lo, "p_hat_max": hi,
                   "jumps": [vars(x) for x in loop.jumps]}
    elif name == "finite-n":
        if not cfg["p_hat"]:
            raise ConfigError("the finite-n policy needs --p-hat")
        p_hat = cfg["p_hat"][0]
        pop = simulate.AgentPopulation.draw(g.dist, cfg["agents"], cfg["seed"])
        eta, history = cfg["eta0"], []
        if not 0.0 <= eta <= 1.0:
            raise DomainError(f"eta0 must lie in [0, 1], got {eta}")
        for t in range(100_000):
            p = h + p_hat
            history.append(simulate.MarketRecord(t=t, p=p, eta=eta, pi=p * eta, branch="finite"))
            new = simulate.best_response_step(pop, j, p_hat, eta)
            if new == eta:
                break
            eta = new
        mf = simulate.mean_field_iterate(g, j, p_hat, cfg["eta0"])
        outcome = {"policy": "finite-n", "j": j, "h": h, "p_hat": p_hat, "N": pop.N,
                   "seed": cfg["seed"], "eta_final": eta, "eta_mean_field": mf.eta,
                   "steps": len(history) - 1}
    else:
        res = simulate.run_policy(g, j, h, _policy(cfg))
        history, outcome = res.history, res.as_dict()
    cols = ["t", "p", "eta", "pi", "branch"]
    rows = [r.as_dict() for r in history]
    if sink.dir is None:
        sink.write("outcome.json", dumps_json(outcome))
        return
    sink.table("trajectory", rows, cfg["format"], cols)
    sink.write("outcome.json", dumps_json(outcome))


def cmd_check_dist(cfg, sink: Sink) -> int:
    g = cfg["g"]
    ok, bad = g.check_supply_regularity()
    out = {"dist": cfg["dist"], "regular": ok,
           "first_violation": bad,
           "moments": list(g.dist.moments())}
    if ok:
        c = g.critical
        out.update({"eta_B": c.eta_B, "j_B": c.j_B, "f_B": c.f_B,
                    "eta_A": g.eta_A, "j_A": g.j_A})
    sink.write("check_dist.json", dumps_json(out))
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_asymptotics(cfg, sink: Sink) -> None:
    g, n = cfg["g"], cfg["grid"]
    eps = np.geomspace(1e-6, 1e-3, n)
    rows = asymptotics.convergence_table(g, cfg["regime"], eps, cfg["j"])
    sink.table(f"asymptotics_{cfg['regime']}", rows, cfg["format"],
               ["epsilon", "predicted", "exact", "abs_error"])


COMMANDS = {
    "demand": cmd_demand,
    "phase-customer": cmd_phase_customer,
    "phase-supply": cmd_phase_supply,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "check-dist": cmd_check_dist,
    "asymptotics": cmd_asymptotics,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        sink = Sink(cfg["out"], stdout)
    except ConfigError as exc:
        stderr.write(f"bandwagon: error: {exc}\n")
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        with np.errstate(all="ignore"):
            code = COMMANDS[args.command](cfg, sink)
    except (ConfigError, DomainError) as exc:
        stderr.write(f"bandwagon: error: {exc}\n")
        return EXIT_CONFIG
    except (ConvergenceError, NoViableStrategy, FloatingPointError, ArithmeticError) as exc:
        stderr.write(f"bandwagon: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
