"""Command-line entry point: ``mmlab {quotes,path,table,ode} --config FILE``."""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, emit_config, load_config, with_overrides
from .errors import ConfigError
from .ode import OdeSystem, ode_quotes, solve_backward
from .quotes import MarketState, Utility, compute_quotes, value_lower_bound
from .rng import derive_path_key
from .sim import Strategy, run_monte_carlo, simulate_path
from .stats import StatsRecord, histogram, single_path_record, summarize

log = logging.getLogger("mmlab")

LABEL_COLUMNS = ["strategy", "belief", "sweep_param", "sweep_value"]


def _num(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    value = float(value)
    return "nan" if math.isnan(value) else f"{value:.6f}"


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else _num(v) for v in row) + "\n")
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def label(strategy: Strategy, belief: str) -> str:
    return f"{strategy.value}-{belief}"


# -- table -------------------------------------------------------------------


def build_table(cfg: RunConfig) -> list[tuple[dict, StatsRecord, np.ndarray]]:
    """Simulate every (sweep point, strategy, belief) and summarise it."""
    out = []
    for strategy, belief, name, value, sim in cfg.runs():
        log.info("running %s sweep=%s:%s (%d paths)", label(strategy, belief), name, value, sim.n_paths)
        ens = run_monte_carlo(sim, workers=cfg.workers)
        if len(ens) == 1:
            rec = single_path_record(ens.pnl[0], ens.q_final[0])
        else:
            rec = summarize(ens.pnl, ens.q_final)
        labels = {
            "strategy": strategy.value,
            "belief": belief,
            "sweep_param": name or "",
            "sweep_value": value,
        }
        out.append((labels, rec, ens.pnl))
    return out


def format_table(rows, table_format: str = "csv") -> str:
    columns = LABEL_COLUMNS + StatsRecord.columns()
    if table_format == "json":
        records = []
        for labels, rec, _ in rows:
            item = dict(labels)
            for key, v in rec.as_dict().items():
                item[key] = None if isinstance(v, float) and math.isnan(v) else (
                    round(v, 6) if isinstance(v, float) else v
                )
            records.append(item)
        return json.dumps({"columns": columns, "rows": records}, indent=2) + "\n"
    body = []
    for labels, rec, _ in rows:
        body.append([labels["strategy"], labels["belief"], labels["sweep_param"],
                     labels["sweep_value"]] + list(rec.as_dict().values()))
    return _csv(columns, body)


def cmd_table(cfg: RunConfig) -> list[Path]:
    rows = build_table(cfg)
    out = Path(cfg.output_dir)
    ext = "json" if cfg.table_format == "json" else "csv"
    written = [
        _write(out / f"table.{ext}", format_table(rows, cfg.table_format)),
        _write(out / "manifest.cfg", emit_config(cfg)),
    ]
    if cfg.histogram_bins:
        for labels, _, pnl in rows:
            lo, hi = float(np.min(pnl)), float(np.max(pnl))
            if hi <= lo:
                lo, hi = lo - 0.5, hi + 0.5
            h = histogram(pnl, cfg.histogram_bins, (lo, hi))
            tag = f"{labels['strategy']}-{labels['belief']}"
            if labels["sweep_param"]:
                tag += f"-{labels['sweep_param']}{labels['sweep_value']!r}"
            written.append(_write(out / f"hist_{tag}.csv", _csv(["bin_left", "bin_right", "count"], h.rows())))
    return written


# -- path --------------------------------------------------------------------


def trajectory_csv(traj) -> str:
    ask = traj.s + traj.delta_ask
    bid = traj.s - traj.delta_bid
    rows = zip(traj.t, traj.s, ask, bid, traj.q, traj.x, traj.pnl)
    return _csv(["t", "s", "ask", "bid", "q", "x", "pnl"], rows)


def cmd_path(cfg: RunConfig, path_index: int = 0) -> list[Path]:
    """One trajectory per (strategy, belief) on the same path key.

    All runs share the price noise and fill uniforms, so with more than one
    run a ``path_compare.csv`` lines their PNLs up against each other.
    """
    key = derive_path_key(cfg.seed, path_index)
    out = Path(cfg.output_dir)
    written, pnls, grid, prices = [], {}, None, None
    name, value = cfg.sweep_points()[0]
    for strategy in cfg.strategy:
        for belief in cfg.belief:
            sim = cfg.sim_config(strategy, belief, name, value)
            res = simulate_path(sim, key, record=True)
            traj = res.trajectory
            tag = label(strategy, belief)
            written.append(_write(out / f"path_{tag}.csv", trajectory_csv(traj)))
            pnls[tag] = traj.pnl
            grid, prices = traj.t, traj.s
    if len(pnls) > 1:
        header = ["t", "s"] + [f"pnl_{tag}" for tag in pnls]
        rows = zip(grid, prices, *pnls.values())
        written.append(_write(out / "path_compare.csv", _csv(header, rows)))
    return written


# -- ode ---------------------------------------------------------------------


def cmd_ode(cfg: RunConfig) -> Path:
    model = cfg.price_model()
    params = replace(cfg.strategy_params(), utility=Utility.EXPONENTIAL)
    sol = solve_backward(OdeSystem.from_model(model, params, q_max=cfg.q_max, n_steps=cfg.ode_steps))
    buf = io.StringIO()
    buf.write("t,q,v_q\n")
    for i, t in enumerate(sol.grid):
        for j, q in enumerate(sol.inventories):
            buf.write(f"{t:.6f},{q},{sol.values[i, j]:.12e}\n")
    return _write(Path(cfg.output_dir) / "ode.csv", buf.getvalue())


# -- quotes ------------------------------------------------------------------


def cmd_quotes(cfg: RunConfig, t: float, s: float, q: int, x: float) -> str:
    header = ["strategy", "belief", "delta_ask", "delta_bid", "spread", "indifference", "value_bound"]
    rows = []
    state = MarketState(t=t, s=s, q=q, x=x)
    name, value = cfg.sweep_points()[0]
    for strategy in cfg.strategy:
        for belief in cfg.belief:
            sim = cfg.sim_config(strategy, belief, name, value)
            if strategy is Strategy.ODE_EXPONENTIAL:
                params = replace(sim.params, utility=Utility.EXPONENTIAL)
                sol = solve_backward(OdeSystem.from_model(sim.belief, params, q_max=cfg.q_max,
                                                         n_steps=cfg.ode_steps))
                qp = ode_quotes(sol, t, q, s)
                bound = float("nan")
            else:
                params = replace(sim.params, utility=Utility(strategy.value))
                qp = compute_quotes(sim.belief, params, state)
                bound = value_lower_bound(sim.belief, params, state)
            rows.append([strategy.value, belief, qp.delta_ask, qp.delta_bid, qp.spread,
                         qp.indifference, bound])
    return _csv(header, rows)


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--paths", type=int, help="override n_paths")
        p.add_argument("--out", help="override output_dir")
        p.add_argument("--workers", type=int, help="worker processes for Monte Carlo")
        return p

    p = common(sub.add_parser("quotes", help="print optimal quotes at a state"))
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--s", type=float, help="mid-price (default s0)")
    p.add_argument("--q", type=int, help="inventory (default q0)")
    p.add_argument("--x", type=float, help="cash (default x0)")
    p = common(sub.add_parser("path", help="dump single trajectories as CSV"))
    p.add_argument("--path-index", type=int, default=0)
    common(sub.add_parser("table", help="Monte Carlo statistics table"))
    common(sub.add_parser("ode", help="dump the v_q(t) grid as CSV"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, seed=args.seed, n_paths=args.paths, output_dir=args.out,
                             workers=args.workers)
        if args.command == "quotes":
            s = cfg.s0 if args.s is None else args.s
            q = cfg.q0 if args.q is None else args.q
            x = cfg.x0 if args.x is None else args.x
            sys.stdout.write(cmd_quotes(cfg, args.t, s, q, x))
            return 0
        if args.command == "path":
            written = cmd_path(cfg, args.path_index)
        elif args.command == "table":
            written = cmd_table(cfg)
        else:
            written = [cmd_ode(cfg)]
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
