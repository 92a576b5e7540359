"""Command-line entry point.

    synrisk <clear|cascade|theory|debtrank|firesale|structure|sweep>
            --config <file.json> [--seed N] [--out DIR] [--threads N]

Config files are JSON; the ``sweep`` subcommand takes the full experiment
schema with a ``model`` discriminator, the others take the module-specific
payloads documented in each handler.  Results go to stdout as JSON (or CSV
for the sweep-style outputs) and, when ``--out`` is given, to files in that
directory.  Exit codes: 0 on success, 2 on validation errors, 3 on
numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cascade, clearing, debtrank, firesale, harness, network, \
    structure, theory
from .errors import ConvergenceError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(payload: str, out_dir: str | None, filename: str):
    print(payload)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(payload + "\n", encoding="utf-8")


def _cmd_clear(args) -> int:
    """FinancialSystem JSON {"e", "L"} + optional "alpha"/"beta"."""
    cfg = _load_config(args.config)
    system = clearing.FinancialSystem(np.array(cfg["L"], dtype=float),
                                      np.array(cfg["e"], dtype=float))
    alpha = cfg.get("alpha", 1.0)
    beta = cfg.get("beta", 1.0)
    if alpha == 1.0 and beta == 1.0:
        result = clearing.clear_eisenberg_noe(system, verify_uniqueness=True)
    else:
        result = clearing.clear_rogers_veraart(system, alpha, beta)
    _emit(result.to_json(), args.out, "clearing.json")
    return EXIT_OK


def _cmd_cascade(args) -> int:
    """Edge-list network (path or generator spec) + balance-sheet spec.

    Config keys: "network" (edge-list path, or {"kind", "n", "z"}),
    "R_bar", "A_IB", "external_ratio", and "seeds" or "seed_fraction";
    optional "trials" emits one CSV row per trial.
    """
    cfg = _load_config(args.config)
    trials = int(cfg.get("trials", 1))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    net = cfg["network"]
    rows = []
    outcome = None
    for trial in range(trials):
        rng = harness.child_rng(seed, 0, trial)
        if isinstance(net, str):
            graph = network.read_edge_list(net)
            z = float(graph.out_degrees().mean())
        else:
            graph = harness._make_graph(net.get("kind", "er_directed"),
                                        int(net["n"]), float(net["z"]), rng)
            z = float(net["z"])
        system = cascade.build_gai_kapadia_system(
            graph, capital_ratio=float(cfg["R_bar"]),
            total_ib_asset_per_bank=float(cfg.get("A_IB", 1.0)),
            external_ratio=float(cfg.get("external_ratio", 4.0)))
        if "shock" in cfg:
            system = cascade.apply_external_shock(
                system, int(cfg["shock"]["bank"]),
                float(cfg["shock"]["devaluation"]))
        outcome = cascade.simulate_default_cascade(
            system, seeds=cfg.get("seeds"),
            seed_fraction=cfg.get("seed_fraction"), rng=rng)
        rows.append((f"{seed}:0:{trial}", z, float(cfg["R_bar"]),
                     outcome.default_fraction, outcome.rounds))
    _emit(json.dumps(outcome.to_dict()), args.out, "cascade.json")
    if args.out:
        lines = ["seed,z,R_bar,default_fraction,rounds"]
        lines += [f"{s},{z!r},{r!r},{f!r},{rounds}"
                  for s, z, r, f, rounds in rows]
        (Path(args.out) / "cascade_rows.csv").write_text(
            "\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_theory(args) -> int:
    """Distribution + response spec over a z grid.

    Config keys: "distribution" (poisson default), "R" or "cdf_x"/"cdf_f",
    "rho0", and "z_grid" as a list or {"start", "stop", "step"}.
    """
    cfg = _load_config(args.config)
    grid = cfg.get("z_grid", [cfg.get("z")])
    if isinstance(grid, dict):
        grid = np.arange(grid["start"], grid["stop"] + 1e-12,
                         grid["step"]).tolist()
    lines = ["z,q_star,rho,first_order,second_order,watts_margin"]
    for z in grid:
        params = {**cfg, "z": z}
        params.pop("z_grid", None)
        row = harness._run_theory(params, None)
        lines.append(
            f"{row['z']!r},{row['q_star']!r},{row['rho']!r},"
            f"{int(row['first_order'])},{int(row['second_order'])},"
            f"{row['watts_margin']!r}")
    _emit("\n".join(lines), args.out, "theory.csv")
    return EXIT_OK


def _cmd_debtrank(args) -> int:
    """Clearing schema with W in place of L and E0 in place of e.

    Config keys: "L" (exposure matrix W), "e" (initial equities E0),
    "shock", "variant" (original|iterated|nonlinear), "alpha".
    """
    cfg = _load_config(args.config)
    system = debtrank.ExposureSystem(np.array(cfg["L"], dtype=float),
                                     np.array(cfg["e"], dtype=float))
    variant = cfg.get("variant", "iterated")
    shock = cfg["shock"]
    if variant == "original":
        traj = debtrank.debtrank_original(system, shock)
    elif variant == "iterated":
        traj = debtrank.debtrank_iterated(system, shock)
    elif variant == "nonlinear":
        traj = debtrank.debtrank_nonlinear(system, shock,
                                           float(cfg.get("alpha", 0.0)))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    summary = {
        "lambda_max": debtrank.leverage_spectral_radius(system),
        "defaulted": sorted(traj.defaulted),
        "steps": traj.steps,
        "final": traj.final.tolist(),
    }
    _emit(json.dumps(summary), args.out, "debtrank.json")
    header = "t," + ",".join(f"h_{i+1}" for i in range(system.n))
    lines = [header] + [
        f"{t}," + ",".join(repr(float(x)) for x in row)
        for t, row in enumerate(traj.h)]
    if args.out:
        (Path(args.out) / "trajectory.csv").write_text(
            "\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _parse_firesale_shock(spec: str) -> dict:
    parts = spec.split(":")
    if parts[0] == "asset" and len(parts) == 3:
        return {"asset": int(parts[1]), "fraction": float(parts[2])}
    if parts[0] == "bank" and len(parts) == 2:
        return {"banks": [int(tok) for tok in parts[1].split(",")]}
    raise ValueError("shock must be asset:<idx>:<xi> or bank:<idx>[,<idx>...]")


def _cmd_firesale(args) -> int:
    """PortfolioSystem JSON {"Q", "p0", "E", "lambda", "lambda_max",
    "marketable"} with the shock and dynamics given by flags."""
    cfg = _load_config(args.config)
    system = firesale.PortfolioSystem(
        Q=np.array(cfg["Q"], dtype=float),
        p0=np.array(cfg["p0"], dtype=float),
        equity=np.array(cfg["E"], dtype=float),
        liabilities=(np.array(cfg["Q"], dtype=float)
                     @ np.array(cfg["p0"], dtype=float)
                     - np.array(cfg["E"], dtype=float)),
        target_leverage=cfg.get("lambda"),
        max_leverage=cfg.get("lambda_max"),
        marketable=cfg.get("marketable"),
    )
    impact = firesale.ImpactFunction(
        "loglinear" if args.impact == "loglinear" else "linear", args.alpha)
    shock = _parse_firesale_shock(args.shock) if args.shock else None
    if args.mode == "threshold":
        out = firesale.simulate_threshold_firesale(system, impact, shock)
    elif args.mode == "target":
        out = firesale.simulate_leverage_targeting(system, impact, shock,
                                                   args.gamma)
    else:
        out = firesale.simulate_buffered_deleveraging(system, impact, shock)
    _emit(json.dumps(out.to_dict()), args.out, "firesale.json")
    return EXIT_OK


def _cmd_structure(args) -> int:
    """Edge-list path (directly, or via JSON {"network": path})."""
    path = args.config
    with open(path, encoding="utf-8") as fh:
        head = fh.read(1)
    if head != "#":
        path = _load_config(args.config)["network"]
    graph = network.read_edge_list(path)
    part = structure.core_periphery_detect(network.undirected_adjacency(graph))
    _emit(json.dumps(part.to_dict()), args.out, "structure.json")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    """Full experiment schema with a "model" discriminator."""
    cfg = harness.ExperimentConfig.from_dict(_load_config(args.config))
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = args.out or cfg.out_dir or "synrisk_out"
    record = harness.run_experiment(cfg, threads=args.threads)
    rows_path, summary_path = record.write(out_dir)
    print(f"wrote {rows_path} and {summary_path} "
          f"({len(record.rows)} rows, {record.wall_clock_seconds:.1f}s)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synrisk",
        description="Interbank contagion models: clearing, cascades, "
                    "DebtRank, fire sales, network structure.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        doc = (fn.__doc__ or "").strip().splitlines()
        p = sub.add_parser(name, help=doc[0] if doc else None)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for Monte Carlo trials")
        if name == "firesale":
            p.add_argument("--mode", default="threshold",
                           choices=["threshold", "target", "buffered"])
            p.add_argument("--impact", default="loglinear",
                           choices=["linear", "loglinear"])
            p.add_argument("--alpha", type=float, default=1.0)
            p.add_argument("--gamma", type=float, default=1.0)
            p.add_argument("--shock", default=None,
                           help="asset:<idx>:<xi> or bank:<idx>[,<idx>...]")
    return parser


COMMANDS = {
    "clear": _cmd_clear,
    "cascade": _cmd_cascade,
    "theory": _cmd_theory,
    "debtrank": _cmd_debtrank,
    "firesale": _cmd_firesale,
    "structure": _cmd_structure,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, TypeError, OSError,
            json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
