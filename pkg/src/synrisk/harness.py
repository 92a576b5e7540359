"""Seeded Monte Carlo orchestration over the model modules.

An experiment is a model name, fixed parameters, optional sweep axes
(Cartesian grid), a trial count per grid point and a 64-bit master seed.
Each trial draws its generator from
``SeedSequence(master_seed, spawn_key=(grid_index, trial_index))``, a
splittable counter-based scheme, so results are independent of execution
order and thread count.  A failing trial is recorded as an error row; the
rest of the run completes.

Persisted artifacts: ``rows.csv`` (one row per trial) and ``summary.json``
(full config, a content hash of the scientific part of the config, and
per-grid-point aggregates).  Both files are byte-reproducible for a fixed
config and seed; wall-clock timing lives only on the in-memory record.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import cascade, clearing, debtrank, firesale, network, structure, theory

GLOBAL_CASCADE_FRACTION = 0.05  # a cascade is "global" above this fraction


# ---------------------------------------------------------------------------
# model runners


def _make_graph(kind: str, n: int, z: float, rng) -> network.DirectedGraph:
    if kind == "er_directed":
        return network.gen_erdos_renyi_directed(n, z, rng)
    if kind == "er_undirected":
        return network.gen_erdos_renyi_undirected(n, z, rng)
    raise ValueError(f"unknown graph kind {kind!r}")


def _run_cascade(p: dict, rng: np.random.Generator) -> dict:
    graph = _make_graph(p.get("graph", "er_undirected"), int(p["n"]),
                        float(p["z"]), rng)
    system = cascade.build_gai_kapadia_system(
        graph, capital_ratio=float(p["R_bar"]),
        total_ib_asset_per_bank=float(p.get("ib_assets", 1.0)),
        external_ratio=float(p.get("external_ratio", 4.0)))
    seeds = None
    if "n_seeds" in p:
        seeds = rng.choice(graph.n, size=int(p["n_seeds"]), replace=False)
    outcome = cascade.simulate_default_cascade(
        system, seeds=seeds, seed_fraction=p.get("seed_fraction"),
        rng=rng)
    return {
        "z": float(p["z"]),
        "R_bar": float(p["R_bar"]),
        "default_fraction": outcome.default_fraction,
        "n_defaults": len(outcome.finally_defaulted),
        "rounds": outcome.rounds,
    }


def _cascade_extras(p: dict) -> dict:
    # theory overlay for the Poisson/threshold configuration
    model = network.DegreeModel.poisson(float(p["z"]),
                                        int(p.get("k_max", 200)))
    response = theory.ResponseFunction.deterministic(float(p["R_bar"]))
    result = theory.solve_mean_cascade_size(model, response,
                                            float(p.get("seed_fraction", 0.0)))
    return {"rho_theory": result.rho}


def _run_theory(p: dict, rng: np.random.Generator) -> dict:
    model = _degree_model(p)
    response = _response(p)
    rho0 = float(p.get("rho0", 0.0))
    res = theory.solve_mean_cascade_size(model, response, rho0)
    first, first_value = res.conditions["first_order"]
    second, disc = res.conditions["second_order"]
    watts, watts_margin = res.conditions["watts"]
    return {
        "z": model.mean_degree,
        "q_star": res.q_star,
        "rho": res.rho,
        "first_order": first, "first_order_value": first_value,
        "second_order": second, "discriminant": disc,
        "watts": watts, "watts_margin": watts_margin,
        "mean_cluster_size": res.mean_cluster_size,
    }


def _degree_model(p: dict) -> network.DegreeModel:
    kind = p.get("distribution", "poisson")
    k_max = int(p.get("k_max", 200))
    if kind == "poisson":
        return network.DegreeModel.poisson(float(p["z"]), k_max)
    if kind == "regular":
        return network.DegreeModel.regular(int(p["z"]), k_max)
    if kind == "powerlaw":
        return network.DegreeModel.powerlaw(float(p["exponent"]),
                                            int(p.get("k_min", 1)), k_max)
    if kind == "lognormal":
        return network.DegreeModel.lognormal(float(p["mu"]),
                                             float(p["sigma"]), k_max)
    if kind == "empirical":
        return network.DegreeModel.empirical(p["p_k"], k_max)
    raise ValueError(f"unknown distribution {kind!r}")


def _response(p: dict) -> theory.ResponseFunction:
    if "cdf_x" in p:
        return theory.ResponseFunction.tabulated(p["cdf_x"], p["cdf_f"])
    return theory.ResponseFunction.deterministic(float(p["R"]))


def _run_firesale(p: dict, rng: np.random.Generator) -> dict:
    graph = network.gen_bipartite_er(int(p["n"]), int(p["m"]),
                                     float(p["diversification"]), rng)
    system = firesale.PortfolioSystem.from_bipartite(
        graph, leverage=float(p["leverage"]),
        total_assets=float(p.get("total_assets", 1.0)),
        max_leverage=p.get("max_leverage"))
    impact = firesale.ImpactFunction(p.get("impact", "loglinear"),
                                     float(p["alpha"]))
    shock = (int(p.get("shock_asset", 0)), float(p["xi"]))
    mode = p.get("mode", "threshold")
    if mode == "threshold":
        out = firesale.simulate_threshold_firesale(system, impact, shock)
    elif mode == "target":
        out = firesale.simulate_leverage_targeting(system, impact, shock,
                                                   float(p.get("gamma", 1.0)))
    elif mode == "buffered":
        out = firesale.simulate_buffered_deleveraging(system, impact, shock)
    else:
        raise ValueError(f"unknown firesale mode {mode!r}")
    row = {
        "leverage": float(p["leverage"]),
        "diversification": float(p["diversification"]),
        "default_fraction": len(out.defaulted) / system.n_banks,
        "global_cascade": len(out.defaulted) / system.n_banks
        > GLOBAL_CASCADE_FRACTION,
        "rounds": out.rounds,
        "equity_loss": out.total_equity_loss,
    }
    if impact.kind == "loglinear":
        row["transfer_radius"] = firesale.transfer_matrix(system, impact)[1]
    return row


def _run_debtrank(p: dict, rng: np.random.Generator) -> dict:
    n = int(p["n"])
    graph = network.gen_erdos_renyi_directed(n, float(p["z"]), rng)
    w = np.zeros((n, n))
    w[graph.src, graph.dst] = rng.uniform(0.0, 1.0, size=graph.n_edges)
    e0 = np.ones(n)
    system = debtrank.ExposureSystem(w, e0)
    target = p.get("target_lambda_max")
    if target is not None:
        radius = debtrank.leverage_spectral_radius(system)
        if radius > 0:
            system = debtrank.ExposureSystem(w * (float(target) / radius), e0)
    shock = np.zeros(n)
    n_shocked = int(p.get("n_shocked", 1))
    shock[rng.choice(n, size=n_shocked, replace=False)] = float(
        p.get("shock_size", 0.1))
    variant = p.get("variant", "iterated")
    if variant == "original":
        traj = debtrank.debtrank_original(system, shock)
    elif variant == "iterated":
        traj = debtrank.debtrank_iterated(system, shock)
    elif variant == "nonlinear":
        traj = debtrank.debtrank_nonlinear(system, shock, float(p["alpha"]))
    else:
        raise ValueError(f"unknown debtrank variant {variant!r}")
    return {
        "lambda_max": debtrank.leverage_spectral_radius(system),
        "mean_loss": float(traj.final.mean()),
        "n_defaulted": len(traj.defaulted),
        "steps": traj.steps,
    }


def _run_clearing(p: dict, rng: np.random.Generator) -> dict:
    n = int(p["n"])
    density = float(p.get("density", 0.5))
    liab = rng.uniform(0.0, float(p.get("liability_scale", 1.0)), (n, n))
    liab *= rng.random((n, n)) < density
    np.fill_diagonal(liab, 0.0)
    inflow = liab.sum(axis=0)
    outflow = liab.sum(axis=1)
    deficit = np.maximum(0.0, outflow - inflow)
    e = deficit + rng.uniform(0.0, float(p.get("equity_buffer", 1.0)), n)
    system = clearing.FinancialSystem(liab, e)
    alpha = float(p.get("alpha", 1.0))
    beta = float(p.get("beta", 1.0))
    if alpha == 1.0 and beta == 1.0:
        res = clearing.clear_eisenberg_noe(system)
    else:
        res = clearing.clear_rogers_veraart(system, alpha, beta)
    return {
        "n_defaults": len(res.defaults),
        "shortfall": float(np.sum(res.p_bar - res.p)),
        "iterations": res.iterations,
    }


def _run_structure(p: dict, rng: np.random.Generator) -> dict:
    n = int(p["n"])
    core_size = int(p["core_size"])
    adj = structure.planted_core_periphery(
        n, core_size, int(p.get("periphery_links", 3)), rng,
        noise=float(p.get("noise", 0.0)))
    part = structure.core_periphery_detect(adj)
    truth = np.zeros(n, dtype=bool)
    truth[:core_size] = True
    found = np.zeros(n, dtype=bool)
    found[sorted(part.core)] = True
    return {
        "error": part.error,
        "normalized_error": part.normalized_error,
        "core_size_found": len(part.core),
        "node_accuracy": float((truth == found).mean()),
    }


MODEL_RUNNERS = {
    "cascade": _run_cascade,
    "theory": _run_theory,
    "firesale": _run_firesale,
    "debtrank": _run_debtrank,
    "clearing": _run_clearing,
    "structure": _run_structure,
}

GRID_EXTRAS = {
    "cascade": _cascade_extras,
}

MODEL_PARAMS = {
    "cascade": {"graph", "n", "z", "R_bar", "ib_assets", "external_ratio",
                "seed_fraction", "n_seeds", "k_max"},
    "theory": {"distribution", "z", "R", "rho0", "k_max", "exponent", "k_min",
               "mu", "sigma", "p_k", "cdf_x", "cdf_f"},
    "firesale": {"n", "m", "diversification", "leverage", "alpha", "impact",
                 "xi", "shock_asset", "mode", "gamma", "total_assets",
                 "max_leverage"},
    "debtrank": {"n", "z", "target_lambda_max", "n_shocked", "shock_size",
                 "variant", "alpha"},
    "clearing": {"n", "density", "liability_scale", "equity_buffer", "alpha",
                 "beta"},
    "structure": {"n", "core_size", "periphery_links", "noise"},
}


# ---------------------------------------------------------------------------
# experiment plumbing


@dataclass
class ExperimentConfig:
    model: str
    params: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)  # [(param_name, [values...])]
    trials: int = 1
    seed: int = 0
    out_dir: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"model", "params", "sweep", "trials", "seed", "out_dir"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(model=data.get("model", ""),
                  params=dict(data.get("params", {})),
                  sweep=[(name, list(vals)) for name, vals in
                         data.get("sweep", [])],
                  trials=int(data.get("trials", 1)),
                  seed=int(data.get("seed", 0)))
        cfg.out_dir = data.get("out_dir")
        return cfg

    def validate(self):
        problems = []
        if self.model not in MODEL_RUNNERS:
            problems.append(f"model: unknown {self.model!r}, expected one of "
                            f"{sorted(MODEL_RUNNERS)}")
        if self.trials < 1:
            problems.append("trials: must be >= 1")
        if not 0 <= self.seed < 2**64:
            problems.append("seed: must fit in 64 bits")
        for axis in self.sweep:
            if len(axis) != 2 or not axis[1]:
                problems.append(f"sweep: axis {axis!r} needs a name and a "
                                "non-empty grid")
        if self.model in MODEL_PARAMS:
            allowed = MODEL_PARAMS[self.model]
            for name in self.params:
                if name not in allowed:
                    problems.append(f"params.{name}: not a parameter of "
                                    f"model {self.model!r}")
            for name, _ in self.sweep:
                if name not in allowed:
                    problems.append(f"sweep.{name}: not a parameter of "
                                    f"model {self.model!r}")
        if problems:
            raise ValueError("invalid experiment config: " + "; ".join(problems))
        return self

    def grid(self) -> list[dict]:
        if not self.sweep:
            return [{}]
        names = [axis[0] for axis in self.sweep]
        return [dict(zip(names, combo))
                for combo in product(*(axis[1] for axis in self.sweep))]

    def digest(self) -> str:
        content = {"model": self.model, "params": self.params,
                   "sweep": [[n, list(v)] for n, v in self.sweep],
                   "trials": self.trials, "seed": self.seed}
        blob = json.dumps(content, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class RunRecord:
    config: ExperimentConfig
    digest: str
    rows: list[dict]
    aggregates: list[dict]
    wall_clock_seconds: float

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows_path = out / "rows.csv"
        columns = _column_order(self.rows)
        with open(rows_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _csv_cell(row.get(k)) for k in columns})
        summary_path = out / "summary.json"
        summary = {
            "config": {"model": self.config.model,
                       "params": self.config.params,
                       "sweep": [[n, list(v)] for n, v in self.config.sweep],
                       "trials": self.config.trials,
                       "seed": self.config.seed},
            "digest": self.digest,
            "aggregates": self.aggregates,
        }
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True, allow_nan=True)
            fh.write("\n")
        return rows_path, summary_path


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _column_order(rows: list[dict]) -> list[str]:
    lead = ["grid_index", "trial", "seed"]
    seen: dict[str, None] = {}
    for row in rows:
        for key in row:
            if key not in lead:
                seen.setdefault(key)
    return lead + list(seen)


def child_rng(master_seed: int, grid_index: int,
              trial: int) -> np.random.Generator:
    """Per-trial generator from the splittable seed hierarchy."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(grid_index, trial))
    return np.random.default_rng(seq)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> RunRecord:
    """Execute the full grid x trials plan and aggregate the rows.

    Identical (config, seed) produce identical rows and aggregates whatever
    the thread count; per-trial model errors become error rows instead of
    aborting the run.
    """
    config.validate()
    grid = config.grid()
    runner = MODEL_RUNNERS[config.model]
    started = time.perf_counter()

    def one_trial(g: int, t: int) -> dict:
        row = {"grid_index": g, "trial": t,
               "seed": f"{config.seed}:{g}:{t}"}
        row.update(grid[g])
        merged = {**config.params, **grid[g]}
        try:
            row.update(runner(merged, child_rng(config.seed, g, t)))
        except Exception as exc:  # crash isolation: record, keep going
            row["trial_error"] = f"{type(exc).__name__}: {exc}"
        return row

    tasks = [(g, t) for g in range(len(grid)) for t in range(config.trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(tasks, pool.map(lambda gt: one_trial(*gt), tasks)))
        rows = [results[gt] for gt in tasks]
    else:
        rows = [one_trial(g, t) for g, t in tasks]

    aggregates = aggregate(rows)
    for g, agg in enumerate(aggregates):
        extras = GRID_EXTRAS.get(config.model)
        if extras is not None:
            try:
                agg.update(extras({**config.params, **grid[g]}))
            except Exception as exc:
                agg["extras_error"] = f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - started
    return RunRecord(config, config.digest(), rows, aggregates, elapsed)


def aggregate(rows: list[dict]) -> list[dict]:
    """Per-grid-point mean, standard error, min and max of numeric fields.

    Rows are folded in trial order; rows carrying a trial_error are counted
    but excluded from the statistics.  The standard error of a single trial is reported as
    None (undefined), never fabricated.
    """
    if not rows:
        return []
    by_grid: dict[int, list[dict]] = {}
    for row in rows:
        by_grid.setdefault(row["grid_index"], []).append(row)
    out = []
    for g in sorted(by_grid):
        group = sorted(by_grid[g], key=lambda r: r["trial"])
        ok = [r for r in group if "trial_error" not in r]
        agg: dict = {"grid_index": g, "n_trials": len(group),
                     "n_errors": len(group) - len(ok)}
        numeric: dict[str, list[float]] = {}
        for row in ok:
            for key, value in row.items():
                if key in ("grid_index", "trial", "seed"):
                    continue
                if isinstance(value, (bool, np.bool_, int, float, np.integer,
                                      np.floating)):
                    numeric.setdefault(key, []).append(float(value))
        for key, values in numeric.items():
            arr = np.array(values)
            agg[f"{key}_mean"] = float(arr.mean())
            agg[f"{key}_stderr"] = (float(arr.std(ddof=1) / np.sqrt(arr.size))
                                    if arr.size > 1 else None)
            agg[f"{key}_min"] = float(arr.min())
            agg[f"{key}_max"] = float(arr.max())
        out.append(agg)
    return out
