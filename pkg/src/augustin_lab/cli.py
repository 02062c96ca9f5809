"""Experiment runner.

Subcommands build a problem instance from a config (JSON file plus flag
overrides), run the relevant solver, and persist trace CSVs next to a
manifest that echoes the config and content-hashes every output file.
Figures are not rendered; the CSVs are tidy input for any plotting tool.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from time import perf_counter

import numpy as np

from . import augustin, capacity, fisher, oracles
from .divergences import AugustinProblem, ClassicalAugustinProblem, objective_f
from .errors import AugustinLabError, InvalidInput
from .linalg import (
    hermitize,
    matrix_power,
    random_density_ensemble,
    thompson_metric_psd,
    thompson_metric_vec,
)

TASKS = ("augustin", "classical", "capacity", "fisher", "counterexample", "divergence_demo")
SCHEDULES = ("synchronous", "round-robin", "random")
OUT_ENV = "AUGUSTIN_LAB_OUT"

# Printed 2x2 instance for which the one-shot operator fails to contract at
# ratio |1 - 1/alpha| (order 3).
COUNTEREXAMPLE_STATE = np.array([[19.5364, 4.42], [4.42, 1.1]])
COUNTEREXAMPLE_U = np.array([[2 / 3, 1 / 3], [1 / 3, 1 / 3]])
COUNTEREXAMPLE_V = np.array([[1 / 2.1, 1 / 2.1], [1 / 2.1, 1.1 / 2.1]])
COUNTEREXAMPLE_ORDER = 3.0
COUNTEREXAMPLE_EXPECTED = (1.4366, 1.3668)

# Hand-built 3x3 instance on which the sweep fails to converge for small orders.
DEMO_POINTS = np.array(
    [
        [0.9, 0.09, 0.01],
        [0.009, 0.99, 0.001],
        [0.0001, 0.0009, 0.999],
    ]
)
DEMO_WEIGHTS = np.array([1 / 3, 1 / 3, 1 / 3])
DEMO_ORDERS = (0.2, 0.4)


@dataclass
class ExperimentConfig:
    task: str = "augustin"
    seed: int = 0
    n: int = 8
    d: int = 16
    alpha: float = 1.5
    iters: int = 60
    out: str | None = None
    threads: int = 1
    residual_tol: float = 1e-10
    # capacity
    outer_steps: int = 50
    inner_eps: float = 1e-9
    # fisher
    buyers: int = 5
    goods: int = 6
    rho_min: float = 0.1
    rho_max: float = 0.7
    rho_hat: float = 0.75
    epochs: int = 20
    schedule: str = "synchronous"
    # divergence demo
    polyak_steps: int = 1000
    grid_resolution: int = 1000


def validate_config(cfg: ExperimentConfig) -> list[str]:
    """Return a list of violations; empty means the config is runnable."""
    bad = []
    if cfg.task not in TASKS:
        bad.append(f"unknown task {cfg.task!r}")
    if cfg.n < 1 or cfg.d < 1:
        bad.append("n and d must be >= 1")
    if cfg.iters < 1:
        bad.append("iteration budget must be >= 1")
    if cfg.threads < 1:
        bad.append("threads must be >= 1")
    if cfg.task in ("augustin", "classical"):
        if not (cfg.alpha > 0 and cfg.alpha != 1):
            bad.append(f"order {cfg.alpha} outside (0,1)u(1,inf)")
    if cfg.task == "capacity":
        if not (0.5 < cfg.alpha < 1.0):
            bad.append(f"capacity requires order in (1/2,1); got {cfg.alpha}")
        if cfg.outer_steps < 1:
            bad.append("outer_steps must be >= 1")
        if not cfg.inner_eps > 0:
            bad.append("inner_eps must be positive")
    if cfg.task == "fisher":
        if not (0 < cfg.rho_min <= cfg.rho_max < 1):
            bad.append("need 0 < rho_min <= rho_max < 1")
        if not (cfg.rho_max <= cfg.rho_hat < 1):
            bad.append(f"seller bound {cfg.rho_hat} must lie in [max elasticity, 1)")
        if cfg.schedule not in SCHEDULES:
            bad.append(f"unknown schedule {cfg.schedule!r}")
        if cfg.epochs < 1:
            bad.append("epochs must be >= 1")
        if cfg.buyers < 1 or cfg.goods < 1:
            bad.append("buyers and goods must be >= 1")
    if cfg.task == "divergence_demo":
        if cfg.polyak_steps < 1:
            bad.append("polyak_steps must be >= 1")
        if cfg.grid_resolution < 3:
            bad.append("grid_resolution must be >= 3")
    return bad


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):  # includes numpy float scalars
        return repr(float(x))
    return str(x)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Workspace:
    """Output directory plus the manifest accumulated while a task runs."""

    def __init__(self, cfg: ExperimentConfig):
        self.dir = _resolve_out_dir(cfg)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.results: dict = {}
        self.began = perf_counter()

    def path(self, name: str) -> Path:
        return self.dir / name

    def finalize(self) -> Path:
        files = {}
        for p in sorted(self.dir.iterdir()):
            if p.name == "manifest.json" or p.is_dir():
                continue
            files[p.name] = {"sha256": _sha256(p), "bytes": p.stat().st_size}
        manifest = {
            "config": asdict(self.cfg),
            "files": files,
            "wall_time_ms": (perf_counter() - self.began) * 1e3,
            "results": self.results,
        }
        out = self.path("manifest.json")
        out.write_text(json.dumps(manifest, indent=1, sort_keys=True))
        return out


def _resolve_out_dir(cfg: ExperimentConfig) -> Path:
    if cfg.out:
        return Path(cfg.out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env) / cfg.task
    return Path("runs") / cfg.task


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------


def run_counterexample(cfg: ExperimentConfig) -> int:
    ws = Workspace(cfg)
    alpha = COUNTEREXAMPLE_ORDER
    state = COUNTEREXAMPLE_STATE / np.trace(COUNTEREXAMPLE_STATE)
    problem = AugustinProblem.create([state.astype(complex)], [1.0], alpha)

    def one_shot(q):
        powered = matrix_power(hermitize(q), 1.0 - alpha)
        return matrix_power(augustin.apply_T_F(problem, powered), 1.0 / (1.0 - alpha))

    lhs = thompson_metric_psd(one_shot(COUNTEREXAMPLE_V), one_shot(COUNTEREXAMPLE_U))
    rhs = augustin.contraction_factor(alpha) * thompson_metric_psd(
        COUNTEREXAMPLE_V, COUNTEREXAMPLE_U
    )
    expected_lhs, expected_rhs = COUNTEREXAMPLE_EXPECTED
    ok = (
        abs(lhs - expected_lhs) <= 1e-3
        and abs(rhs - expected_rhs) <= 1e-3
        and lhs > rhs
    )
    print(f"one-shot image distance : {lhs:.6f} (expected {expected_lhs} +/- 1e-3)")
    print(f"contraction-ratio bound : {rhs:.6f} (expected {expected_rhs} +/- 1e-3)")
    print("PASS" if ok else "FAIL")
    ws.results = {"image_distance": lhs, "ratio_bound": rhs, "pass": ok}
    _write_csv(
        ws.path("counterexample.csv"),
        ["quantity", "value"],
        [["image_distance", lhs], ["ratio_bound", rhs], ["exceeds", int(lhs > rhs)]],
    )
    ws.finalize()
    return 0 if ok else 3


def run_divergence_demo(cfg: ExperimentConfig) -> int:
    ws = Workspace(cfg)
    cache = oracles.OracleCache(ws.path("oracle_cache.json"))
    summary = {}
    for alpha in DEMO_ORDERS:
        problem = ClassicalAugustinProblem.create(DEMO_POINTS, DEMO_WEIGHTS, alpha)
        grid = oracles.GridSpec(resolution=cfg.grid_resolution, dimension=3)
        _, f_grid = oracles.grid_min_classical_augustin(problem, grid, cache)
        polyak = augustin.emd_polyak_run(
            problem, steps=cfg.polyak_steps, f_best=f_grid - 1e-4
        )
        reference = polyak.best_point / polyak.best_point.sum()
        report = augustin.solve_classical_augustin(
            problem,
            max_iter=cfg.iters,
            residual_tol=0.0,
            reference=reference,
            keep_iterates=True,
        )
        tag = f"alpha{alpha:g}".replace(".", "p")
        report.iterates.to_csv(ws.path(f"demo_{tag}_trace.csv"))
        f_ref = objective_f(problem, reference)
        _write_csv(
            ws.path(f"demo_{tag}_errors.csv"),
            ["step", "opt_error", "iterate_error"],
            [
                [row.step, row.f_value - f_ref, row.dist_to_reference]
                for row in report.iterates
            ],
        )
        best_proposed = min(row.f_value for row in report.iterates)
        summary[str(alpha)] = {
            "grid_min": f_grid,
            "polyak_best": polyak.best_value,
            "proposed_best": best_proposed,
            "separation": best_proposed - polyak.best_value,
            "stop_reason": report.stop_reason,
            "steps_recorded": len(report.iterates) - 1,
        }
        print(
            f"alpha={alpha}: sweep best {best_proposed:.8f}, adaptive-step reference best "
            f"{polyak.best_value:.8f}, separation {best_proposed - polyak.best_value:.3e}"
        )
    ws.results = summary
    ws.finalize()
    return 0


def _solve_with_reference(problem, solve, cfg, ws: Workspace, tag: str) -> dict:
    reference_report = solve(problem, max_iter=200, residual_tol=1e-12)
    reference = reference_report.final
    began = perf_counter()
    report = solve(
        problem,
        max_iter=cfg.iters,
        residual_tol=0.0,
        reference=reference,
    )
    elapsed = (perf_counter() - began) * 1e3
    report.iterates.to_csv(ws.path(f"{tag}_trace.csv"))
    f_ref = reference_report.iterates.rows[-1].f_value
    _write_csv(
        ws.path(f"{tag}_errors.csv"),
        ["step", "opt_error", "iterate_error"],
        [[r.step, r.f_value - f_ref, r.dist_to_reference] for r in report.iterates],
    )
    return {
        "stop_reason": report.stop_reason,
        "converged": report.converged,
        "reference_stop_reason": reference_report.stop_reason,
        "final_f": report.iterates.rows[-1].f_value,
        "reference_f": f_ref,
        "wall_time_ms": elapsed,
    }


def run_augustin(cfg: ExperimentConfig) -> int:
    ws = Workspace(cfg)
    states = random_density_ensemble(cfg.seed, cfg.n, cfg.d)
    problem = AugustinProblem.create(states, np.full(cfg.n, 1.0 / cfg.n), cfg.alpha)
    tag = f"augustin_alpha{cfg.alpha:g}".replace(".", "p")
    ws.results = _solve_with_reference(
        problem, augustin.solve_petz_augustin, cfg, ws, tag
    )
    ws.finalize()
    return 0


def run_classical(cfg: ExperimentConfig) -> int:
    ws = Workspace(cfg)
    rng = np.random.default_rng(cfg.seed)
    points = rng.dirichlet(np.ones(cfg.d), size=cfg.n)
    problem = ClassicalAugustinProblem.create(
        points, np.full(cfg.n, 1.0 / cfg.n), cfg.alpha
    )
    tag = f"classical_alpha{cfg.alpha:g}".replace(".", "p")
    ws.results = _solve_with_reference(
        problem, augustin.solve_classical_augustin, cfg, ws, tag
    )
    ws.finalize()
    return 0


def run_capacity(cfg: ExperimentConfig) -> int:
    ws = Workspace(cfg)
    states = random_density_ensemble(cfg.seed, cfg.n, cfg.d)
    problem = capacity.CapacityProblem.create(states, cfg.alpha)
    report = capacity.solve_capacity(problem, cfg.outer_steps, cfg.inner_eps)
    report.write_csv(ws.path("capacity_trace.csv"))
    ws.results = {
        "c_hat": report.c_hat,
        "g_final": report.g_final,
        "certificate": report.certificate,
        "eps_budget": report.eps_budget,
        "w_final": report.w_final.tolist(),
    }
    print(f"capacity estimate {report.c_hat:.10f} (rate certificate {report.certificate:.3e})")
    ws.finalize()
    return 0


def _build_market(cfg: ExperimentConfig) -> fisher.FisherMarket:
    rng = np.random.default_rng(cfg.seed)
    valuations = rng.dirichlet(np.ones(cfg.goods), size=cfg.buyers)
    budgets = rng.dirichlet(np.ones(cfg.buyers))
    rho = rng.uniform(cfg.rho_min, cfg.rho_max, size=cfg.buyers)
    rho_hat = np.full(cfg.goods, cfg.rho_hat)
    return fisher.FisherMarket.create(valuations, budgets, rho, rho_hat)


def _build_schedule(cfg: ExperimentConfig, d: int) -> fisher.UpdateSchedule:
    if cfg.schedule == "synchronous":
        return fisher.UpdateSchedule.synchronous(d, cfg.epochs)
    if cfg.schedule == "round-robin":
        return fisher.UpdateSchedule.round_robin(d, cfg.epochs * d)
    return fisher.UpdateSchedule.random_coverage(d, cfg.epochs, cfg.seed)


def run_fisher(cfg: ExperimentConfig) -> int:
    ws = Workspace(cfg)
    market = _build_market(cfg)
    (ws.path("market.json")).write_text(json.dumps(market.to_json(), indent=1))
    p_star = fisher.equilibrium_prices(market)
    schedule = _build_schedule(cfg, market.d_goods)
    (ws.path("schedule.json")).write_text(schedule.dumps())
    p1 = np.full(market.d_goods, 1.0 / market.d_goods)
    states, boundaries = fisher.run_schedule(market, p1, schedule)
    rows = []
    for state in states:
        epoch_index = sum(1 for b in boundaries if b <= state.step)
        rows.append(
            [
                state.step,
                thompson_metric_vec(p_star, state.p),
                float(np.abs(fisher.total_demand(market, state.p) - 1.0).max()),
                epoch_index,
            ]
        )
    _write_csv(
        ws.path("fisher_trace.csv"),
        ["round", "d_T_to_eq", "max_excess_demand", "epoch_index"],
        rows,
    )
    contraction = market.rho_hat_max
    d1 = thompson_metric_vec(p_star, p1)
    ws.results = {
        "epochs_completed": len(boundaries),
        "rounds": len(schedule.rounds),
        "d_T_start": d1,
        "d_T_final": rows[-1][1],
        "per_epoch_bound": contraction,
        "equilibrium_residual": float(
            np.abs(fisher.total_demand(market, p_star) - 1.0).max()
        ),
    }
    print(
        f"{len(schedule.rounds)} rounds, {len(boundaries)} epochs; distance "
        f"{d1:.4f} -> {rows[-1][1]:.3e} (bound factor {contraction}/epoch)"
    )
    ws.finalize()
    return 0


def run_oracle_cache(args) -> int:
    cache = oracles.OracleCache(args.path)
    if args.clear:
        cache.clear()
        print(f"cleared {args.path}")
        return 0
    print(f"{args.path}: {len(cache)} entries")
    for key, value in sorted(cache._data.items()):
        print(f"  {key[:16]}... value={value.get('value')!r} resolution={value.get('resolution')}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _load_config(task: str, args: argparse.Namespace) -> ExperimentConfig:
    payload = {}
    if getattr(args, "config", None):
        payload = json.loads(Path(args.config).read_text())
        payload.pop("task", None)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(payload) - known
    if unknown:
        raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(task=task, **payload)
    for name in known:
        value = getattr(args, name, None)
        if value is not None and name != "task":
            setattr(cfg, name, value)
    return cfg


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--out", help=f"output directory (or set ${OUT_ENV})")
    parser.add_argument("--threads", type=int, help="reserved; only 1 is used")
    parser.add_argument("--residual-tol", dest="residual_tol", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="augustin-lab",
        description="Fixed-point and mirror-descent experiments on divergence means, "
        "capacities, and market equilibria.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augustin", help="fixed-point run on random density matrices")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)

    p = sub.add_parser("classical", help="fixed-point run on random probability vectors")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)

    p = sub.add_parser("capacity", help="entropic mirror descent over input weights")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--outer-steps", dest="outer_steps", type=int)
    p.add_argument("--inner-eps", dest="inner_eps", type=float)

    p = sub.add_parser("fisher", help="asynchronous price updates in a CES market")
    _add_common(p)
    p.add_argument("--buyers", type=int)
    p.add_argument("--goods", type=int)
    p.add_argument("--rho-min", dest="rho_min", type=float)
    p.add_argument("--rho-max", dest="rho_max", type=float)
    p.add_argument("--rho-hat", dest="rho_hat", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--schedule", choices=SCHEDULES)

    p = sub.add_parser("counterexample", help="reproduce the 2x2 non-contraction instance")
    _add_common(p)

    p = sub.add_parser("divergence-demo", help="3x3 instance where small orders fail to converge")
    _add_common(p)
    p.add_argument("--polyak-steps", dest="polyak_steps", type=int)
    p.add_argument("--grid-resolution", dest="grid_resolution", type=int)

    p = sub.add_parser("oracle-cache", help="inspect or clear a brute-force result cache")
    p.add_argument("--path", default="oracle_cache.json")
    p.add_argument("--clear", action="store_true")

    return parser


RUNNERS = {
    "augustin": run_augustin,
    "classical": run_classical,
    "capacity": run_capacity,
    "fisher": run_fisher,
    "counterexample": run_counterexample,
    "divergence_demo": run_divergence_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "oracle-cache":
        return run_oracle_cache(args)
    task = args.command.replace("-", "_")
    try:
        cfg = _load_config(task, args)
    except (InvalidInput, json.JSONDecodeError, OSError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    violations = validate_config(cfg)
    if violations:
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    try:
        return RUNNERS[task](cfg)
    except AugustinLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
