"""Command-line entry point: simulate | build-qubo | solve | evaluate | sweep.

All pipeline parameters live in one INI-style configuration file (see
``default_config_text`` or README for the schema); a few flags override it.
Every command is deterministic under (config, seed).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .array_model import ArrayGeometry, SteeringGrid, build_grid
from .estimator import L1Config, aim_solve, decode_caim, estimate_l1
from .eval_harness import (
    METHOD_LABELS,
    METHODS,
    ExperimentSpec,
    parameter_sweep,
    run_experiment,
    write_parameter_sweep_csv,
    write_report,
)
from .ising_solver import AnnealConfig, anneal, brute_force, write_trace_csv
from .qubo_builder import build_qubo
from .scene_sim import (
    ApConfig,
    Scene,
    load_snapshots,
    save_snapshots,
    synthesize,
)


@dataclass
class RunConfig:
    "Resolved union of all module configurations."

    # [grid]
    num_elements: int = 8
    spacing_over_wavelength: float = 0.5
    num_bins: int = 720
    theta_min_deg: float = -90.0
    theta_max_deg: float = 90.0
    # [scene]
    orientations_deg: tuple[float, ...] = (120.0, 225.0, 200.0, 150.0, 230.0)
    num_paths: tuple[int, ...] = (16,)
    source_bearing_deg: float = 0.0
    snr_db: float = 0.0
    on_grid: bool = True
    power_decay: float = 0.5
    random_los_phase: bool = False
    # [qubo]
    gamma: float = 1.0
    mu: float = 1.0
    # [anneal]
    sweeps: int = 2000
    t_initial: float = 10.0
    t_final: float = 0.05
    schedule: str = "geometric"
    restarts: int = 8
    mode: str = "sequential"
    offset_increment: float = 1.0
    # [l1]
    lam: float = 1.0
    l1_max_iters: int = 2000
    l1_tol: float = 1e-6
    support_ratio: float = 0.01
    # [experiment]
    trials: int = 50
    methods: tuple[str, ...] = ("caim", "aim", "l1")
    sweep_aps: tuple[int, ...] | None = None
    seed: int = 1
    workers: int = 0  # 0 means "all available cores"
    # [param_sweep]
    sweep_gammas: tuple[float, ...] = (0.5, 1.0, 2.0)
    sweep_mus: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0)
    sweep_trials: int = 10

    def build_grid(self) -> SteeringGrid:
        geometry = ArrayGeometry(self.num_elements, self.spacing_over_wavelength)
        return build_grid(geometry, self.num_bins, self.theta_min_deg, self.theta_max_deg)

    def build_scene(self) -> Scene:
        paths = self.num_paths
        if len(paths) == 1:
            paths = paths * len(self.orientations_deg)
        if len(paths) != len(self.orientations_deg):
            raise ValueError("num_paths must be one value or one per orientation")
        aps = tuple(ApConfig(o, n) for o, n in zip(self.orientations_deg, paths))
        return Scene(
            aps=aps,
            source_bearing_deg=self.source_bearing_deg,
            snr_db=self.snr_db,
            seed=self.seed,
            on_grid=self.on_grid,
            power_decay=self.power_decay,
            random_los_phase=self.random_los_phase,
        )

    def build_anneal(self) -> AnnealConfig:
        return AnnealConfig(
            sweeps=self.sweeps,
            t_initial=self.t_initial,
            t_final=self.t_final,
            schedule=self.schedule,
            restarts=self.restarts,
            mode=self.mode,
            offset_increment=self.offset_increment,
            seed=self.seed,
        )

    def build_l1(self) -> L1Config:
        return L1Config(self.lam, self.l1_max_iters, self.l1_tol, self.support_ratio)

    def build_experiment(self) -> ExperimentSpec:
        workers = self.workers if self.workers > 0 else (os.cpu_count() or 1)
        return ExperimentSpec(
            scene=self.build_scene(),
            grid=self.build_grid(),
            trials=self.trials,
            methods=self.methods,
            gamma=self.gamma,
            mu=self.mu,
            anneal=self.build_anneal(),
            l1=self.build_l1(),
            sweep_aps=self.sweep_aps,
            seed=self.seed,
            workers=workers,
        )

    def validate(self) -> None:
        "Construct every sub-config so module invariants are checked up front."
        self.build_experiment()

    def to_text(self) -> str:
        "Resolved configuration in the INI schema."

        def seq(values):
            return ", ".join(str(v) for v in values)

        lines = [
            "[grid]",
            f"num_elements = {self.num_elements}",
            f"spacing_over_wavelength = {self.spacing_over_wavelength}",
            f"num_bins = {self.num_bins}",
            f"theta_min_deg = {self.theta_min_deg}",
            f"theta_max_deg = {self.theta_max_deg}",
            "",
            "[scene]",
            f"orientations_deg = {seq(self.orientations_deg)}",
            f"num_paths = {seq(self.num_paths)}",
            f"source_bearing_deg = {self.source_bearing_deg}",
            f"snr_db = {self.snr_db}",
            f"on_grid = {self.on_grid}",
            f"power_decay = {self.power_decay}",
            f"random_los_phase = {self.random_los_phase}",
            "",
            "[qubo]",
            f"gamma = {self.gamma}",
            f"mu = {self.mu}",
            "",
            "[anneal]",
            f"sweeps = {self.sweeps}",
            f"t_initial = {self.t_initial}",
            f"t_final = {self.t_final}",
            f"schedule = {self.schedule}",
            f"restarts = {self.restarts}",
            f"mode = {self.mode}",
            f"offset_increment = {self.offset_increment}",
            "",
            "[l1]",
            f"lam = {self.lam}",
            f"max_iters = {self.l1_max_iters}",
            f"tol = {self.l1_tol}",
            f"support_ratio = {self.support_ratio}",
            "",
            "[experiment]",
            f"trials = {self.trials}",
            f"methods = {seq(self.methods)}",
            f"sweep_aps = {seq(self.sweep_aps) if self.sweep_aps else ''}",
            f"seed = {self.seed}",
            f"workers = {self.workers}",
            "",
            "[param_sweep]",
            f"gammas = {seq(self.sweep_gammas)}",
            f"mus = {seq(self.sweep_mus)}",
            f"trials = {self.sweep_trials}",
        ]
        return "\n".join(lines) + "\n"


def default_config_text() -> str:
    return RunConfig().to_text()


def _parse_seq(raw: str, cast):
    items = [item.strip() for item in raw.split(",") if item.strip()]
    return tuple(cast(item) for item in items)


def load_config(path: str | Path | None) -> RunConfig:
    "Read the INI file (all sections and keys optional) over the defaults."
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    def grab(section, key, cast, attr=None):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            setattr(cfg, attr or key, cast(raw))

    def boolean(raw):
        mapping = {"true": True, "yes": True, "on": True, "1": True,
                   "false": False, "no": False, "off": False, "0": False}
        try:
            return mapping[raw.strip().lower()]
        except KeyError:
            raise ValueError(f"not a boolean: {raw!r}") from None

    grab("grid", "num_elements", int)
    grab("grid", "spacing_over_wavelength", float)
    grab("grid", "num_bins", int)
    grab("grid", "theta_min_deg", float)
    grab("grid", "theta_max_deg", float)
    grab("scene", "orientations_deg", lambda r: _parse_seq(r, float))
    grab("scene", "num_paths", lambda r: _parse_seq(r, int))
    grab("scene", "source_bearing_deg", float)
    grab("scene", "snr_db", float)
    grab("scene", "on_grid", boolean)
    grab("scene", "power_decay", float)
    grab("scene", "random_los_phase", boolean)
    grab("qubo", "gamma", float)
    grab("qubo", "mu", float)
    grab("anneal", "sweeps", int)
    grab("anneal", "t_initial", float)
    grab("anneal", "t_final", float)
    grab("anneal", "schedule", str)
    grab("anneal", "restarts", int)
    grab("anneal", "mode", str)
    grab("anneal", "offset_increment", float)
    grab("l1", "lam", float)
    grab("l1", "max_iters", int, "l1_max_iters")
    grab("l1", "tol", float, "l1_tol")
    grab("l1", "support_ratio", float)
    grab("experiment", "trials", int)
    grab("experiment", "methods", lambda r: _parse_seq(r, str))
    if parser.has_option("experiment", "sweep_aps"):
        seq = _parse_seq(parser.get("experiment", "sweep_aps"), int)
        cfg.sweep_aps = seq or None
    grab("experiment", "seed", int)
    grab("experiment", "workers", int)
    grab("param_sweep", "gammas", lambda r: _parse_seq(r, float), "sweep_gammas")
    grab("param_sweep", "mus", lambda r: _parse_seq(r, float), "sweep_mus")
    grab("param_sweep", "trials", int, "sweep_trials")
    return cfg


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "method", None):
        cfg.methods = (args.method,)
    return cfg


def _get_snapshots(cfg: RunConfig, args, grid: SteeringGrid):
    if getattr(args, "snapshots", None):
        return load_snapshots(args.snapshots)
    return synthesize(cfg.build_scene(), grid)


def cmd_simulate(cfg: RunConfig, args) -> int:
    grid = cfg.build_grid()
    scene = cfg.build_scene()
    snapshots = synthesize(scene, grid)
    out = Path(args.out)
    paths = save_snapshots(snapshots, out)
    (out / "scene.json").write_text(
        json.dumps(
            {
                "config": cfg.to_text(),
                "num_aps": scene.num_aps,
                "los_bins": [s.los_bin for s in snapshots],
            },
            sort_keys=True,
            indent=1,
        )
    )
    print(f"wrote {len(paths)} snapshots to {out}")
    return 0


def cmd_build_qubo(cfg: RunConfig, args) -> int:
    grid = cfg.build_grid()
    snapshots = _get_snapshots(cfg, args, grid)
    orientations = [s.orientation_deg for s in snapshots]
    problem = build_qubo(snapshots, grid, orientations, cfg.gamma, cfg.mu)
    out = Path(args.out)
    if out.is_dir():
        out = out / "qubo.txt"
    problem.save_text(out)
    print(f"wrote K={problem.num_vars} problem to {out}")
    return 0


def _verify_optimal(problem, result) -> bool:
    best_state, best_energy = brute_force(problem)
    gap = abs(result.best_energy - best_energy)
    ok = gap <= 1e-9 * (1.0 + abs(best_energy))
    status = "optimal" if ok else f"SUBOPTIMAL (gap {gap})"
    print(f"brute-force check K={problem.num_vars}: {status}")
    return ok


def cmd_solve(cfg: RunConfig, args) -> int:
    grid = cfg.build_grid()
    snapshots = _get_snapshots(cfg, args, grid)
    method = args.method or "caim"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    anneal_cfg = cfg.build_anneal()
    verified = True
    if method == "caim":
        orientations = [s.orientation_deg for s in snapshots]
        problem = build_qubo(snapshots, grid, orientations, cfg.gamma, cfg.mu)
        result = anneal(problem, anneal_cfg)
        estimates = decode_caim(result.best_state, problem, snapshots, grid)
        write_trace_csv(result, out / "trace.csv")
        if args.verify_brute_force:
            verified = _verify_optimal(problem, result)
    elif method == "aim":
        solutions = aim_solve(snapshots, grid, cfg.gamma, anneal_cfg)
        estimates = []
        for p, ((problem, result), snap) in enumerate(zip(solutions, snapshots)):
            estimates.extend(decode_caim(result.best_state, problem, [snap], grid))
            write_trace_csv(result, out / f"trace_ap{p}.csv")
            if args.verify_brute_force:
                verified = _verify_optimal(problem, result) and verified
    elif method == "l1":
        if args.verify_brute_force:
            print("--verify-brute-force is not applicable to the l1 baseline",
                  file=sys.stderr)
            return 2
        estimates = estimate_l1(snapshots, grid, cfg.build_l1())
    else:
        print(f"unknown method {method!r}", file=sys.stderr)
        return 2
    payload = {
        "method": method,
        "method_label": METHOD_LABELS[method],
        "estimates": [est.to_dict() for est in estimates],
    }
    (out / "estimates.json").write_text(json.dumps(payload, sort_keys=True, indent=1))
    print(f"wrote estimates for {len(estimates)} APs to {out}")
    return 0 if verified else 1


def cmd_evaluate(cfg: RunConfig, args) -> int:
    spec = cfg.build_experiment()
    report = run_experiment(spec)
    written = write_report(report, args.out)
    for method in spec.methods:
        print(f"{METHOD_LABELS[method]}: avg median {report.avg_median(method):.4f} deg")
    print(f"wrote {len(written)} report files to {args.out}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    spec = cfg.build_experiment()
    rows = parameter_sweep(spec, cfg.sweep_gammas, cfg.sweep_mus, cfg.sweep_trials)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_parameter_sweep_csv(rows, out / "sweep_gamma_mu.csv")
    print(f"wrote {len(rows)} sweep points to {out / 'sweep_gamma_mu.csv'}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopaoa",
        description="Cooperative AoA estimation via QUBO annealing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", default=out_default, required=out_default is None,
                       help="output directory (or file for build-qubo)")
        p.add_argument("--workers", type=int, help="trial parallelism (0 = all cores)")
        p.add_argument("--print-config", action="store_true",
                       help="echo the resolved configuration and exit")

    p = sub.add_parser("simulate", help="synthesize snapshots to JSON")
    common(p)
    p = sub.add_parser("build-qubo", help="export the QUBO text format")
    common(p)
    p.add_argument("--snapshots", help="directory of snapshot_ap*.json to reuse")
    p = sub.add_parser("solve", help="build, anneal and decode one scene")
    common(p)
    p.add_argument("--snapshots", help="directory of snapshot_ap*.json to reuse")
    p.add_argument("--method", choices=METHODS, help="estimator to run")
    p.add_argument("--verify-brute-force", action="store_true",
                   help="assert annealer optimality on small instances")
    p = sub.add_parser("evaluate", help="run the Monte-Carlo experiment")
    common(p)
    p.add_argument("--method", choices=METHODS, help="restrict to one method")
    p = sub.add_parser("sweep", help="gamma/mu parameter sweep")
    common(p)
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "build-qubo": cmd_build_qubo,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        cfg.validate()
    except (ValueError, FileNotFoundError, configparser.Error) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        print(cfg.to_text(), end="")
        return 0
    try:
        return _COMMANDS[args.command](cfg, args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
