import argparse
import json
import math
import os
import sys
from dataclasses import replace
from typing import List, Optional

from loguru import logger

from ooscam.astro.epoch import Epoch
from ooscam.astro.kepler import SolverFailure
from ooscam.config.config import OUTPUT_DIR, THREADS
from ooscam.config.run_config import CASE_STUDY, DEFAULT_DOCK_GAP_DAYS, RunConfig
from ooscam.environment.rewards import RewardBreakdown
from ooscam.environment.simulator import TRACE_COLUMNS, SimTrace, docking_time_in_periods, run_episode
from ooscam.environment.types import ActionTable, GridConfig, InvalidActionTable, RewardThresholds, Scenario
from ooscam.scenarios.generator import (ConjunctionSpec, case_study_scenario, make_collision_scenario,
                                        random_collision_scenario)
from ooscam.storage.files import (SCHEMA_VERSION, InvalidScenarioFile, build_id, load_action_table,
                                  load_scenario, read_csv, save_action_table, save_scenario, write_csv,
                                  write_json)
from ooscam.training.cross_entropy import LOG_COLUMNS, CEConfig, TrainingAborted, train
from ooscam.training.initializers import init_lambert, init_random

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3

# RewardThresholds fields settable from the command line.
THRESHOLD_OPTIONS = {
    "p_t": "collision probability threshold",
    "fuel": "fuel usage threshold [units]",
    "dev_a": "semi-major axis deviation threshold [m]",
    "dev_e": "eccentricity deviation threshold",
    "dev_i": "inclination deviation threshold [rad]",
    "dev_raan": "RAAN deviation threshold [rad]",
    "dev_argp": "argument of periapsis deviation threshold [rad]",
    "dock_pos": "docking distance threshold [m]",
    "dock_vel": "docking speed threshold [m/s]",
}
# train option dest -> CEConfig field
CE_OPTIONS = {
    "iterations": "iterations",
    "sessions": "sessions",
    "patience": "patience",
    "percentile": "initial_percentile",
    "sigma_dv": "sigma_dv",
    "sigma_t": "sigma_t",
    "learning_rate": "learning_rate",
}


def resolve_scenario(name_or_path: str) -> Scenario:
    if name_or_path == CASE_STUDY:
        return case_study_scenario()
    return load_scenario(name_or_path)


def episode_summary(scenario: Scenario, table: ActionTable, trace: SimTrace, breakdown: RewardBreakdown,
                    config: dict) -> dict:
    metrics = trace.metrics
    t_dock = None if metrics is None else metrics.t_dock
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "summary",
        "build": build_id(),
        "config": config,
        "scenario": scenario.name,
        "failed": trace.failed,
        "failure_reason": trace.failure_reason,
        "final_pc": None if metrics is None else metrics.pc,
        "n_conjunctions": None if metrics is None else metrics.n_conjunctions,
        "fuel_used_units": None if metrics is None else metrics.fuel_used,
        "fuel_remaining_units": None if metrics is None else metrics.fuel_remaining,
        "docked": None if metrics is None else metrics.docked,
        "t_dock_mjd2000": None if t_dock is None else t_dock.mjd2000,
        "t_dock_periods": docking_time_in_periods(scenario, table, t_dock),
        "tca_mjd2000": None if trace.tca is None else trace.tca.mjd2000,
        "total_dv_mps": table.total_dv,
        "docking_dv_mps": table.docking_dv(),
        "cam_dv_mps": table.cam_dv(),
        "reward": breakdown.as_dict(),
    }


def log_summary(summary: dict) -> None:
    if summary["failed"]:
        logger.warning(f"Episode failed: {summary['failure_reason']}")
        return
    periods = summary["t_dock_periods"]
    dock = f"docked after {periods:.3f} orbital periods" if periods is not None else "never docked"
    logger.info(f"Final Pc {summary['final_pc']:.3e} over {summary['n_conjunctions']} conjunction(s), "
                f"fuel used {summary['fuel_used_units']:.4f} units, {dock}, "
                f"reward {summary['reward']['total']:.4f} (|R| {abs(summary['reward']['total']):.4f})")


def write_trace(path: str, trace: SimTrace, config: dict) -> None:
    write_csv(path, TRACE_COLUMNS, trace.rows(), {"config": config})


def initial_table(scenario: Scenario, cfg: RunConfig) -> ActionTable:
    if cfg.init == "random":
        return init_random(scenario, cfg.seed, cfg.dv_max)
    t1 = scenario.start.shifted(cfg.t1_offset)
    t2 = Epoch(t1.mjd2000 + cfg.dock_gap)
    return init_lambert(scenario, t1, t2, cfg.seed, cfg.dv_max)


def cmd_train(cfg: RunConfig, out_dir: Optional[str] = None) -> int:
    scenario = resolve_scenario(cfg.scenario)
    out_dir = out_dir or os.path.join(cfg.output_dir, f"{scenario.name}-{cfg.init}-seed{cfg.seed}")
    config = cfg.as_dict()
    init = initial_table(scenario, cfg)
    best, log = train(scenario, cfg.ce, init, cfg.thresholds, cfg.grid, cfg.weights, workers=cfg.workers)
    trace, breakdown = run_episode(scenario, best, cfg.thresholds, cfg.grid, cfg.weights)
    summary = episode_summary(scenario, best, trace, breakdown, config)
    summary["iterations_run"] = len(log.records)
    summary["best_training_reward"] = log.best_reward

    # Everything is computed before the first file is written.
    save_scenario(os.path.join(out_dir, "scenario.json"), scenario, config)
    write_csv(os.path.join(out_dir, "training_log.csv"), LOG_COLUMNS, log.rows(),
              {"config": config, "best_reward": repr(log.best_reward)})
    save_action_table(os.path.join(out_dir, "best_table.json"), best, config, log.best_reward)
    save_action_table(os.path.join(out_dir, "init_table.json"), init, config)
    write_trace(os.path.join(out_dir, "trace.csv"), trace, config)
    write_json(os.path.join(out_dir, "summary.json"), summary)
    log_summary(summary)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, table_path: str, out_dir: str) -> int:
    scenario = resolve_scenario(cfg.scenario)
    table = load_action_table(table_path)
    config = cfg.as_dict()
    trace, breakdown = run_episode(scenario, table, cfg.thresholds, cfg.grid, cfg.weights)
    summary = episode_summary(scenario, table, trace, breakdown, config)

    write_trace(os.path.join(out_dir, "trace.csv"), trace, config)
    write_json(os.path.join(out_dir, "summary.json"), summary)
    log_summary(summary)
    return EXIT_OK


def cmd_gen_scenario(args: argparse.Namespace) -> int:
    config = {"case_study": args.case_study, "seed": args.seed, "dt_tca": args.dt_tca, "angle_deg": args.angle,
              "vel_ratio": args.vel_ratio, "phase_deg": args.phase, "start": args.start, "name": args.name}
    if args.case_study:
        scenario = case_study_scenario()
    elif args.dt_tca is not None:
        base = case_study_scenario()
        start = Epoch.from_iso(args.start) if args.start else base.start
        spec = ConjunctionSpec(args.dt_tca, math.radians(args.angle), args.vel_ratio, math.radians(args.phase))
        scenario = make_collision_scenario(base.target, spec, start, name=args.name or "generated")
    else:
        scenario = random_collision_scenario(args.seed)
    save_scenario(args.out, scenario, config)
    logger.info(f"Scenario '{scenario.name}' written to {args.out}")
    return EXIT_OK


def cmd_report(run_dirs: List[str], out_path: str) -> int:
    rows, best, configs = [], {}, {}
    for run_dir in run_dirs:
        run = os.path.basename(os.path.normpath(run_dir))
        meta, records = read_csv(os.path.join(run_dir, "training_log.csv"))
        best[run] = float(meta["best_reward"]) if "best_reward" in meta else None
        configs[run] = json.loads(meta["config"]) if "config" in meta else None
        rows.extend([run] + [record[column] for column in LOG_COLUMNS] for record in records)
    write_csv(out_path, ("run",) + LOG_COLUMNS, rows, {"config": configs, "best_rewards": best})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ooscam", description="Docking and collision-avoidance maneuver training")
    parser.add_argument("--log-level", help="overrides LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-scenario", help="write a scenario file")
    gen.add_argument("--out", required=True)
    gen.add_argument("--case-study", action="store_true")
    gen.add_argument("--seed", type=int, default=0, help="seed of a random conjunction geometry")
    gen.add_argument("--dt-tca", type=float, help="seconds from start to collision")
    gen.add_argument("--angle", type=float, default=180.0, help="approach angle [deg]")
    gen.add_argument("--vel-ratio", type=float, default=1.0)
    gen.add_argument("--phase", type=float, default=12.0, help="servicer phase offset [deg]")
    gen.add_argument("--start", help="ISO start epoch (UTC)")
    gen.add_argument("--name")

    def add_run_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", default=CASE_STUDY, help=f"scenario file or '{CASE_STUDY}'")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--fine-step", type=float)
        p.add_argument("--coarse-step", type=float)
        p.add_argument("--fine-window", type=float)
        for name, text in THRESHOLD_OPTIONS.items():
            p.add_argument(f"--{name.replace('_', '-')}", type=float, help=text)
        p.add_argument("--threads", type=int, default=THREADS)

    tr = sub.add_parser("train", help="train an action table with the cross-entropy method")
    add_run_options(tr)
    tr.add_argument("--init", choices=("random", "lambert"), default="lambert")
    tr.add_argument("--iterations", type=int)
    tr.add_argument("--sessions", type=int)
    tr.add_argument("--patience", type=int)
    tr.add_argument("--percentile", type=float, help="initial elite percentile")
    tr.add_argument("--sigma-dv", type=float, help="initial delta-v sigma [m/s]")
    tr.add_argument("--sigma-t", type=float, help="initial burn time sigma [day]")
    tr.add_argument("--learning-rate", type=float)
    tr.add_argument("--dock-gap", type=float, default=DEFAULT_DOCK_GAP_DAYS, help="Lambert transfer [day]")
    tr.add_argument("--t1-offset", type=float, default=0.0, help="first burn after start [s]")
    tr.add_argument("--output-dir", default=OUTPUT_DIR)
    tr.add_argument("--out", help="run directory (default: <output-dir>/<scenario>-<init>-seed<seed>)")

    sim = sub.add_parser("simulate", help="simulate one action table")
    add_run_options(sim)
    sim.add_argument("--table", required=True)
    sim.add_argument("--out", required=True)

    rep = sub.add_parser("report", help="merge training logs into one CSV")
    rep.add_argument("runs", nargs="+")
    rep.add_argument("--out", required=True)
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    init = getattr(args, "init", "lambert")
    ce_overrides = {field: getattr(args, dest) for dest, field in CE_OPTIONS.items()
                    if getattr(args, dest, None) is not None}
    grid_overrides = {k: v for k, v in (("fine_step", args.fine_step), ("coarse_step", args.coarse_step),
                                        ("fine_window", args.fine_window)) if v is not None}
    thresholds = RewardThresholds(**{name: getattr(args, name) for name in THRESHOLD_OPTIONS
                                     if getattr(args, name) is not None})
    return RunConfig(
        scenario=args.scenario,
        init=init,
        seed=args.seed,
        output_dir=getattr(args, "output_dir", OUTPUT_DIR),
        ce=CEConfig.for_init(init, seed=args.seed, **ce_overrides),
        thresholds=thresholds,
        grid=replace(GridConfig(), **grid_overrides),
        t1_offset=getattr(args, "t1_offset", 0.0),
        dock_gap=getattr(args, "dock_gap", DEFAULT_DOCK_GAP_DAYS),
        workers=max(1, args.threads),
    )


def main(argv: Optional[List[str]] = None) -> int:
    from ooscam.logging_config import setup_logging

    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        if args.command == "gen-scenario":
            return cmd_gen_scenario(args)
        if args.command == "report":
            return cmd_report(args.runs, args.out)
        cfg = run_config_from_args(args)
        if args.command == "train":
            return cmd_train(cfg, args.out)
        return cmd_simulate(cfg, args.table, args.out)
    except (SolverFailure, TrainingAborted) as e:
        logger.critical(f"Numerical failure, no outputs written: {type(e).__name__}: {e}")
        return EXIT_SOLVER_FAILURE
    except (InvalidScenarioFile, InvalidActionTable, ValueError, KeyError) as e:
        logger.error(f"Invalid input or configuration: {type(e).__name__}: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == '__main__':
    sys.exit(main())
