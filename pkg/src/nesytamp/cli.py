"""Command-line entry point: ``nesytamp {plan,run,sweep,calibrate}``.

Exit codes: 0 on success, 1 on a usage or input error, 2 when the
experiment itself fails (no plan, episode failure, calibration out of band).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .assets import load_bolt_domain, load_bolt_problem
from .belief import BeliefState
from .config import ConfigError, load_config
from .executor import run_baseline_episode, run_episode
from .experiments import (
    ExperimentConfig,
    Method,
    Mode,
    calibrate,
    emit_csv,
    emit_plot,
    format_csv,
    generate_scene,
    run_sweep,
)
from .pddl import PDDLError, parse_domain, parse_problem
from .planner import NoPlanFound, plan

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; 2 is reserved for experiment failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _sigma_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(_positive_float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty sigma list")
    return values


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _pos_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nesytamp", description="Neurosymbolic bolt-removal planning and experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def task_args(p):
        p.add_argument("--domain", type=Path, help="PDDL domain file (default: shipped bolt domain)")
        p.add_argument("--problem", type=Path, help="PDDL problem file (default: shipped bolt task)")
        p.add_argument("--lenient", action="store_true",
                       help="accept call-style shorthand and unbalanced parentheses")
        p.add_argument("--config", type=Path, help="INI configuration file")

    p = sub.add_parser("plan", help="print the most likely plan for a domain/problem")
    task_args(p)

    p = sub.add_parser("run", help="run a single seeded episode")
    task_args(p)
    p.add_argument("--sigma", type=_positive_float, default=1.0, help="pose noise stddev in mm")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p.add_argument("--method", choices=[m.value for m in Method], default=None)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--trace", type=Path, help="write the episode trace to this file")

    p = sub.add_parser("sweep", help="success rate against pose noise")
    p.add_argument("--config", type=Path)
    p.add_argument("--method", choices=[m.value for m in Method], default=None)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p.add_argument("--episodes", type=_pos_int, default=None, help="episodes per sigma")
    p.add_argument("--sigmas", type=_sigma_list, default=None, help="comma-separated sigma list")
    p.add_argument("--seed", type=_nonneg_int, default=None, help="master seed")
    p.add_argument("--jobs", type=_pos_int, default=1, help="worker processes")
    p.add_argument("--out", type=Path, help="CSV output (default: stdout)")
    p.add_argument("--plot", type=Path,
                   help="SVG of success rate for both methods (runs the other method too)")
    p.add_argument("--steps-plot", type=Path, help="SVG of mean steps for both methods")

    p = sub.add_parser("calibrate", help="grounder accuracy on labelled scenes")
    p.add_argument("--config", type=Path)
    p.add_argument("--samples", type=_pos_int, default=10_000)
    p.add_argument("--seed", type=_nonneg_int, default=None)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {"mode": "mode", "method": "method", "episodes": "episodes_per_sigma",
                 "sigmas": "sigma_list"}
    if args.command == "sweep":
        overrides["seed"] = "master_seed"   # for `run` the seed is the episode seed
    changes = {key: getattr(args, attr) for attr, key in overrides.items()
               if getattr(args, attr, None) is not None}
    return replace(cfg, **changes) if changes else cfg


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _task(args):
    domain = (parse_domain(_read(args.domain), lenient=args.lenient)
              if args.domain else load_bolt_domain())
    problem = (parse_problem(_read(args.problem), domain, lenient=args.lenient)
               if args.problem else load_bolt_problem(domain))
    return domain, problem


def cmd_plan(args, out) -> int:
    cfg = _config(args)
    domain, problem = _task(args)
    try:
        found = plan(domain, BeliefState.from_literals(problem.init), problem.goal, cfg.planner)
    except NoPlanFound as exc:
        print(f"no plan: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for name in found.names:
        print(name, file=out)
    return EXIT_OK


def cmd_run(args, out) -> int:
    cfg = _config(args)
    domain, problem = _task(args)
    scene_seq, run_seq = np.random.SeedSequence(args.seed).spawn(2)
    world = generate_scene(args.sigma, cfg.mode, np.random.default_rng(scene_seq), cfg.world, cfg.scene)
    rng = np.random.default_rng(run_seq)
    if cfg.method is Method.BASELINE:
        result = run_baseline_episode(world, rng)
    else:
        result = run_episode(domain, problem, world, cfg.configs, rng)
    print(result.to_record(), file=out)
    if args.trace:
        with args.trace.open("w", encoding="utf-8") as fh:
            result.trace.write(fh)
    return EXIT_OK if result.success else EXIT_FAILURE


def cmd_sweep(args, out) -> int:
    cfg = _config(args)
    result = run_sweep(cfg, jobs=args.jobs)
    if args.out:
        emit_csv(result, args.out)
    else:
        out.write(format_csv(result))
    if args.plot or args.steps_plot:
        other = Method.BASELINE if cfg.method is Method.NEUROSYMBOLIC else Method.NEUROSYMBOLIC
        counterpart = run_sweep(replace(cfg, method=other), jobs=args.jobs)
        pair = (result, counterpart) if cfg.method is Method.NEUROSYMBOLIC else (counterpart, result)
        if args.plot:
            emit_plot(*pair, args.plot, metric="sr")
        if args.steps_plot:
            emit_plot(*pair, args.steps_plot, metric="steps")
    return EXIT_OK


def cmd_calibrate(args, out) -> int:
    cfg = _config(args)
    report = calibrate(cfg, samples=args.samples, seed=args.seed)
    for name, acc, band, ok in (
        ("target_aim", report.aim_accuracy, report.aim_target, report.aim_ok),
        ("target_clear", report.clear_accuracy, report.clear_target, report.clear_ok),
    ):
        print(f"{name} accuracy={acc:.4f} target=[{band[0]:.2f}, {band[1]:.2f}] "
              f"{'ok' if ok else 'OUT_OF_BAND'}", file=out)
    print(f"samples={report.samples}", file=out)
    return EXIT_OK if report.aim_ok and report.clear_ok else EXIT_FAILURE


_COMMANDS = {"plan": cmd_plan, "run": cmd_run, "sweep": cmd_sweep, "calibrate": cmd_calibrate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, out)
    except (UsageError, ConfigError, PDDLError) as exc:
        print(f"nesytamp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nesytamp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
