"""Command line entry point: run, converge, verify and reproduce."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import (
    BoundViolation,
    ConfigError,
    CutDGError,
    InadmissibleState,
    MeanNotAdmissible,
    MeanOutOfBounds,
    ZeroDensity,
)
from .harness import (
    FIGURE_ALIASES,
    FIGURES,
    SWEEP_LEVELS,
    RunConfig,
    convergence_sweep,
    figure_configs,
    format_table,
    output_dir,
    run,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_SOLVER = 4

INVARIANT_ERRORS = (BoundViolation, MeanOutOfBounds, MeanNotAdmissible, InadmissibleState, ZeroDensity)

log = logging.getLogger("cutdg")


def _levels(text: str) -> list[int]:
    try:
        levels = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None
    if any(n < 4 for n in levels):
        raise argparse.ArgumentTypeError("levels must be at least 4")
    return levels


def _print_summary(rep):
    s = rep.summary()
    s.pop("wall_time", None)
    print(json.dumps(s, sort_keys=True))


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    rep = run(cfg)
    _print_summary(rep)
    for kind, path in rep.files.items():
        log.info("%s: %s", kind, path)
    return EXIT_OK


def _sweep(cfg: RunConfig, levels, jobs: int) -> str:
    rows = convergence_sweep(cfg, levels, write=True, jobs=jobs)
    table = format_table(rows)
    path = output_dir(cfg) / f"{cfg.prefix}_convergence.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table + "\n")
    return table


def cmd_converge(args) -> int:
    cfg = RunConfig.load(args.config)
    print(_sweep(cfg, args.levels, args.jobs))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import SUITES, verify

    if args.suite != "all" and args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; known: all, {', '.join(SUITES)}")
    results = verify(args.suite, seed=args.seed, quick=args.quick)
    if args.json:
        print(json.dumps([r.as_dict() for r in results], indent=2))
    else:
        for r in results:
            print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def cmd_reproduce(args) -> int:
    fig = FIGURE_ALIASES.get(args.figure, args.figure)
    cfgs = figure_configs(fig)
    if args.output:
        cfgs = [c.replace(output_dir=args.output) for c in cfgs]
    if fig in SWEEP_LEVELS:
        levels = args.levels or list(SWEEP_LEVELS[fig])
        for cfg in cfgs:
            print(f"# {cfg.prefix}")
            print(_sweep(cfg, levels, args.jobs))
        return EXIT_OK
    for cfg in cfgs:
        rep = run(cfg)
        print(f"# {cfg.prefix}")
        _print_summary(rep)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cutdg", description="Bound-preserving cut DG solvers in 1D.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration file")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="convergence sweep over mesh levels")
    p.add_argument("config")
    p.add_argument("--levels", type=_levels, required=True, help="comma separated N values")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("suite", nargs="?", default="all")
    p.add_argument("--quick", action="store_true", help="fewer fuzz cases")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="machine readable output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce", help="canned figure configurations")
    p.add_argument("figure", help="one of: " + ", ".join(FIGURES + tuple(FIGURE_ALIASES)))
    p.add_argument("--levels", type=_levels, default=None, help="override sweep levels (accuracy figures)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", default=None, help="output directory")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except INVARIANT_ERRORS as exc:
        print(f"invariant violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except CutDGError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
