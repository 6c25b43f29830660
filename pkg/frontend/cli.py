"""
Command line interface.

Exit codes follow the SAT-solver convention: 10 satisfiable, 20
unsatisfiable, 30 resource budget exhausted, 1 usage or input error.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

from config.presets import apply_preset
from config.settings import HeuristicsConfig, default_log_level, load_settings
from engine.errors import LazyMXError, ParseError, ResourceExhausted, UsageError
from engine.grounder import full_ground
from engine.search import SAT, solve

from .parser import load
from .printer import emit_model, format_definition, format_stats
from .script import load_script

LOG = logging.getLogger(__name__)

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_RESOURCE = 30
EXIT_USAGE = 1

LEVELS = ["ERROR", "WARNING", "INFO", "DEBUG"]


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _on_off(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("on", "true", "yes", "1"):
        return True
    if lowered in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def _engine_flags() -> argparse.ArgumentParser:
    flags = _ArgumentParser(add_help=False)
    g = flags.add_argument_group("engine")
    g.add_argument("--preset", help="named heuristic preset applied before the flags")
    g.add_argument("--mode", choices=["lazy", "eager", "late", "naive-lazy"])
    g.add_argument("--late", dest="mode", action="store_const", const="late", help="alias of --mode late")
    g.add_argument("--exists-batch", type=int)
    g.add_argument("--disjunct-batch", type=int)
    g.add_argument("--polarity-true-prob", type=float)
    g.add_argument("--restart-extension-threshold", type=int)
    g.add_argument("--small-formula-threshold", type=float)
    g.add_argument("--global-plan", type=_on_off, metavar="on|off")
    g.add_argument("--stop-early", type=_on_off, metavar="on|off")
    g.add_argument("--seed", type=int)
    g.add_argument("--max-ground-atoms", type=int)
    g.add_argument("--time-limit", type=float, metavar="S")
    g.add_argument("--debug-checks", action="store_const", const=True)
    g.add_argument("--approximate", type=int, metavar="N",
                   help="install justifications with at most N violations")
    g.add_argument("--justification-formulas", action="store_const", const=True)
    g.add_argument("-v", "--verbose", action="count", default=0)
    return flags


FLAG_FIELDS = ("mode", "exists_batch", "disjunct_batch", "polarity_true_prob", "restart_extension_threshold",
               "small_formula_threshold", "global_plan", "stop_early", "seed", "max_ground_atoms", "time_limit",
               "debug_checks", "justification_formulas")


def build_parser() -> argparse.ArgumentParser:
    flags = _engine_flags()
    parser = _ArgumentParser(prog="lazymx", description="Lazy model expansion for FO(ID) theories")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[flags], help="find a model")
    p.add_argument("problem")
    p.add_argument("structure", nargs="?")
    p.add_argument("--script", help="decision/instantiation trace")
    p.add_argument("--check", action="store_true", help="verify the completed model")
    p.add_argument("--output-symbols", help="comma separated predicates to print")
    p.add_argument("--stats", help="write the statistics document to FILE (.json for JSON)")
    p.add_argument("--dump-ground", action="store_true", help="print the final D_g")

    g = sub.add_parser("ground", parents=[flags], help="eager grounding dump and size")
    g.add_argument("problem")
    g.add_argument("structure", nargs="?")

    o = sub.add_parser("oracle", parents=[flags], help="brute-force model count (small instances)")
    o.add_argument("problem")
    o.add_argument("structure", nargs="?")

    b = sub.add_parser("bench", parents=[flags], help="compare modes on generated instances")
    b.add_argument("--family", required=True)
    b.add_argument("--sizes", default="10", help="comma separated domain sizes")
    b.add_argument("--modes", default="lazy,eager", help="comma separated modes")
    b.add_argument("--arity", type=int)
    b.add_argument("--oracle", action="store_true", help="cross-check verdicts by enumeration")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", help="CSV report file (stdout when omitted)")
    b.add_argument("--stats-dir", help="directory for per-run stats documents")
    return parser


def configure_logging(verbosity: int) -> None:
    base = default_log_level()
    idx = LEVELS.index(base) if base in LEVELS else 1
    level = LEVELS[min(idx + verbosity, len(LEVELS) - 1)]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def build_config(args: argparse.Namespace, script_settings: Sequence = ()) -> HeuristicsConfig:
    """Settings, then preset, then script ``set`` entries, then explicit flags."""
    config = load_settings()
    if getattr(args, "preset", None):
        try:
            config = apply_preset(args.preset, config)
        except KeyError as e:
            raise UsageError(str(e.args[0])) from None
    for key, value in script_settings:
        config = config.set_option(key, value)
    changes = {name: getattr(args, name) for name in FLAG_FIELDS if getattr(args, name, None) is not None}
    if getattr(args, "approximate", None) is not None:
        changes.update(approximate=True, approx_violations_budget=args.approximate)
    try:
        return config.updated(**changes) if changes else config
    except ValueError as e:
        raise UsageError(f"invalid option: {e}") from None


def _write_stats(path: str, stats: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        if path.endswith(".json"):
            json.dump(stats, f, indent=4)
        else:
            f.write(format_stats(stats))


def cmd_solve(args: argparse.Namespace) -> int:
    problem, structure = load(args.problem, args.structure)
    theory = problem.canonical()
    script = load_script(args.script, theory.vocabulary)
    config = build_config(args, script.settings)
    outputs = [s.strip() for s in args.output_symbols.split(",") if s.strip()] if args.output_symbols else None
    if outputs:
        unknown = [s for s in outputs if s not in theory.vocabulary.predicates]
        if unknown:
            raise UsageError(f"unknown output symbols: {', '.join(unknown)}")
    try:
        result = solve(theory, structure, config, script.entries, outputs, check=args.check)
    except ResourceExhausted as e:
        print("UNKNOWN")
        if args.stats:
            _write_stats(args.stats, e.stats)
        LOG.error("resource budget exhausted: %s", e.reason)
        return EXIT_RESOURCE
    shown = outputs if outputs is not None else sorted(theory.original_predicates)
    sys.stdout.write(emit_model(result.model, shown, theory.vocabulary, result.status))
    if args.check and result.checked is not None:
        print(f"% model check: {'passed' if result.checked else 'FAILED'}")
    if args.dump_ground:
        print("% D_g")
        text = format_definition(result.state.d_ground, result.state.vocabulary)
        if text:
            print(text)
    stats = dict(result.stats)
    if result.checked is not None:
        stats["checked"] = result.checked
    if args.stats:
        _write_stats(args.stats, stats)
    return EXIT_SAT if result.status == SAT else EXIT_UNSAT


def cmd_ground(args: argparse.Namespace) -> int:
    from bench.harness import grounding_estimate

    problem, structure = load(args.problem, args.structure)
    theory = problem.canonical()
    config = build_config(args)
    vocabulary = theory.vocabulary.copy()
    d_ground, stats = full_ground(theory.definition, vocabulary, structure, config.max_ground_atoms)
    text = format_definition(d_ground, vocabulary)
    if text:
        print(text)
    print(f"% ground rules: {len(d_ground)}")
    print(f"% ground atoms: {stats['ground_atoms']}")
    print(f"% estimate: {grounding_estimate(theory):g}")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    from bench.oracle import oracle_solve

    problem, structure = load(args.problem, args.structure)
    result = oracle_solve(problem.canonical(), structure)
    print(result.status)
    if result.status == SAT:
        print(f"models: {result.count}")
    return EXIT_SAT if result.status == SAT else EXIT_UNSAT


def cmd_bench(args: argparse.Namespace) -> int:
    from bench.generators import family_name
    from bench.harness import MODES, sweep, write_csv, write_stats

    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --sizes {args.sizes!r}") from None
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise UsageError(f"unknown mode {mode!r}")
    config = build_config(args)
    reports = sweep(family_name(args.family), sizes, modes, seed=config.seed, arity=args.arity,
                    config=config, oracle=args.oracle, jobs=args.jobs)
    write_csv(reports, args.out if args.out else sys.stdout)
    if args.stats_dir:
        write_stats(reports, args.stats_dir)
    return 0


COMMANDS = {"solve": cmd_solve, "ground": cmd_ground, "oracle": cmd_oracle, "bench": cmd_bench}


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        return COMMANDS[args.command](args)
    except ResourceExhausted as e:
        print(f"error: {e.reason}", file=sys.stderr)
        return EXIT_RESOURCE
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except LazyMXError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
