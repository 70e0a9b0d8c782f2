"""
Command handlers of the simulator CLI.

Each handler takes the parsed arguments and the loaded Config, does its work
and returns the process exit code.
"""

import argparse
import logging
from pathlib import Path
from typing import Optional, TextIO

from config.settings import Config
from harness.report import emit_results
from harness.runner import ScenarioOutcome, run_scenario
from harness.scenarios import build_spec, load_config_file
from services.formation import ALGORITHMS
from utils.error_notifier import notify_error
from utils.errors import InvalidArgumentError, SimulatorError
from utils.range_parser import parse_int_list, parse_int_range, parse_name_list

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="D2D-aided MBSFN area formation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario and write raw.csv, summary.csv and SVG charts")
    run.add_argument("--scenario", type=int, choices=(1, 2, 3), help="1: users/cell, 2: cells, 3: bandwidth")
    run.add_argument("--tdd", help="TDD configuration indices, e.g. 0,5 (default: 0..6)")
    run.add_argument("--algo", help=f"Algorithms, comma separated (default: {','.join(ALGORITHMS)})")
    run.add_argument("--reps", type=int, help="Replications per grid point (default: MAF_REPLICATIONS)")
    run.add_argument("--seed", type=int, help="Base seed (default: MAF_BASE_SEED)")
    run.add_argument("--out", help="Output directory (default: MAF_OUTPUT_DIR)")
    run.add_argument("--users-per-cell", help="Users per cell, A..B:step or a single value")
    run.add_argument("--cells", help="Number of cells, A..B:step or a single value")
    run.add_argument("--bw-mhz", help="Bandwidths in MHz, comma separated")
    run.add_argument("--config", help="JSON scenario file")
    run.add_argument("--dump-configs", action="store_true", default=None,
                     help="Also write every returned configuration to configurations.jsonl")
    return parser


def _sweep_overrides(args: argparse.Namespace, scenario: int) -> dict:
    """
    Map the deployment flags onto ScenarioSpec fields. The flag of the swept
    parameter sets the sweep; the other flags fix a single reference value.
    """
    flags = {
        1: ("users_per_cell", args.users_per_cell, parse_int_range),
        2: ("n_cells", args.cells, parse_int_range),
        3: ("bandwidth_mhz", args.bw_mhz, parse_int_list),
    }
    overrides = {}
    for index, (field_name, text, parse) in flags.items():
        if text is None:
            continue
        values = parse(text)
        if index == scenario:
            overrides["sweep_values"] = tuple(values)
        elif len(values) == 1:
            overrides[field_name] = values[0]
        else:
            raise InvalidArgumentError(f"Scenario {scenario} does not sweep {field_name}; give a single value")
    return overrides


def format_summary(outcome: ScenarioOutcome) -> str:
    """Short text table of mean ADR and throughput per grid point."""
    summary = outcome.aggregate.summary()
    if summary.empty:
        return "No results."
    lines = [f"{outcome.spec.sweep_label:>8} {'tdd':>3} {'algo':>8} {'ADR Mbit/s':>12} {'thr Mbit/s':>11} "
             f"{'D2D RB %':>9}"]
    for row in summary.itertuples(index=False):
        lines.append(
            f"{row.sweep_value:>8} {row.tdd:>3} {row.algo:>8} {row.adr_bps_mean / 1e6:>12.2f} "
            f"{row.avg_thr_bps_mean / 1e6:>11.3f} {row.used_d2d_rb_pct_mean:>9.2f}"
        )
    return "\n".join(lines)


def run_command(args: argparse.Namespace, config: Config, stream: Optional[TextIO] = None) -> int:
    """Handle `run`."""
    try:
        file_values = load_config_file(Path(args.config)) if args.config else {}
        scenario = args.scenario if args.scenario is not None else file_values.get("scenario")
        if scenario is None:
            raise InvalidArgumentError("--scenario is required (or a 'scenario' key in --config)")

        defaults = {
            "replications": config.REPLICATIONS,
            "base_seed": config.BASE_SEED,
            "content_bytes": config.CONTENT_BYTES,
        }
        file_values = {**defaults, **file_values}
        spec = build_spec(
            file_values,
            scenario=scenario,
            tdd=tuple(parse_int_list(args.tdd)) if args.tdd else None,
            algorithms=tuple(parse_name_list(args.algo, ALGORITHMS)) if args.algo else None,
            replications=args.reps,
            base_seed=args.seed,
            dump_configurations=args.dump_configs,
            **_sweep_overrides(args, scenario),
        )
    except InvalidArgumentError as e:
        notify_error("arguments", "run", "EINVAL", str(e), stream)
        return EXIT_USAGE

    out_dir = Path(args.out or config.OUTPUT_DIR)
    request = f"scenario {spec.scenario} -> {out_dir}"
    try:
        outcome = run_scenario(spec, workers=config.WORKERS)
        emit_results(outcome.aggregate, outcome.raw, out_dir, outcome.configurations, outcome.outside)
    except SimulatorError as e:
        notify_error("run", request, type(e).__name__, str(e), stream)
        return EXIT_FAILURE

    print(format_summary(outcome))
    logger.info(f"Results for {request} written")
    return EXIT_OK
