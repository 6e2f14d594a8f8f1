"""
src/sim_launcher.py

Batch Front-End for dmqam-sim

COMMANDS:
  run <config> --out DIR [--seed N] [--parallel] [--trace-solver]
      Runs every scenario of the YAML file and writes
        metrics.csv         one row per grid point and transmitter
        <group>.svg         metric against the sweep axis, one per scenario/Nt sweep
        manifest.yaml       resolved configuration, seed, version, timing
        solver_trace.tsv    per-iteration solver trace (--trace-solver only)
  oracle-check <config>
      Interior point vs active-set oracle, default-tolerance deviation,
      region minimum distance and derivative checks. Exit 0 iff all pass.
  regions dump --m M --gamma G [--d0 D] [--radius R] [--out FILE]
      Region polygons as CSV (symbol, label, vertex, re, im).
  scatter --m M --snr-db S --nt NT --nr NR [...] --out FILE
      Induced received points H w of the DM design over the scaled lattice.

Exit status is 0 on success and 1 when any scenario or check failed.
"""

import argparse
import csv
import logging
import sys
import time
from collections import OrderedDict
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO

import numpy as np
import yaml

import acceptance
from config import ConfigError, ConfigLoader, LoggingConfig, RunConfig, ScenarioConfig
from constants import (
    CSV_HEADER, CSV_SIGNIFICANT_DIGITS, DEFAULT_SEED, TOOL_NAME, TOOL_VERSION,
    Benchmark, DesignKind, RegionMode, snr_to_gamma
)
from constellation import constellation
from link_simulator import induced_points, run_scenario
from metrics_collector import MetricsRecord
from plotting import emit_scatter, emit_scenario_plot
from regions import frame_regions, region_polygon

LOG_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'

logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
MANIFEST_FILE = "manifest.yaml"
TRACE_FILE = "solver_trace.tsv"


def setup_logging(settings: LoggingConfig, verbose: bool = False) -> None:
    """Apply the configured level (DEBUG with --verbose) and optional log file."""
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else getattr(logging, settings.level.upper()))
    if settings.file:
        Path(settings.file).parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(settings.file, encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)

# ============================================================================
# OUTPUT FILES
# ============================================================================

def format_number(value) -> str:
    """Fixed 12-significant-digit decimal text; integers and strings pass through."""
    if isinstance(value, (str, bool)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not np.isfinite(value):
        return "nan" if np.isnan(value) else ("inf" if value > 0 else "-inf")
    # Exponent after rounding, so 9.99999999999996 is placed as 10.0000000000
    exponent = int(f"{value:.{CSV_SIGNIFICANT_DIGITS - 1}e}".split("e")[1])
    return f"{value:.{max(0, CSV_SIGNIFICANT_DIGITS - 1 - exponent)}f}"


def _csv_row(record: MetricsRecord) -> List[str]:
    values = (record.scenario, record.key, record.order, record.nt, record.nr, record.snr_db,
              record.d0, record.design, record.avg_total_power, record.avg_peak_power,
              record.ser, record.ber, record.goodput, record.ci_ser, record.infeasible_count)
    return [format_number(v) for v in values]


def emit_csv(records: List[MetricsRecord], path) -> Path:
    """
    Write metrics rows with the fixed header and LF line endings.

    Raises:
        ValueError: No records
    """
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(_csv_row(record))
    logger.info(f"Wrote {path} ({len(records)} row(s))")
    return path


def write_manifest(path, config_path: str, config: RunConfig, out_dir, seed: Optional[int],
                   elapsed_s: float, failed: Iterable[str] = ()) -> Path:
    """Resolved configuration, seed, version and timing of a run."""
    manifest = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "config_path": str(config_path),
        "output_dir": str(out_dir),
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "elapsed_s": round(elapsed_s, 3),
        "failed_scenarios": list(failed),
        "config": config.to_dict(),
    }
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, sort_keys=False)
    logger.info(f"Wrote {path}")
    return path


def write_trace(rows: List[tuple], path) -> Path:
    """Solver trace as tab-separated text."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(("scenario", "key", "trial", "frame", "kind", "outer", "inner",
                         "t", "kappa", "objective", "min_slack", "alpha"))
        for scenario, key, trial, frame, row in rows:
            writer.writerow([scenario, key, trial, frame, row.kind, row.outer, row.inner]
                            + [format_number(v) for v in
                               (row.t, row.kappa, row.objective, row.min_slack, row.alpha)])
    logger.info(f"Wrote {path} ({len(rows)} row(s))")
    return path

# ============================================================================
# DISPATCH
# ============================================================================

def scenario_dispatch(config: RunConfig, out_dir, parallel: bool = False,
                      trace: bool = False, config_path: str = "",
                      seed: Optional[int] = None) -> int:
    """
    Run every scenario and write the outputs.

    A failing scenario is logged and skipped; the rest still run.

    Returns:
        Exit status: 0 if every scenario succeeded, 1 otherwise
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    solver_cfg = config.solver
    if trace:
        solver_cfg = replace(solver_cfg, trace=True)

    start = time.perf_counter()
    records: List[MetricsRecord] = []
    groups: Dict[str, List[MetricsRecord]] = OrderedDict()
    trace_rows: List[tuple] = []
    failed: List[str] = []

    for scenario in config.scenarios:
        try:
            out = run_scenario(scenario, solver_cfg, parallel=parallel,
                               trace_sink=trace_rows if trace else None)
        except Exception as e:
            logger.error(f"Scenario {scenario.name} failed: {e}", exc_info=True)
            failed.append(scenario.name)
            continue
        records.extend(out)
        groups.setdefault(scenario.group, []).extend(out)

    if records:
        emit_csv(records, out_dir / METRICS_FILE)
    for group, group_records in groups.items():
        try:
            emit_scenario_plot(group_records, out_dir / f"{group}.svg", title=group)
        except Exception as e:
            logger.error(f"Plot for {group} failed: {e}", exc_info=True)
            failed.append(group)
    if trace:
        write_trace(trace_rows, out_dir / TRACE_FILE)

    elapsed = time.perf_counter() - start
    write_manifest(out_dir / MANIFEST_FILE, config_path, config, out_dir, seed, elapsed, failed)

    if failed:
        logger.error(f"{len(failed)} failure(s): {', '.join(failed)}")
        return 1
    logger.info(f"All {len(config.scenarios)} scenario(s) completed in {elapsed:.1f} s")
    return 0

# ============================================================================
# COMMANDS
# ============================================================================

def _load(path: str, verbose: bool) -> RunConfig:
    config = ConfigLoader(path).get_config()
    setup_logging(config.logging, verbose)
    return config


def cmd_run(args) -> int:
    config = _load(args.config, args.verbose)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return scenario_dispatch(config, args.out, parallel=args.parallel,
                             trace=args.trace_solver, config_path=args.config,
                             seed=args.seed)


def cmd_oracle_check(args) -> int:
    config = _load(args.config, args.verbose)
    results = acceptance.run_all(instances=args.instances, channels=args.channels,
                                 frames=args.frames, seed=args.seed, cfg=config.solver)
    for result in results:
        print(result.summary())
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error(f"Failed check(s): {', '.join(failed)}")
        return 1
    return 0


def dump_regions(order: int, gamma: float, out: TextIO, d0: Optional[float] = None,
                 radius: float = 10.0) -> int:
    """
    Write every symbol's region polygon as CSV rows (symbol, label, vertex, re, im).

    With d0 the inner points get their relaxed boxes instead.

    Returns:
        Number of vertex rows written
    """
    spec = constellation(order)
    mode = RegionMode.FIXED if d0 is None else RegionMode.RELAXED
    regions = frame_regions(spec, range(order), gamma, mode, d0 or 0.0)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("symbol", "label", "vertex", "re", "im"))
    rows = 0
    for rc in regions:
        for v, (re, im) in enumerate(region_polygon(rc, radius)):
            writer.writerow((rc.index, rc.label.name, v, format_number(re), format_number(im)))
            rows += 1
    return rows


def cmd_regions(args) -> int:
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            rows = dump_regions(args.m, args.gamma, f, args.d0, args.radius)
        logger.info(f"Wrote {path} ({rows} vertices)")
    else:
        dump_regions(args.m, args.gamma, sys.stdout, args.d0, args.radius)
    return 0


def cmd_scatter(args) -> int:
    scenario = ScenarioConfig(
        name="scatter", order=args.m, nt=args.nt, nr=args.nr, snr_db=(args.snr_db,),
        mode=RegionMode(args.mode), d0=(args.d0,), design=DesignKind(args.design),
        benchmark=Benchmark.NONE, trials=args.trials, frames=args.frames, seed=args.seed,
    ).validate()
    points, _ = induced_points(scenario, args.snr_db, args.d0)
    if points.size == 0:
        logger.error("No feasible design to plot")
        return 1
    emit_scatter(points, constellation(args.m).points, snr_to_gamma(args.snr_db), args.out,
                 title=f"{args.m}-QAM induced constellation, SNR {args.snr_db:g} dB")
    return 0

# ============================================================================
# MAIN ENTRY POINT
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Directional-modulation M-QAM precoder design and link simulation"
    )
    parser.add_argument("--verbose", action="store_true", help="Debug-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run the scenarios of a config file")
    run.add_argument("config", help="Path to the scenario YAML file")
    run.add_argument("--out", required=True, help="Output directory")
    run.add_argument("--seed", type=int, default=None,
                     help="Override every scenario's seed")
    run.add_argument("--parallel", action="store_true", help="Run trials on a thread pool")
    run.add_argument("--trace-solver", action="store_true",
                     help="Write per-iteration solver trace")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("oracle-check", help="Verify the solver against the oracle")
    check.add_argument("config", help="Path to the scenario YAML file (solver section)")
    check.add_argument("--instances", type=int, default=200,
                       help="Random instances for the oracle comparison")
    check.add_argument("--channels", type=int, default=100,
                       help="Channels for the default-tolerance deviation check")
    check.add_argument("--frames", type=int, default=100,
                       help="Frames per channel for the deviation check")
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=cmd_oracle_check)

    regions = sub.add_parser("regions", help="Region inspection")
    regions_sub = regions.add_subparsers(dest="regions_command", required=True)
    dump = regions_sub.add_parser("dump", help="Write region polygons as CSV")
    dump.add_argument("--m", type=int, required=True, help="Modulation order")
    dump.add_argument("--gamma", type=float, required=True, help="Amplification gamma")
    dump.add_argument("--d0", type=float, default=None, help="Relaxed half-width for S4 points")
    dump.add_argument("--radius", type=float, default=10.0, help="Clipping box half-width")
    dump.add_argument("--out", default=None, help="Output file (stdout if omitted)")
    dump.set_defaults(func=cmd_regions)

    scatter = sub.add_parser("scatter", help="Plot induced received points")
    scatter.add_argument("--m", type=int, required=True, help="Modulation order")
    scatter.add_argument("--snr-db", type=float, required=True)
    scatter.add_argument("--nt", type=int, required=True)
    scatter.add_argument("--nr", type=int, required=True)
    scatter.add_argument("--mode", choices=[m.value for m in RegionMode], default="fixed")
    scatter.add_argument("--d0", type=float, default=0.0)
    scatter.add_argument("--design", choices=[d.value for d in DesignKind], default="total")
    scatter.add_argument("--seed", type=int, default=DEFAULT_SEED)
    scatter.add_argument("--trials", type=int, default=20, help="Channel realisations")
    scatter.add_argument("--frames", type=int, default=1, help="Frames per channel")
    scatter.add_argument("--out", required=True, help="Output SVG file")
    scatter.set_defaults(func=cmd_scatter)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and dispatch the command."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        return 1
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
