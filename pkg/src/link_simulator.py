"""
src/link_simulator.py

Monte Carlo Link Simulation

Runs the symbol-level precoding experiments:

    for each trial (channel realization):
        draw H, the symbol frames and the noise from the (seed, trial) substream
        for each grid point (SNR, d0) and transmitter:
            design w per frame, transmit y = H w + n, detect per antenna

Every grid point and transmitter sees the same channel, symbols and noise in a
given trial (common random numbers), so per-instance comparisons such as
DM vs ZF power or d0 nesting are made on identical data.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from assembly import SymbolFrame, build_system
from channel_model import (
    RayleighChannel, ChannelRealization, trial_rng, zf_precoder, zf_signal
)
from config import ScenarioConfig, SolverConfig
from constants import (
    NOISE_VARIANCE, Benchmark, DesignKind, RegionMode, SolveStatus, snr_to_gamma
)
from constellation import bit_errors, constellation, detect_many
from metrics_collector import MetricsCollector, MetricsRecord, TrialRecord
from solver import Solution, solve

logger = logging.getLogger(__name__)


@dataclass
class TrialOutcome:
    """One designed and transmitted frame."""
    feasible: bool
    total_power: float = np.nan
    peak_power: float = np.nan
    induced: Optional[np.ndarray] = None       # Noiseless H w
    detected: Optional[np.ndarray] = None
    symbol_errors: int = 0
    bit_errors: int = 0
    solution: Optional[Solution] = None


@dataclass
class TrialData:
    """Common random numbers of one trial."""
    realization: ChannelRealization
    indices: np.ndarray         # frames x Nr symbol indices
    noise: np.ndarray           # frames x Nr noise samples


def grid_key(scenario: ScenarioConfig, snr_db: float, d0: float) -> str:
    return f"snr{snr_db:g}_d0{d0:g}"


def transmitters(scenario: ScenarioConfig) -> List[str]:
    """Designs evaluated for a scenario: the DM design plus its benchmark."""
    names = [scenario.design.value]
    if scenario.benchmark != Benchmark.NONE:
        names.append(scenario.benchmark.value)
    return names

# ============================================================================
# SINGLE FRAME
# ============================================================================

def design_precoder(frame: SymbolFrame, channel: np.ndarray, design: DesignKind,
                    cfg: Optional[SolverConfig] = None) -> Solution:
    """Solve the DM design of one frame over channel H."""
    return solve(build_system(frame, channel), design, cfg)


def run_trial(scenario: ScenarioConfig, channel: np.ndarray, frame: SymbolFrame,
              noise: np.ndarray, transmitter: str,
              solver_cfg: Optional[SolverConfig] = None) -> TrialOutcome:
    """
    Design, transmit and detect one frame.

    Args:
        scenario: Scenario the frame belongs to
        channel: Nr x Nt channel
        frame: Symbols, gamma, mode and d0
        noise: Noise samples added at the receive antennas
        transmitter: "total", "peak", "zf" or "genie"
        solver_cfg: Solver parameters for the DM designs

    Returns:
        TrialOutcome; infeasible designs are flagged, never raised
    """
    spec = constellation(scenario.order)
    symbols = frame.symbols
    sent = np.array(frame.indices)

    solution = None
    if transmitter == Benchmark.GENIE.value:
        transmit = np.sqrt(frame.gamma) * symbols
        channel = np.eye(scenario.nr)
    elif transmitter == Benchmark.ZF.value:
        try:
            transmit = zf_signal(zf_precoder(channel), symbols, frame.gamma)
        except ValueError as e:
            logger.warning(f"{scenario.name}: zero forcing failed: {e}")
            return TrialOutcome(feasible=False)
    else:
        solution = design_precoder(frame, channel, DesignKind(transmitter), solver_cfg)
        if solution.status == SolveStatus.INFEASIBLE:
            logger.warning(f"{scenario.name}: {transmitter} design infeasible")
            return TrialOutcome(feasible=False, solution=solution)
        transmit = solution.w

    received, induced = RayleighChannel.receive(channel, transmit, noise)
    detected = detect_many(spec, received, frame.gamma)
    return TrialOutcome(
        feasible=True,
        total_power=float(np.sum(np.abs(transmit) ** 2)),
        peak_power=float(np.max(np.abs(transmit) ** 2)),
        induced=induced,
        detected=detected,
        symbol_errors=int(np.count_nonzero(detected != sent)),
        bit_errors=bit_errors(spec, sent, detected),
        solution=solution,
    )

# ============================================================================
# TRIALS AND SCENARIOS
# ============================================================================

def draw_trial(scenario: ScenarioConfig, trial: int,
               noise_variance: float = NOISE_VARIANCE) -> TrialData:
    """Channel, symbols and noise of one trial from its (seed, trial) substream."""
    rng = trial_rng(scenario.seed, trial)
    link = RayleighChannel(scenario.nr, scenario.nt, noise_variance)
    realization = link.realize(trial, rng)
    indices = rng.integers(0, scenario.order, size=(scenario.frames, scenario.nr))
    return TrialData(realization, indices, link.draw_noise(scenario.frames, rng))


def simulate_trial(scenario: ScenarioConfig, trial: int,
                   solver_cfg: Optional[SolverConfig] = None,
                   noise_variance: float = NOISE_VARIANCE
                   ) -> Tuple[Dict[Tuple[str, str], TrialRecord], List[tuple]]:
    """
    Run every grid point and transmitter on one trial.

    Returns:
        (records keyed by (grid key, transmitter), solver trace rows)
    """
    data = draw_trial(scenario, trial, noise_variance)
    bits = constellation(scenario.order).bits
    records: Dict[Tuple[str, str], TrialRecord] = {}
    traces: List[tuple] = []

    for snr_db in scenario.snr_db:
        gamma = snr_to_gamma(snr_db)
        for d0 in scenario.d0:
            key = grid_key(scenario, snr_db, d0)
            for name in transmitters(scenario):
                record = TrialRecord(trial=trial)
                for f in range(scenario.frames):
                    frame = SymbolFrame(scenario.order, tuple(data.indices[f]), gamma,
                                        scenario.mode, d0)
                    outcome = run_trial(scenario, data.realization.channel, frame,
                                        data.noise[f], name, solver_cfg)
                    if outcome.solution is not None and outcome.solution.trace:
                        traces.extend((scenario.name, key, trial, f, row)
                                      for row in outcome.solution.trace)
                    if not outcome.feasible:
                        record.add_infeasible()
                        continue
                    record.add_frame(outcome.total_power, outcome.peak_power, scenario.nr,
                                     outcome.symbol_errors, scenario.nr * bits,
                                     outcome.bit_errors)
                records[(key, name)] = record
    return records, traces


def run_scenario(scenario: ScenarioConfig, solver_cfg: Optional[SolverConfig] = None,
                 parallel: bool = False, max_workers: Optional[int] = None,
                 noise_variance: float = NOISE_VARIANCE,
                 trace_sink: Optional[list] = None) -> List[MetricsRecord]:
    """
    Simulate a scenario over its (SNR, d0) grid.

    Args:
        scenario: Validated scenario
        solver_cfg: Solver parameters
        parallel: Run trials on a thread pool
        max_workers: Thread pool size (None lets the executor decide)
        noise_variance: sigma^2 per receive antenna (1 unless testing)
        trace_sink: Receives (scenario, key, trial, frame, TraceRow) tuples

    Returns:
        One MetricsRecord per grid point and transmitter
    """
    scenario.validate()
    logger.info(f"Scenario {scenario.name}: M={scenario.order}, Nt={scenario.nt}, "
                f"Nr={scenario.nr}, {len(scenario.snr_db)}x{len(scenario.d0)} grid, "
                f"{scenario.trials} trials x {scenario.frames} frames")

    collector = MetricsCollector(scenario.name)
    for snr_db in scenario.snr_db:
        for d0 in scenario.d0:
            collector.register_point(grid_key(scenario, snr_db, d0), order=scenario.order,
                                     nt=scenario.nt, nr=scenario.nr, snr_db=snr_db, d0=d0)

    def _one(trial: int):
        return simulate_trial(scenario, trial, solver_cfg, noise_variance)

    trials = range(scenario.trials)
    if parallel:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_one, trials))
    else:
        results = [_one(t) for t in trials]

    for records, traces in results:
        for (key, name), record in records.items():
            collector.update_trial(key, name, record)
        if trace_sink is not None:
            trace_sink.extend(traces)

    out = collector.records()
    logger.info(f"Scenario {scenario.name}: {len(out)} record(s)")
    return out


def goodput_sweep(scenario: ScenarioConfig, solver_cfg: Optional[SolverConfig] = None,
                  **kwargs) -> Dict[float, Tuple[float, float]]:
    """
    d0 maximizing goodput at each SNR of a relaxed scenario.

    Returns:
        {snr_db: (best d0, best goodput)}
    """
    if scenario.mode != RegionMode.RELAXED:
        raise ValueError("goodput sweep needs a relaxed-mode scenario")
    records = run_scenario(scenario, solver_cfg, **kwargs)
    best: Dict[float, Tuple[float, float]] = {}
    for rec in records:
        if rec.design != scenario.design.value or np.isnan(rec.goodput):
            continue
        if rec.snr_db not in best or rec.goodput > best[rec.snr_db][1]:
            best[rec.snr_db] = (rec.d0, rec.goodput)
    return best


def induced_points(scenario: ScenarioConfig, snr_db: float, d0: float = 0.0,
                   solver_cfg: Optional[SolverConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Noiseless received points H w of the DM design over all trials and frames.

    Returns:
        (induced complex points, their symbol indices)
    """
    gamma = snr_to_gamma(snr_db)
    points: List[np.ndarray] = []
    labels: List[np.ndarray] = []
    for trial in range(scenario.trials):
        data = draw_trial(scenario, trial)
        for f in range(scenario.frames):
            frame = SymbolFrame(scenario.order, tuple(data.indices[f]), gamma, scenario.mode, d0)
            sol = design_precoder(frame, data.realization.channel, scenario.design, solver_cfg)
            if sol.optimal:
                points.append(data.realization.channel @ sol.w)
                labels.append(data.indices[f])
    if not points:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=int)
    return np.concatenate(points), np.concatenate(labels)
