"""
src/metrics_collector.py

Link Metrics Aggregation

Collects per-trial link statistics and reduces them to per-grid-point records:
- Average total transmit power (mean ||w||^2 over designed frames)
- Average spatial peak power (mean max_k |w_k|^2)
- Symbol and bit error rates with a 95% confidence half-width on the SER
- Goodput eta = log2(M) * (1 - SER) / average total power
- Count of infeasible designs (excluded from the averages)
"""

import math
from dataclasses import dataclass, asdict
from typing import Dict, List, Tuple
import logging

from constants import CI_Z_SCORE, bits_per_symbol

logger = logging.getLogger(__name__)

# ============================================================================
# METRICS STRUCTURES
# ============================================================================

@dataclass
class TrialRecord:
    """Statistics of one channel realization (all frames of one trial)."""
    trial: int
    frames: int = 0                 # Frames with a feasible design
    infeasible: int = 0             # Frames whose design was infeasible
    total_power_sum: float = 0.0    # Sum over frames of ||w||^2
    peak_power_sum: float = 0.0     # Sum over frames of max_k |w_k|^2
    symbols: int = 0
    symbol_errors: int = 0
    bits: int = 0
    bit_errors: int = 0

    def add_frame(self, total_power: float, peak_power: float, symbols: int,
                  symbol_errors: int, bits: int, bit_errors: int) -> None:
        self.frames += 1
        self.total_power_sum += total_power
        self.peak_power_sum += peak_power
        self.symbols += symbols
        self.symbol_errors += symbol_errors
        self.bits += bits
        self.bit_errors += bit_errors

    def add_infeasible(self) -> None:
        self.infeasible += 1


@dataclass
class MetricsRecord:
    """Aggregated metrics of one grid point and one transmitter design."""
    scenario: str
    key: str
    order: int
    nt: int
    nr: int
    snr_db: float
    d0: float
    design: str
    avg_total_power: float
    avg_peak_power: float
    ser: float
    ber: float
    goodput: float
    ci_ser: float
    infeasible_count: int
    symbols: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def goodput(order: int, ser: float, avg_total_power: float) -> float:
    """eta = R_s (1 - SER) / P; NaN when the power is not positive."""
    if not avg_total_power > 0:
        return math.nan
    return bits_per_symbol(order) * (1.0 - ser) / avg_total_power


def ser_confidence(ser: float, symbols: int) -> float:
    """95% normal-approximation half-width of an SER estimate."""
    if symbols <= 0 or math.isnan(ser):
        return math.nan
    return CI_Z_SCORE * math.sqrt(ser * (1.0 - ser) / symbols)


def aggregate(trials: List[TrialRecord], *, scenario: str, key: str, order: int, nt: int,
              nr: int, snr_db: float, d0: float, design: str) -> MetricsRecord:
    """
    Reduce trial records to one MetricsRecord.

    Trials are summed in trial order with math.fsum, so the result does not
    depend on the order in which trials finished.
    """
    ordered = sorted(trials, key=lambda r: r.trial)
    frames = sum(r.frames for r in ordered)
    symbols = sum(r.symbols for r in ordered)
    bits = sum(r.bits for r in ordered)
    infeasible = sum(r.infeasible for r in ordered)

    if frames:
        avg_total = math.fsum(r.total_power_sum for r in ordered) / frames
        avg_peak = math.fsum(r.peak_power_sum for r in ordered) / frames
    else:
        avg_total = avg_peak = math.nan
    ser = sum(r.symbol_errors for r in ordered) / symbols if symbols else math.nan
    ber = sum(r.bit_errors for r in ordered) / bits if bits else math.nan

    if infeasible:
        logger.warning(f"{key} [{design}]: {infeasible} infeasible design(s) excluded")

    return MetricsRecord(
        scenario=scenario, key=key, order=order, nt=nt, nr=nr, snr_db=snr_db, d0=d0,
        design=design, avg_total_power=avg_total, avg_peak_power=avg_peak,
        ser=ser, ber=ber, goodput=goodput(order, ser, avg_total) if frames else math.nan,
        ci_ser=ser_confidence(ser, symbols), infeasible_count=infeasible, symbols=symbols,
    )

# ============================================================================
# METRICS COLLECTOR
# ============================================================================

class MetricsCollector:
    """
    Collects trial records per (grid point, design) and aggregates them.

    Maintains:
    - Trial records keyed by grid point and design
    - Grid point descriptions in insertion order
    """

    def __init__(self, scenario: str):
        """
        Initialize metrics collector.

        Args:
            scenario: Scenario name written into every record
        """
        self.scenario = scenario
        self.points: Dict[str, dict] = {}
        self.trials: Dict[Tuple[str, str], List[TrialRecord]] = {}

    def register_point(self, key: str, **point) -> None:
        """Describe a grid point (order, nt, nr, snr_db, d0)."""
        self.points.setdefault(key, point)

    def update_trial(self, key: str, design: str, record: TrialRecord) -> None:
        """Record one trial for a grid point and design."""
        if key not in self.points:
            raise KeyError(f"Unknown grid point {key}")
        self.trials.setdefault((key, design), []).append(record)

    def get_trials(self, key: str, design: str) -> List[TrialRecord]:
        return sorted(self.trials.get((key, design), []), key=lambda r: r.trial)

    def records(self) -> List[MetricsRecord]:
        """One MetricsRecord per (grid point, design), in registration order."""
        out = []
        for key, point in self.points.items():
            for (k, design), trials in self.trials.items():
                if k != key:
                    continue
                out.append(aggregate(trials, scenario=self.scenario, key=key,
                                     design=design, **point))
        return out

    def export_summary(self) -> List[dict]:
        """
        Export aggregated metrics for external consumption.

        Returns:
            List of record dictionaries
        """
        return [record.to_dict() for record in self.records()]
