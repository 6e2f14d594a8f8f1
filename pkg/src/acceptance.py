"""
src/acceptance.py

Solver Verification Suite

Full-size checks run by the `oracle-check` command:
- Interior point vs active-set oracle on random small instances (tight tolerances),
  including KKT residuals, feasibility and region membership of the induced points
- Default-tolerance deviation from the oracle at Nt = Nr = 5 (peak design)
- Minimum-distance property of the extended regions by sampling
- Analytic barrier gradient/Hessian vs central finite differences

SER behaviour of the fixed and relaxed designs against the genie link is
checked by `check_ser_behaviour`; it is a Monte Carlo run and stays out of
`oracle-check`.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from itertools import cycle
from typing import Dict, List, Optional, Tuple

import numpy as np

from assembly import ConstraintSystem, SymbolFrame, build_system
from channel_model import gen_channel
from config import ScenarioConfig, SolverConfig
from constants import (
    MIN_POINT_DISTANCE, SUPPORTED_ORDERS, Benchmark, DesignKind, RegionMode, snr_to_gamma
)
from constellation import constellation
from link_simulator import run_scenario
from oracle import active_set_oracle, within_bound
from regions import contains, extended_region, frame_regions, sample_region
from solver import deviation, peak_power_problem, solve, total_power_problem

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one verification check."""
    name: str
    passed: bool
    elapsed_s: float = 0.0
    details: Dict[str, float] = field(default_factory=dict)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={v:.3g}" for k, v in self.details.items())
        return f"[{status}] {self.name} ({self.elapsed_s:.1f} s): {info}"

# ============================================================================
# RANDOM INSTANCES
# ============================================================================

def random_frame(rng: np.random.Generator, order: int, nr: int, gamma: float,
                 mode: RegionMode = RegionMode.FIXED, d0: float = 0.0) -> SymbolFrame:
    return SymbolFrame(order, tuple(int(i) for i in rng.integers(0, order, nr)), gamma, mode, d0)


def random_system(rng: np.random.Generator, order: int, nt: int, nr: int, gamma: float,
                  mode: RegionMode = RegionMode.FIXED, d0: float = 0.0):
    """(frame, channel, system) of one random CN(0,1) instance."""
    frame = random_frame(rng, order, nr, gamma, mode, d0)
    channel = gen_channel(nr, nt, rng)
    return frame, channel, build_system(frame, channel)


def _induced_ok(frame: SymbolFrame, channel: np.ndarray, w: np.ndarray, tol: float) -> bool:
    spec = constellation(frame.order)
    regions = frame_regions(spec, frame.indices, frame.gamma, frame.mode, frame.d0)
    induced = channel @ w
    return all(contains(rc, p, tol) for rc, p in zip(regions, induced))

# ============================================================================
# CHECKS
# ============================================================================

def check_solver_vs_oracle(instances: int = 200, seed: int = 0,
                           rel_tol: float = 1e-4, kkt_tol: float = 1e-6,
                           feas_tol: float = 1e-8) -> List[CheckResult]:
    """
    Tight-tolerance interior point vs oracle on random instances, plus
    feasibility and region membership of every solution.
    """
    rng = np.random.default_rng(seed)
    cfg = SolverConfig.tight()
    start = time.perf_counter()
    worst_rel = worst_stat = worst_feas = 0.0
    membership_failures = solved = 0
    orders = cycle(SUPPORTED_ORDERS)

    for i in range(instances):
        order = next(orders)
        nt = int(rng.integers(2, 6))
        nr = int(rng.integers(1, min(3, nt) + 1))
        gamma = float(rng.choice([1.0, 10.0, 100.0]))
        mode = RegionMode.RELAXED if order >= 16 and i % 8 >= 4 else RegionMode.FIXED
        d0 = 0.25 * math.sqrt(gamma) if mode == RegionMode.RELAXED else 0.0
        frame, channel, system = random_system(rng, order, nt, nr, gamma, mode, d0)
        while not within_bound(system, DesignKind.PEAK):
            frame, channel, system = random_system(rng, order, nt, nr, gamma, mode, d0)

        for kind in DesignKind:
            sol = solve(system, kind, cfg)
            ref = active_set_oracle(system, kind)
            if not (sol.optimal and ref.optimal):
                logger.warning(f"Instance {i} ({kind.value}): solver {sol.status.value}, "
                               f"oracle {ref.status.value}")
                worst_rel = math.inf
                continue
            solved += 1
            scale = 1.0 + abs(ref.objective)
            worst_rel = max(worst_rel, abs(sol.objective - ref.objective) / abs(ref.objective))
            worst_stat = max(worst_stat, sol.kkt_stationarity / scale)
            worst_feas = max(worst_feas, sol.kkt_feasibility)
            if not (system.satisfied(sol.w, feas_tol) and
                    _induced_ok(frame, channel, sol.w, feas_tol * scale)):
                membership_failures += 1

    elapsed = time.perf_counter() - start
    return [
        CheckResult("solver vs oracle", worst_rel <= rel_tol and worst_stat <= kkt_tol
                    and worst_feas <= kkt_tol, elapsed,
                    {"solves": solved, "max_rel_error": worst_rel,
                     "max_stationarity": worst_stat, "max_feasibility": worst_feas}),
        CheckResult("feasibility and region membership", membership_failures == 0, elapsed,
                    {"failures": membership_failures}),
    ]


def check_default_deviation(channels: int = 100, frames: int = 100, seed: int = 1,
                            order: int = 16, snr_db: float = 10.0, nt: int = 5, nr: int = 5,
                            cfg: Optional[SolverConfig] = None,
                            limit: float = 0.05) -> CheckResult:
    """
    Average relative deviation of the default-tolerance peak design from the
    oracle. The z deviation is gated; the w deviation is reported (the peak
    optimum need not be unique in w).
    """
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(seed)
    gamma = snr_to_gamma(snr_db)
    start = time.perf_counter()
    rel_z: List[float] = []
    rel_w: List[float] = []
    for _ in range(channels):
        channel = gen_channel(nr, nt, rng)
        for _ in range(frames):
            frame = random_frame(rng, order, nr, gamma)
            system = build_system(frame, channel)
            if not within_bound(system, DesignKind.PEAK):
                continue
            sol = solve(system, DesignKind.PEAK, cfg)
            ref = active_set_oracle(system, DesignKind.PEAK)
            if sol.optimal and ref.optimal:
                dz, dw = deviation(sol, ref)
                rel_z.append(dz)
                rel_w.append(dw)
    avg_z = math.fsum(rel_z) / len(rel_z) if rel_z else math.inf
    avg_w = math.fsum(rel_w) / len(rel_w) if rel_w else math.inf
    return CheckResult("default-tolerance deviation", avg_z <= limit,
                       time.perf_counter() - start,
                       {"instances": len(rel_z), "avg_rel_z": avg_z, "avg_rel_w": avg_w})


def check_min_distance(pairs: int = 10_000, seed: int = 2, radius: float = 10.0) -> CheckResult:
    """Sampled points of distinct symbols' extended regions stay >= 2 apart (gamma = 1)."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst = math.inf
    for order in SUPPORTED_ORDERS:
        spec = constellation(order)
        regions = [extended_region(spec, i, 1.0) for i in range(order)]
        pools = [sample_region(rc, rng, 256, radius) for rc in regions]
        first = rng.integers(0, order, pairs)
        offset = rng.integers(1, order, pairs)
        second = (first + offset) % order
        for i, j in zip(first, second):
            p = pools[i][rng.integers(0, len(pools[i]))]
            q = pools[j][rng.integers(0, len(pools[j]))]
            worst = min(worst, abs(p - q))
    return CheckResult("extended-region minimum distance", worst >= MIN_POINT_DISTANCE - 1e-9,
                       time.perf_counter() - start, {"min_distance": worst})


def _interior_system(rng: np.random.Generator, nt: int, rows: int):
    """Random system with a known interior point (slacks in [0.5, 2])."""
    wt = rng.standard_normal(2 * nt)
    A = rng.standard_normal((rows, 2 * nt))
    a = A @ wt - rng.uniform(0.5, 2.0, rows)
    system = ConstraintSystem(A=A, a=a, B=np.zeros((0, 2 * nt)), b=np.zeros(0), nt=nt)
    return system, wt


def derivative_errors(kind: DesignKind, rng: np.random.Generator, step: float = 1e-5):
    """Relative (gradient, Hessian) errors of one random interior point."""
    nt = int(rng.integers(1, 5))
    system, wt = _interior_system(rng, nt, int(rng.integers(1, 7)))
    if kind == DesignKind.TOTAL:
        problem = total_power_problem(system)
        x = wt
    else:
        problem = peak_power_problem(system)
        q = wt[:nt] ** 2 + wt[nt:] ** 2
        x = np.concatenate([wt, [q.max() + rng.uniform(0.5, 2.0)]])
    t = float(rng.uniform(1.0, 100.0))

    grad = problem.gradient(x, t)
    hess = problem.hessian(x, t)
    fd_grad = np.zeros_like(x)
    fd_hess = np.zeros_like(hess)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        fd_grad[i] = (problem.value(x + e, t) - problem.value(x - e, t)) / (2 * step)
        fd_hess[:, i] = (problem.gradient(x + e, t) - problem.gradient(x - e, t)) / (2 * step)
    g_err = np.linalg.norm(fd_grad - grad) / max(1.0, np.linalg.norm(grad))
    h_err = np.linalg.norm(fd_hess - hess) / max(1.0, np.linalg.norm(hess))
    return float(g_err), float(h_err)


def check_derivatives(points: int = 100, seed: int = 3, tol: float = 1e-5) -> CheckResult:
    """Analytic barrier derivatives vs central differences for both kinds."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst = 0.0
    for kind in DesignKind:
        for _ in range(points):
            worst = max(worst, *derivative_errors(kind, rng))
    return CheckResult("barrier derivatives", worst <= tol, time.perf_counter() - start,
                       {"max_rel_error": worst})


def check_ser_behaviour(trials: int = 25, frames: int = 100, seed: int = 4,
                        order: int = 16, nt: int = 4, nr: int = 4,
                        snr_db: Tuple[float, ...] = (4.0, 8.0, 12.0, 16.0, 20.0),
                        d0: float = 0.5, cfg: Optional[SolverConfig] = None) -> CheckResult:
    """
    SER of the fixed and relaxed total-power designs against the genie link.

    Fixed-mode SER stays within 3 CI half-widths above the genie SER at every
    SNR. Relaxed-mode SER (half-width d0) is above the fixed SER at the lowest
    SNR and within 2 CI half-widths of it at the highest. All runs share the
    channels, symbols and noise of one seed.
    """
    start = time.perf_counter()
    common = dict(order=order, nt=nt, nr=nr, snr_db=tuple(snr_db), trials=trials,
                  frames=frames, seed=seed)
    fixed = run_scenario(ScenarioConfig(name="ser_fixed", benchmark=Benchmark.GENIE, **common),
                         cfg)
    relaxed = run_scenario(ScenarioConfig(name="ser_relaxed", mode=RegionMode.RELAXED,
                                          d0=(d0,), **common), cfg)

    def _by_snr(records, design):
        return {r.snr_db: r for r in records if r.design == design}

    dm, genie, relax = _by_snr(fixed, "total"), _by_snr(fixed, "genie"), _by_snr(relaxed, "total")
    excess = max((dm[s].ser - genie[s].ser) - 3.0 * max(dm[s].ci_ser, genie[s].ci_ser)
                 for s in snr_db)
    low, high = min(snr_db), max(snr_db)
    low_gap = relax[low].ser - dm[low].ser
    high_gap = abs(relax[high].ser - dm[high].ser)
    high_ci = max(relax[high].ci_ser, dm[high].ci_ser)
    passed = excess <= 0.0 and low_gap > 0.0 and high_gap <= 2.0 * high_ci
    return CheckResult("SER behaviour", passed, time.perf_counter() - start,
                       {"fixed_minus_genie_excess": excess, "relaxed_gap_low_snr": low_gap,
                        "relaxed_gap_high_snr": high_gap, "ci_high_snr": high_ci})


def run_all(instances: int = 200, channels: int = 100, frames: int = 100,
            seed: int = 0, cfg: Optional[SolverConfig] = None) -> List[CheckResult]:
    """Every check at the requested size."""
    results = check_solver_vs_oracle(instances, seed)
    results.append(check_default_deviation(channels, frames, seed + 1, cfg=cfg))
    results.append(check_min_distance(seed=seed + 2))
    results.append(check_derivatives(seed=seed + 3))
    for result in results:
        logger.info(result.summary())
    return results
