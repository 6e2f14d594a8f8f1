"""
tests/test_link_simulator.py

Test the Monte Carlo link simulation.

Validates:
- Common random numbers per (seed, trial)
- Per-instance orderings (DM vs ZF power, relaxed d0 nesting)
- Error-free detection at negligible noise
- Determinism of serial and threaded runs
- Goodput sweep and induced-point collection
"""

import pytest
import numpy as np
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from assembly import SymbolFrame
from config import ScenarioConfig, SolverConfig
from constants import Benchmark, DesignKind, RegionMode, SolveStatus, snr_to_gamma
from constellation import constellation, point_index
from link_simulator import (
    draw_trial, goodput_sweep, grid_key, induced_points, run_scenario, run_trial,
    transmitters
)
from regions import contains, extended_region


class TestCommonRandomNumbers:
    """Test per-trial substreams."""

    def test_draw_is_reproducible(self):
        """The same (seed, trial) gives the same channel, symbols and noise."""
        s = ScenarioConfig(name="crn", order=16, nt=4, nr=2, frames=3, seed=9)
        a, b = draw_trial(s, 2), draw_trial(s, 2)
        assert np.array_equal(a.realization.channel, b.realization.channel)
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.noise, b.noise)
        assert a.indices.shape == (3, 2)
        assert not np.array_equal(a.realization.channel, draw_trial(s, 3).realization.channel)

    def test_grid_key(self):
        """Keys name the SNR and d0 of a grid point."""
        s = ScenarioConfig(name="k", order=16, nt=2, nr=2)
        assert grid_key(s, 10.0, 0.5) == "snr10_d00.5"

    def test_transmitters(self):
        """The DM design comes first, then its benchmark."""
        s = ScenarioConfig(name="t", order=16, nt=2, nr=2, design=DesignKind.PEAK,
                           benchmark=Benchmark.ZF)
        assert transmitters(s) == ["peak", "zf"]
        assert transmitters(ScenarioConfig(name="t", order=4, nt=2, nr=2)) == ["total"]


class TestOrderings:
    """Test per-instance orderings on shared data."""

    def test_dm_power_below_zero_forcing(self):
        """ZF induces sqrt(gamma)*s exactly, a feasible point of the DM problem."""
        s = ScenarioConfig(name="zf", order=16, nt=4, nr=4, snr_db=(20.0,), frames=4, seed=1)
        cfg = SolverConfig.tight()
        gamma = snr_to_gamma(20.0)
        for trial in range(3):
            data = draw_trial(s, trial)
            for f in range(s.frames):
                frame = SymbolFrame(16, tuple(data.indices[f]), gamma)
                dm = run_trial(s, data.realization.channel, frame, data.noise[f], "total", cfg)
                zf = run_trial(s, data.realization.channel, frame, data.noise[f], "zf")
                assert dm.feasible and zf.feasible
                assert dm.total_power <= zf.total_power * (1 + 1e-5)

    def test_relaxed_power_non_increasing_in_d0(self):
        """Larger boxes never cost more power; d0 = 0 matches the fixed design."""
        common = dict(order=16, nt=4, nr=4, snr_db=(20.0,), trials=2, frames=3, seed=5)
        cfg = SolverConfig.tight()
        relaxed = run_scenario(ScenarioConfig(name="relaxed", mode=RegionMode.RELAXED,
                                              d0=(0.0, 0.25, 0.5, 1.0), **common), cfg)
        fixed = run_scenario(ScenarioConfig(name="fixed", **common), cfg)
        powers = [r.avg_total_power for r in relaxed]
        assert [r.d0 for r in relaxed] == [0.0, 0.25, 0.5, 1.0]
        for lo, hi in zip(powers[1:], powers[:-1]):
            assert lo <= hi * (1 + 1e-5)
        assert powers[0] == pytest.approx(fixed[0].avg_total_power, rel=1e-6)


class TestDetection:
    """Test the transmit/detect chain."""

    def test_error_free_at_negligible_noise(self):
        """DM, ZF and genie transmitters detect every symbol without noise."""
        for benchmark in (Benchmark.ZF, Benchmark.GENIE):
            s = ScenarioConfig(name="clean", order=16, nt=4, nr=2, snr_db=(10.0,),
                               benchmark=benchmark, trials=2, frames=5)
            records = run_scenario(s, noise_variance=1e-8)
            assert [r.design for r in records] == ["total", benchmark.value]
            for rec in records:
                assert rec.ser == 0.0 and rec.ber == 0.0
                assert rec.symbols == 2 * 5 * 2
                assert rec.infeasible_count == 0

    def test_infeasible_frame_flagged(self):
        """Infeasible designs are reported, not raised."""
        spec = constellation(16)
        s = ScenarioConfig(name="bad", order=16, nt=1, nr=2)
        frame = SymbolFrame(16, (point_index(spec, 1 + 1j), point_index(spec, -1 - 1j)), 1.0)
        outcome = run_trial(s, np.ones((2, 1), dtype=complex), frame, np.zeros(2), "total")
        assert not outcome.feasible
        assert outcome.solution.status == SolveStatus.INFEASIBLE


class TestDeterminism:
    """Test reproducibility of whole scenarios."""

    def test_serial_and_threaded_runs_agree(self):
        """Records do not depend on the execution strategy."""
        s = ScenarioConfig(name="det", order=8, nt=3, nr=2, snr_db=(5.0, 15.0),
                           benchmark=Benchmark.ZF, trials=4, frames=2, seed=3)
        serial = run_scenario(s)
        assert serial == run_scenario(s)
        assert serial == run_scenario(s, parallel=True, max_workers=3)

    def test_trace_sink(self):
        """Tracing collects rows tagged with scenario, key, trial and frame."""
        s = ScenarioConfig(name="tr", order=4, nt=2, nr=1, trials=1, frames=2)
        sink = []
        run_scenario(s, SolverConfig(trace=True), trace_sink=sink)
        assert sink
        assert {row[0] for row in sink} == {"tr"}
        assert {row[3] for row in sink} <= {0, 1}


class TestSweeps:
    """Test goodput sweeps and induced points."""

    def test_goodput_sweep(self):
        """One best d0 per SNR, drawn from the grid."""
        s = ScenarioConfig(name="gp", order=16, nt=4, nr=2, snr_db=(10.0,),
                           mode=RegionMode.RELAXED, d0=(0.0, 0.5), trials=1, frames=2)
        best = goodput_sweep(s)
        assert set(best) == {10.0}
        d0, eta = best[10.0]
        assert d0 in (0.0, 0.5)
        assert eta > 0

    def test_goodput_sweep_needs_relaxed_mode(self):
        """Fixed-mode scenarios have nothing to sweep."""
        with pytest.raises(ValueError, match="relaxed"):
            goodput_sweep(ScenarioConfig(name="gp", order=16, nt=4, nr=2))

    def test_induced_points_lie_in_regions(self):
        """Noiseless H w lands in the extended region of the sent symbol."""
        s = ScenarioConfig(name="ip", order=4, nt=3, nr=2, trials=1, frames=3, seed=2)
        points, labels = induced_points(s, 10.0)
        assert points.shape == labels.shape
        assert points.size > 0
        spec = constellation(4)
        gamma = snr_to_gamma(10.0)
        for p, label in zip(points, labels):
            assert contains(extended_region(spec, int(label), gamma), p, tol=1e-6)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
