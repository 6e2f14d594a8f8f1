"""
tests/test_acceptance.py

Test the verification checks behind `oracle-check` at reduced sizes.
"""

import pytest
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from acceptance import (
    CheckResult, check_default_deviation, check_derivatives, check_min_distance,
    check_ser_behaviour, check_solver_vs_oracle
)
from sim_launcher import main


class TestChecks:
    """Each check passes on a small run."""

    def test_solver_vs_oracle(self):
        """Mixed orders, modes and SNRs agree with the oracle."""
        results = check_solver_vs_oracle(instances=12, seed=5)
        assert [r.name for r in results] == ["solver vs oracle",
                                             "feasibility and region membership"]
        for result in results:
            assert result.passed, result.summary()

    def test_default_deviation(self):
        """Default tolerances stay within 5% on z."""
        result = check_default_deviation(channels=2, frames=5, seed=1)
        assert result.passed, result.summary()
        assert result.details["instances"] > 0

    def test_min_distance(self):
        """Distinct regions never come closer than 2 at gamma = 1."""
        result = check_min_distance(pairs=500, seed=2)
        assert result.passed, result.summary()
        assert result.details["min_distance"] >= 2.0 - 1e-9

    def test_derivatives(self):
        """Barrier derivatives match finite differences."""
        assert check_derivatives(points=10, seed=3).passed

    def test_ser_behaviour(self):
        """Fixed SER tracks the genie; relaxed SER is higher at 4 dB and converges at 20 dB."""
        result = check_ser_behaviour(trials=6, frames=40, seed=4, snr_db=(4.0, 20.0))
        assert result.passed, result.summary()
        assert result.details["relaxed_gap_low_snr"] > 0
        assert result.details["fixed_minus_genie_excess"] <= 0


class TestSummary:
    """Test report lines."""

    def test_summary_line(self):
        """[PASS|FAIL] name (time): details."""
        line = CheckResult("demo", False, 1.25, {"x": 3}).summary()
        assert line.startswith("[FAIL] demo")
        assert "x=3" in line


class TestCommand:
    """Test the oracle-check command."""

    def test_exit_status(self, tmp_path, capsys):
        """A passing check prints PASS lines and exits 0."""
        cfg = tmp_path / "c.yaml"
        cfg.write_text("scenarios:\n  x:\n    M: 4\n    nt: 2\n    nr: 1\n", encoding="utf-8")
        status = main(["oracle-check", str(cfg), "--instances", "4",
                       "--channels", "1", "--frames", "3"])
        out = capsys.readouterr().out
        assert status == 0, out
        assert out.count("[PASS]") == 5


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
