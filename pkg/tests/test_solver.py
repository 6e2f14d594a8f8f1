"""
tests/test_solver.py

Test the interior-point path-following solver.

Validates:
- Closed-form single-antenna optimum and iteration count
- Infeasibility detection (inconsistent equalities, empty intersection)
- Barrier gradient/Hessian against central finite differences
- Agreement with the active-set oracle at tight tolerances
- Design orderings (peak design lowers the peak, total design the total)
- KKT residuals, trace rows and the regularised KKT solve
- Newton directions in null(B) and OPTIMAL only with B w~ = b
- Phase-I certificates only from centred points
"""

import pytest
import numpy as np
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from acceptance import derivative_errors, random_system
from assembly import ConstraintSystem, SymbolFrame, build_system
from config import SolverConfig
from constants import DesignKind, RegionMode, SolveStatus, StepMode
from constellation import constellation, point_index
from oracle import active_set_oracle
from channel_model import gen_channel
from solver import (
    _path_following, _solve_kkt, deviation, init_params, kkt_residual, newton_direction,
    peak_power_problem, phase1, solve, solve_peak_power, solve_total_power,
    total_power_problem
)


def _single_antenna(point=1 + 1j, order=4, gamma=1.0):
    """h = 1: the optimum is w = sqrt(gamma) * s."""
    spec = constellation(order)
    frame = SymbolFrame(order, (point_index(spec, point),), gamma)
    return build_system(frame, np.array([[1.0 + 0j]]))



def _with_equalities(order, rng, nt=4, gamma=10.0):
    """Two inner symbols and an edge symbol, so the system carries B rows."""
    spec = constellation(order)
    edge = 5 + 1j if order == 32 else 3 + 1j
    frame = SymbolFrame(order, tuple(point_index(spec, p) for p in (1 + 1j, edge, -1 - 1j)),
                        gamma)
    system = build_system(frame, gen_channel(3, nt, rng))
    assert system.r_b > 0
    return system


def _equality_residual(system, wt):
    return float(np.max(np.abs(system.B @ wt - system.b)))


class TestClosedForm:
    """Test problems with a known optimum."""

    def test_single_antenna_total(self):
        """Corner 1+1i through h = 1: w* = 1+1i, power 2, within the duality gap."""
        sol = solve_total_power(_single_antenna())
        assert sol.status == SolveStatus.OPTIMAL
        assert 2.0 - 1e-9 <= sol.objective <= 2.0 + SolverConfig().eps1
        assert abs(sol.w[0] - (1 + 1j)) < 0.05
        assert sol.outer_iters <= 5, f"Expected a handful of outer iterations, got {sol.outer_iters}"

    def test_single_antenna_peak(self):
        """With one antenna the peak equals the total power."""
        sol = solve_peak_power(_single_antenna(), SolverConfig.tight())
        assert sol.optimal
        assert sol.z == pytest.approx(2.0, rel=1e-5)

    def test_pinned_point(self):
        """Inner 16-QAM point through h = 1 is reached exactly."""
        sol = solve_total_power(_single_antenna(1 - 1j, order=16, gamma=4.0))
        assert sol.optimal
        assert abs(sol.w[0] - (2 - 2j)) < 1e-8
        assert sol.objective == pytest.approx(8.0, rel=1e-8)

    def test_tight_config_converges_further(self):
        """Tight tolerances shrink the gap."""
        sol = solve_total_power(_single_antenna(), SolverConfig.tight())
        assert sol.objective == pytest.approx(2.0, rel=1e-5)

    def test_block_normalized_step_mode(self):
        """Per-block normalised steps still reach a feasible near-optimal point."""
        cfg = SolverConfig(step_mode=StepMode.BLOCK_NORMALIZED)
        system = _single_antenna()
        sol = solve_total_power(system, cfg)
        assert sol.status != SolveStatus.INFEASIBLE
        assert system.satisfied(sol.w, tol=1e-9)
        assert sol.objective < 2.5


class TestInfeasibility:
    """Test infeasible frames."""

    def test_inconsistent_equalities(self):
        """Two inner points through identical single-antenna rows."""
        spec = constellation(16)
        frame = SymbolFrame(16, (point_index(spec, 1 + 1j), point_index(spec, -1 - 1j)), 1.0)
        system = build_system(frame, np.array([[1.0 + 0j], [1.0 + 0j]]))
        sol = solve(system, DesignKind.TOTAL)
        assert sol.status == SolveStatus.INFEASIBLE
        assert not sol.optimal

    def test_empty_intersection_certified(self):
        """Re(w) >= 1 and Re(w) <= -1 cannot both hold."""
        spec = constellation(4)
        frame = SymbolFrame(4, (point_index(spec, 1 + 1j), point_index(spec, -1 - 1j)), 1.0)
        system = build_system(frame, np.array([[1.0 + 0j], [1.0 + 0j]]))
        start = phase1(system)
        assert not start.feasible
        assert start.slack >= 0, "Final phase-I slack should certify infeasibility"
        assert solve(system, DesignKind.PEAK).status == SolveStatus.INFEASIBLE

    def test_feasible_start_is_strict(self):
        """Phase-I returns a strictly feasible point satisfying the equalities."""
        rng = np.random.default_rng(4)
        _, _, system = random_system(rng, 32, 4, 3, 10.0)
        start = phase1(system, DesignKind.PEAK)
        assert start.feasible
        if system.r_a:
            assert np.min(system.slack(start.wt)) > 0
        if system.r_b:
            assert np.max(np.abs(system.B @ start.wt - system.b)) < 1e-8
        q = start.wt[:4] ** 2 + start.wt[4:] ** 2
        assert start.z > np.max(q)


class TestDerivatives:
    """Test analytic barrier derivatives."""

    @pytest.mark.parametrize("kind", list(DesignKind))
    def test_against_finite_differences(self, kind):
        """Gradient and Hessian match central differences to 1e-5."""
        rng = np.random.default_rng(11)
        for _ in range(20):
            g_err, h_err = derivative_errors(kind, rng)
            assert g_err <= 1e-5, f"Gradient error {g_err}"
            assert h_err <= 1e-5, f"Hessian error {h_err}"

    def test_init_params_clamped(self):
        """t0 is at least 1."""
        system = _single_antenna()
        problem = total_power_problem(system)
        t0, _ = init_params(problem, np.array([5.0, 5.0]))
        assert t0 >= 1.0


class TestAgainstOracle:
    """Test tight-tolerance agreement with the active-set oracle."""

    @pytest.mark.parametrize("order", (4, 8, 16, 32))
    @pytest.mark.parametrize("kind", list(DesignKind))
    def test_relative_error(self, order, kind):
        """Objective within 1e-4 of the oracle, KKT residuals within 1e-6."""
        rng = np.random.default_rng(100 + order)
        cfg = SolverConfig.tight()
        for gamma in (1.0, 10.0, 100.0):
            _, _, system = random_system(rng, order, 3, 2, gamma)
            sol = solve(system, kind, cfg)
            ref = active_set_oracle(system, kind)
            assert sol.optimal and ref.optimal
            rel = abs(sol.objective - ref.objective) / abs(ref.objective)
            assert rel <= 1e-4, f"Relative error {rel} at gamma={gamma}"
            assert sol.kkt_stationarity <= 1e-6 * (1.0 + abs(ref.objective))
            assert sol.kkt_feasibility <= 1e-6
            assert system.satisfied(sol.w, tol=1e-8 * (1.0 + abs(ref.objective)))

    def test_relaxed_mode(self):
        """Relaxed boxes agree with the oracle too."""
        rng = np.random.default_rng(7)
        _, _, system = random_system(rng, 16, 4, 3, 10.0, RegionMode.RELAXED, 0.25 * np.sqrt(10.0))
        for kind in DesignKind:
            sol = solve(system, kind, SolverConfig.tight())
            ref = active_set_oracle(system, kind)
            assert abs(sol.objective - ref.objective) <= 1e-4 * ref.objective

    def test_deviation_of_identical_solutions(self):
        """A solution deviates from itself by zero."""
        sol = solve_total_power(_single_antenna(), SolverConfig.tight())
        assert deviation(sol, sol) == (0.0, 0.0)


class TestOrdering:
    """Test orderings between the two designs."""

    def test_designs_minimise_their_objective(self):
        """Peak design has the lower peak; total design has the lower total."""
        rng = np.random.default_rng(21)
        cfg = SolverConfig.tight()
        for _ in range(5):
            _, _, system = random_system(rng, 16, 4, 4, 100.0)
            total = solve(system, DesignKind.TOTAL, cfg)
            peak = solve(system, DesignKind.PEAK, cfg)
            assert peak.peak_power <= total.peak_power * (1 + 1e-5)
            assert total.total_power <= peak.total_power * (1 + 1e-5)

    def test_outer_path_non_increasing(self):
        """Centred objective values decrease along the path."""
        rng = np.random.default_rng(3)
        _, _, system = random_system(rng, 4, 4, 2, 10.0)
        sol = solve(system, DesignKind.TOTAL, SolverConfig.tight())
        path = np.array(sol.path)
        assert len(path) >= 2
        assert np.all(np.diff(path) <= 1e-6 * (1.0 + np.abs(path[1:])))


class TestEqualityRows:
    """Test that Newton directions and solutions respect B w~ = b."""

    @pytest.mark.parametrize("order", (16, 32))
    @pytest.mark.parametrize("kind", list(DesignKind))
    def test_newton_direction_in_null_space(self, order, kind):
        """B dw = 0 to 1e-10 from the phase-I start and near the boundary."""
        rng = np.random.default_rng(60 + order)
        system = _with_equalities(order, rng)
        start = phase1(system, kind)
        assert start.feasible
        if kind == DesignKind.TOTAL:
            problem = total_power_problem(system)
            x = start.wt
        else:
            problem = peak_power_problem(system)
            x = np.concatenate([start.wt, [start.z]])
        sol = solve(system, kind, SolverConfig.tight())
        near_boundary = sol.wt
        if kind == DesignKind.PEAK:
            near_boundary = np.concatenate([sol.wt, [sol.z * (1 + 1e-9)]])
        cfg = SolverConfig()
        for point, t in ((x, 1.0), (x, 1e3), (near_boundary, sol.t), (near_boundary, 100.0 * sol.t)):
            if not problem.interior(point):
                continue
            step = newton_direction(problem, point, t, cfg)
            drift = float(np.max(np.abs(problem.E @ step.d)))
            assert drift <= 1e-10 * max(1.0, float(np.max(np.abs(step.d)))), f"t={t:g}"

    @pytest.mark.parametrize("order", (16, 32))
    def test_block_normalized_with_equalities(self, order):
        """Per-block normalised steps keep the pinned coordinates exact."""
        rng = np.random.default_rng(70 + order)
        system = _with_equalities(order, rng)
        sol = solve_total_power(system, SolverConfig(step_mode=StepMode.BLOCK_NORMALIZED))
        ref = active_set_oracle(system, DesignKind.TOTAL)
        assert ref.optimal
        assert sol.status != SolveStatus.INFEASIBLE
        assert _equality_residual(system, sol.wt) <= 1e-9 * (1.0 + np.max(np.abs(system.b)))
        assert system.satisfied(sol.w, tol=1e-8)
        assert ref.objective * (1 - 1e-9) <= sol.objective <= 1.25 * ref.objective

    def test_badly_scaled_kkt_keeps_equalities(self):
        """Hessian entries spanning 20 decades still give E d = 0."""
        hess = np.diag([1e14, 1.0, 1e-6, 1e8])
        E = np.array([[1.0, 1.0, 1.0, 1.0], [0.0, 1.0, -1.0, 0.0]])
        rhs = np.array([1.0, -2.0, 3.0, 0.5, 0.0, 0.0])
        sol, reg = _solve_kkt(hess, E, rhs, 0.0)
        d = sol[:4]
        assert np.max(np.abs(E @ d)) <= 1e-10 * max(1.0, np.max(np.abs(d)))
        scale = max(1.0, np.max(np.diag(hess)))
        K = np.block([[hess + reg * scale * np.eye(4), E.T], [E, np.zeros((2, 2))]])
        assert np.allclose(K @ sol, rhs, atol=1e-6)

    def test_optimal_solutions_satisfy_equalities(self):
        """Default tolerances, 16-QAM, Nt = Nr = 5: OPTIMAL only with B w~ = b."""
        rng = np.random.default_rng(9)
        optimal = 0
        for _ in range(10):
            _, _, system = random_system(rng, 16, 5, 5, 10.0)
            for kind in DesignKind:
                sol = solve(system, kind)
                if not sol.optimal or system.r_b == 0:
                    continue
                optimal += 1
                assert _equality_residual(system, sol.wt) <= 1e-9 * (1.0 + np.max(np.abs(system.b)))
                assert system.satisfied(sol.w, tol=1e-8)
        assert optimal > 0


class TestPhaseOneCertificate:
    """Test that infeasibility is only claimed from centred points."""

    def test_feasible_frames_are_not_rejected(self):
        """Whenever the oracle finds an optimum, phase-I finds a start."""
        rng = np.random.default_rng(12)
        checked = 0
        for gamma in (1.0, 10.0, 100.0):
            for _ in range(8):
                _, _, system = random_system(rng, 16, 4, 2, gamma)
                ref = active_set_oracle(system, DesignKind.PEAK)
                if not ref.optimal:
                    continue
                checked += 1
                assert phase1(system, DesignKind.PEAK).feasible
                sol = solve(system, DesignKind.PEAK)
                assert sol.optimal
                assert ref.z * (1 - 1e-9) <= sol.z <= ref.z + 2 * SolverConfig().eps1
        assert checked > 0

    def test_monitor_sees_only_centred_points(self):
        """Outer iterations that stop short of centring report no decrement."""
        rng = np.random.default_rng(13)
        system = _with_equalities(16, rng)
        problem = total_power_problem(system)
        cfg = SolverConfig(max_inner=2, max_outer=15)
        seen = []

        def monitor(x, t, kappa):
            seen.append(kappa)
            return None

        _path_following(problem, phase1(system).wt, cfg, "total", monitor)
        centred = [k for k in seen if k is not None]
        assert None in seen
        assert all(k <= 2 * cfg.eps2 for k in centred)


class TestKKT:
    """Test dual estimates and the KKT solve."""

    def test_residuals_of_tight_solution(self):
        """Complementarity is about the barrier count over t."""
        rng = np.random.default_rng(5)
        _, _, system = random_system(rng, 16, 4, 3, 10.0)
        sol = solve(system, DesignKind.TOTAL, SolverConfig.tight())
        stationarity, feasibility, complementarity = kkt_residual(sol, system, DesignKind.TOTAL)
        assert stationarity == pytest.approx(sol.kkt_stationarity)
        assert feasibility <= 1e-9
        assert 0 <= complementarity <= 2 * system.r_a / sol.t + 1e-12
        assert np.all(sol.lambda_ineq > 0)

    def test_trace_rows(self):
        """Trace rows are collected when requested."""
        sol = solve_total_power(_single_antenna(), SolverConfig(trace=True))
        assert sol.trace, "Trace should not be empty"
        assert {row.kind for row in sol.trace} >= {"total"}
        assert solve_total_power(_single_antenna()).trace == ()

    def test_singular_kkt_falls_back(self):
        """Duplicate equality rows still yield a solution of the KKT system."""
        hess = np.eye(2)
        E = np.array([[1.0, 0.0], [1.0, 0.0]])
        rhs = np.array([1.0, 2.0, 0.5, 0.5])
        sol, _ = _solve_kkt(hess, E, rhs, 0.0)
        assert np.all(np.isfinite(sol))
        K = np.block([[hess, E.T], [E, np.zeros((2, 2))]])
        assert np.allclose(K @ sol, rhs, atol=1e-6)

    def test_unconstrained_system(self):
        """No rows at all: w = 0."""
        system = ConstraintSystem(A=np.zeros((0, 2)), a=np.zeros(0),
                                  B=np.zeros((0, 2)), b=np.zeros(0), nt=1)
        sol = solve_total_power(system)
        assert sol.optimal
        assert sol.objective == pytest.approx(0.0, abs=1e-12)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
