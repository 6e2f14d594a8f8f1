"""
src/solver.py

Interior-Point Path-Following Solver

Solves the two precoder design programs over w~ = [Re(w); Im(w)]:

- Total power:   min ||w~||^2      s.t. A w~ >= a, B w~ = b
- Peak power:    min z             s.t. w~^T E_k w~ <= z (k = 1..Nt),
                                        A w~ >= a, B w~ = b

Both are handled by one log-barrier engine over a generic BarrierProblem
(linear rows, optional epigraph rows, linear or quadratic objective, linear
equalities). Each outer iteration centres t*f0 + F with equality-constrained
Newton steps and a backtracking line search, then multiplies t by mu. A
phase-I problem on the same engine provides the strictly feasible start.

Algorithm outline:
    1. Phase-I: minimum-norm w~ for B w~ = b, then min s s.t. A w~ + s >= a
    2. (t0, lambda0) by least squares on the centring condition
    3. Repeat: centre (Newton + backtracking until kappa <= 2*eps2),
       stop when m/t <= eps1, else t <- mu*t
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError

from assembly import ConstraintSystem, complexify, stack
from config import SolverConfig
from constants import (
    SOLVER_DIRECTION_TOL, SOLVER_EPS0_LADDER, SOLVER_EQUALITY_TOL, SOLVER_MIN_STEP,
    SOLVER_POLISH_KAPPA, SOLVER_POLISH_STEPS, PHASE1_EPS2,
    PHASE1_EPS, PHASE1_BOX_SCALE, PHASE1_EQUALITY_TOL, DesignKind, SolveStatus, StepMode
)

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Unrecoverable linear-algebra breakdown."""


class TraceRow(NamedTuple):
    """One accepted (or terminal) Newton iteration."""
    kind: str
    outer: int
    inner: int
    t: float
    kappa: float
    objective: float
    min_slack: float
    alpha: float

# ============================================================================
# BARRIER PROBLEM
# ============================================================================

@dataclass
class BarrierProblem:
    """
    min c^T x + x^T diag(quad) x
    s.t. G x >= h,  E x = e,
         x[z] - x[k]^2 - x[nt+k]^2 > 0 for k < epi_nt

    Attributes:
        G, h: Linear inequality rows
        E, e: Equality rows
        c: Linear objective
        quad: Diagonal of the quadratic objective (0/1 mask)
        epi_nt: Number of epigraph rows (0 disables them)
        z_index: Position of the epigraph variable
    """
    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    e: np.ndarray
    c: np.ndarray
    quad: np.ndarray
    epi_nt: int = 0
    z_index: int = -1

    @property
    def n(self) -> int:
        return self.c.size

    @cached_property
    def basis(self) -> np.ndarray:
        """Orthonormal basis of null(E), shared by every Newton step."""
        return null_basis(self.E, self.n)

    @property
    def barrier_count(self) -> int:
        return self.G.shape[0] + self.epi_nt

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + x @ (self.quad * x))

    def objective_grad(self, x: np.ndarray) -> np.ndarray:
        return self.c + 2.0 * self.quad * x

    def slacks(self, x: np.ndarray) -> np.ndarray:
        return self.G @ x - self.h

    def epi_slacks(self, x: np.ndarray) -> np.ndarray:
        k = self.epi_nt
        if k == 0:
            return np.zeros(0)
        return x[self.z_index] - x[:k] ** 2 - x[k:2 * k] ** 2

    def min_slack(self, x: np.ndarray) -> float:
        both = np.concatenate([self.slacks(x), self.epi_slacks(x)])
        return float(both.min()) if both.size else math.inf

    def interior(self, x: np.ndarray) -> bool:
        return self.min_slack(x) > 0.0

    def _epi_rows(self, x: np.ndarray) -> np.ndarray:
        """Rows g_k = [2 E_k w~; -1] of the epigraph barrier gradients."""
        k = self.epi_nt
        g = np.zeros((k, self.n))
        idx = np.arange(k)
        g[idx, idx] = 2.0 * x[:k]
        g[idx, k + idx] = 2.0 * x[k:2 * k]
        g[:, self.z_index] = -1.0
        return g

    def barrier(self, x: np.ndarray) -> float:
        """F(x); +inf outside the strict interior."""
        s = self.slacks(x)
        u = self.epi_slacks(x)
        if np.any(s <= 0) or np.any(u <= 0):
            return math.inf
        return float(-np.sum(np.log(s)) - np.sum(np.log(u)))

    def value(self, x: np.ndarray, t: float) -> float:
        """t*f0(x) + F(x)."""
        return t * self.objective(x) + self.barrier(x)

    def gradient(self, x: np.ndarray, t: float) -> np.ndarray:
        grad = t * self.objective_grad(x)
        if self.G.shape[0]:
            grad -= self.G.T @ (1.0 / self.slacks(x))
        if self.epi_nt:
            grad += self._epi_rows(x).T @ (1.0 / self.epi_slacks(x))
        return grad

    def hessian(self, x: np.ndarray, t: float) -> np.ndarray:
        hess = np.diag(2.0 * t * self.quad)
        if self.G.shape[0]:
            inv_s = 1.0 / self.slacks(x)
            hess += (self.G * inv_s[:, None] ** 2).T @ self.G
        if self.epi_nt:
            k = self.epi_nt
            u = self.epi_slacks(x)
            g = self._epi_rows(x)
            hess += (g / u[:, None] ** 2).T @ g
            diag = np.zeros(self.n)
            diag[:k] = 2.0 / u
            diag[k:2 * k] = 2.0 / u
            hess += np.diag(diag)
        return hess

    def blocks(self) -> List[slice]:
        """Index blocks (w~, and z when present) for normalised steps."""
        if self.epi_nt:
            return [slice(0, 2 * self.epi_nt), slice(self.z_index, self.z_index + 1)]
        return [slice(0, self.n)]


def total_power_problem(system: ConstraintSystem) -> BarrierProblem:
    n = system.n
    return BarrierProblem(
        G=system.A, h=system.a, E=system.B, e=system.b,
        c=np.zeros(n), quad=np.ones(n),
    )


def peak_power_problem(system: ConstraintSystem) -> BarrierProblem:
    n = system.n
    c = np.zeros(n + 1)
    c[n] = 1.0
    return BarrierProblem(
        G=np.hstack([system.A, np.zeros((system.r_a, 1))]), h=system.a,
        E=np.hstack([system.B, np.zeros((system.r_b, 1))]), e=system.b,
        c=c, quad=np.zeros(n + 1), epi_nt=system.nt, z_index=n,
    )


def _phase1_problem(system: ConstraintSystem, box: float) -> BarrierProblem:
    """min s s.t. A w~ + s >= a, |w~_i| <= box, B w~ = b over x = [w~; s]."""
    n = system.n
    eye = np.eye(n)
    G = np.vstack([
        np.hstack([system.A, np.ones((system.r_a, 1))]),
        np.hstack([eye, np.zeros((n, 1))]),
        np.hstack([-eye, np.zeros((n, 1))]),
    ])
    h = np.concatenate([system.a, np.full(2 * n, -box)])
    c = np.zeros(n + 1)
    c[n] = 1.0
    return BarrierProblem(
        G=G, h=h, E=np.hstack([system.B, np.zeros((system.r_b, 1))]), e=system.b,
        c=c, quad=np.zeros(n + 1),
    )

# ============================================================================
# SOLUTION
# ============================================================================

@dataclass(frozen=True)
class Solution:
    """
    Result of one design solve.

    `z` is max_k |w_k|^2 of the returned w for both kinds; for the peak kind
    it is also the objective.
    """
    kind: DesignKind
    status: SolveStatus
    w: np.ndarray
    z: float
    objective: float
    outer_iters: int = 0
    inner_iters: int = 0
    t: float = math.nan
    lambda_ineq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    nu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kkt_stationarity: float = math.nan
    kkt_feasibility: float = math.nan
    kkt_complementarity: float = math.nan
    path: Tuple[float, ...] = ()
    trace: Tuple[TraceRow, ...] = ()

    @property
    def optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    @property
    def wt(self) -> np.ndarray:
        return stack(self.w)

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))

    @property
    def peak_power(self) -> float:
        return float(np.max(np.abs(self.w) ** 2)) if self.w.size else 0.0


def _infeasible(system: ConstraintSystem, kind: DesignKind,
                trace: Tuple[TraceRow, ...] = ()) -> Solution:
    return Solution(
        kind=kind, status=SolveStatus.INFEASIBLE, w=np.zeros(system.nt, dtype=complex),
        z=math.inf, objective=math.inf, trace=trace,
    )


@dataclass(frozen=True)
class Phase1Result:
    """Strictly feasible start, or the certificate that none exists."""
    feasible: bool
    wt: np.ndarray
    z: float
    slack: float        # Final phase-I s; s >= 0 certifies infeasibility
    iterations: int
    trace: Tuple[TraceRow, ...] = ()

# ============================================================================
# NEWTON MACHINERY
# ============================================================================

class NewtonStep(NamedTuple):
    d: np.ndarray
    lam: np.ndarray
    kappa: float
    grad: np.ndarray
    eps0: float


def null_basis(E: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis Z of null(E); the identity when there are no rows."""
    if E.shape[0] == 0:
        return np.eye(n)
    return scipy.linalg.null_space(E)


def _reduced_solve(reduced: np.ndarray, rhs: np.ndarray, ladder: List[float],
                   scale: float) -> Tuple[Optional[np.ndarray], float]:
    """Cholesky solve of the reduced system along the eps0 ladder; None if every rung fails."""
    k = reduced.shape[0]
    if k == 0:
        return np.zeros(0), ladder[0]
    for reg in ladder:
        try:
            factor = scipy.linalg.cho_factor(reduced + reg * scale * np.eye(k))
            v = scipy.linalg.cho_solve(factor, rhs)
        except LinAlgError as e:
            logger.debug(f"Reduced KKT factorization failed at eps0={reg:g}: {e}")
            continue
        if np.all(np.isfinite(v)):
            return v, reg
    return None, ladder[-1]


def _solve_kkt(hess: np.ndarray, E: np.ndarray, rhs: np.ndarray, eps0: float,
               basis: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """
    Solve [[H + eps0*s*I, E^T], [E, 0]] [d; lam] = [g; r], s = max(1, max diag H).

    Null-space method: d = d_r + Z v, where d_r is the minimum-norm solution
    of E d = r and Z spans null(E), so E d = r holds to roundoff however badly
    H is scaled. The reduced system Z^T H Z v = Z^T (g - H d_r) is factored by
    Cholesky along the eps0 ladder, with least squares as the last resort.
    lam then solves E^T lam = g - H d in least squares.
    """
    n, p = hess.shape[0], E.shape[0]
    g, r = rhs[:n], rhs[n:]
    Z = null_basis(E, n) if basis is None else basis
    d_r = scipy.linalg.lstsq(E, r, cond=None)[0] if p else np.zeros(n)
    scale = max(1.0, float(np.max(np.abs(np.diag(hess))))) if n else 1.0
    reduced = Z.T @ hess @ Z
    reduced_rhs = Z.T @ (g - hess @ d_r)
    ladder = [eps0] + [e for e in SOLVER_EPS0_LADDER if e > eps0]

    v, reg = _reduced_solve(reduced, reduced_rhs, ladder, scale)
    if v is None:
        reg = ladder[-1]
        v = scipy.linalg.lstsq(reduced + reg * scale * np.eye(Z.shape[1]), reduced_rhs,
                               cond=None)[0]
        logger.warning(f"KKT solve fell back to least squares (eps0={reg:g})")

    d = d_r + Z @ v
    lam = np.zeros(0)
    if p:
        lam = scipy.linalg.lstsq(E.T, g - hess @ d - reg * scale * d, cond=None)[0]
    sol = np.concatenate([d, lam])
    if not np.all(np.isfinite(sol)):
        raise SolverError("KKT system is singular after regularization")
    return sol, reg


def newton_direction(problem: BarrierProblem, x: np.ndarray, t: float,
                     cfg: SolverConfig) -> NewtonStep:
    """
    Newton step for t*f0 + F subject to E dx = 0.

    Returns the direction, the equality multipliers of the Newton system and
    the Newton decrement kappa = d^T H d (H unregularised).
    """
    grad = problem.gradient(x, t)
    hess = problem.hessian(x, t)
    n = problem.n
    E = problem.E
    rhs = np.concatenate([-grad, np.zeros(E.shape[0])])
    sol, eps0 = _solve_kkt(hess, E, rhs, cfg.eps0, problem.basis)
    d = sol[:n]
    if E.shape[0]:
        drift = E @ d
        if float(np.max(np.abs(drift))) > SOLVER_DIRECTION_TOL * max(1.0, float(np.max(np.abs(d)))):
            logger.debug("Newton direction left null(E); projecting it back")
            d = d - scipy.linalg.lstsq(E, drift, cond=None)[0]
    return NewtonStep(d=d, lam=sol[n:], kappa=newton_decrement(d, hess), grad=grad, eps0=eps0)


def newton_decrement(d: np.ndarray, hess: np.ndarray) -> float:
    """kappa = d^T H d, clipped at 0 against roundoff."""
    return max(0.0, float(d @ hess @ d))


def backtrack(problem: BarrierProblem, x: np.ndarray, t: float, d: np.ndarray,
              grad: np.ndarray, cfg: SolverConfig) -> float:
    """
    Largest alpha = beta^m keeping x + alpha*d strictly feasible and meeting
    the Armijo condition; 0.0 when alpha underflows.
    """
    alpha = 1.0
    while not problem.interior(x + alpha * d):
        alpha *= cfg.bt_beta
        if alpha < SOLVER_MIN_STEP:
            return 0.0

    f0 = problem.value(x, t)
    slope = float(grad @ d)
    allowance = 64.0 * np.finfo(float).eps * max(1.0, abs(f0))  # roundoff
    while problem.value(x + alpha * d, t) > f0 + cfg.bt_alpha * alpha * slope + allowance:
        alpha *= cfg.bt_beta
        if alpha < SOLVER_MIN_STEP:
            return 0.0
    return alpha


def _normalized(problem: BarrierProblem, step: NewtonStep) -> np.ndarray:
    """Per-block unit direction (w and z normalised separately)."""
    d = step.d.copy()
    for block in problem.blocks():
        norm = np.linalg.norm(d[block])
        if norm > 0:
            d[block] /= norm
    if float(step.grad @ d) >= 0.0:
        logger.warning("Normalised step is not a descent direction; using the joint Newton step")
        return step.d
    return d


def init_params(problem: BarrierProblem, x0: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    (t0, lambda0) minimising ||t*grad f0 + grad F + E^T lambda||_2 at x0.

    t0 is clamped to at least 1.
    """
    grad_f0 = problem.objective_grad(x0)
    grad_barrier = problem.gradient(x0, 0.0)
    M = np.hstack([grad_f0[:, None], problem.E.T])
    coef = scipy.linalg.lstsq(M, -grad_barrier)[0]
    t0 = float(coef[0]) if np.isfinite(coef[0]) else 1.0
    return max(1.0, t0), coef[1:]

# ============================================================================
# PATH FOLLOWING ENGINE
# ============================================================================

@dataclass
class _PathResult:
    x: np.ndarray
    t: float
    status: SolveStatus
    outer: int
    inner: int
    lam: np.ndarray
    path: List[float]
    trace: List[TraceRow]
    reason: Optional[str] = None


# monitor(x, t, kappa): kappa is the decrement at which centring ended, None
# mid-centring or when centring stopped short (stalled line search, inner cap)
Monitor = Callable[[np.ndarray, float, Optional[float]], Optional[str]]


def _path_following(problem: BarrierProblem, x0: np.ndarray, cfg: SolverConfig,
                    label: str, monitor: Optional[Monitor] = None,
                    polish: bool = False) -> _PathResult:
    """
    Barrier method from a strictly feasible x0.

    `monitor(x, t, kappa)` may end the run early by returning a reason.
    With `polish`, the last centring continues until kappa is negligible.
    """
    t, _ = init_params(problem, x0)
    x = x0.copy()
    m = problem.barrier_count
    lam = np.zeros(problem.E.shape[0])
    path: List[float] = []
    trace: List[TraceRow] = []
    outer = inner_total = 0

    def _record(inner: int, kappa: float, alpha: float):
        if cfg.trace:
            trace.append(TraceRow(label, outer, inner, t, kappa,
                                  problem.objective(x), problem.min_slack(x), alpha))

    while True:
        outer += 1
        centred_at: Optional[float] = None
        for inner in range(1, cfg.max_inner + 1):
            step = newton_direction(problem, x, t, cfg)
            lam = step.lam
            if step.kappa <= 2.0 * cfg.eps2:
                _record(inner, step.kappa, 0.0)
                centred_at = step.kappa
                break
            d = step.d
            if cfg.step_mode == StepMode.BLOCK_NORMALIZED:
                d = _normalized(problem, step)
            alpha = backtrack(problem, x, t, d, step.grad, cfg)
            if alpha == 0.0:
                logger.debug(f"{label}: line search stalled at t={t:.3g}")
                _record(inner, step.kappa, 0.0)
                break
            x = x + alpha * d
            inner_total += 1
            _record(inner, step.kappa, alpha)
            if monitor is not None:
                reason = monitor(x, t, None)
                if reason:
                    return _PathResult(x, t, SolveStatus.OPTIMAL, outer, inner_total,
                                       lam, path, trace, reason)
        else:
            logger.debug(f"{label}: centring hit {cfg.max_inner} inner iterations at t={t:.3g}")

        path.append(problem.objective(x))
        logger.debug(f"{label}: outer {outer}, t={t:.4g}, objective={path[-1]:.8g}, "
                     f"gap={m / t:.3g}")
        if monitor is not None:
            reason = monitor(x, t, centred_at)
            if reason:
                return _PathResult(x, t, SolveStatus.OPTIMAL, outer, inner_total,
                                   lam, path, trace, reason)
        if m == 0 or m / t <= cfg.eps1:
            if polish and m:
                # Re-centre at the final t so that 1/(t*slack) are accurate duals
                for inner in range(cfg.max_inner + 1, cfg.max_inner + 1 + SOLVER_POLISH_STEPS):
                    step = newton_direction(problem, x, t, cfg)
                    lam = step.lam
                    if step.kappa <= SOLVER_POLISH_KAPPA:
                        break
                    alpha = backtrack(problem, x, t, step.d, step.grad, cfg)
                    if alpha == 0.0:
                        break
                    x = x + alpha * step.d
                    inner_total += 1
                    _record(inner, step.kappa, alpha)
            return _PathResult(x, t, SolveStatus.OPTIMAL, outer, inner_total, lam, path, trace)
        if outer >= cfg.max_outer:
            logger.warning(f"{label}: stopped at {cfg.max_outer} outer iterations, gap={m / t:.3g}")
            return _PathResult(x, t, SolveStatus.MAX_ITERS, outer, inner_total, lam, path, trace)
        t *= cfg.mu

# ============================================================================
# PHASE I
# ============================================================================

def _pull_back(system: ConstraintSystem, w_start: np.ndarray, w_found: np.ndarray) -> np.ndarray:
    """
    Move the phase-I point back along the segment towards the minimum-norm
    start, stopping at twice the parameter where the last row turns strictly
    satisfied. Equalities hold along the whole segment.
    """
    s0 = system.slack(w_start)
    s1 = system.slack(w_found)
    violated = s0 <= 0
    if not np.any(violated):
        return w_found
    theta = float(np.max(-s0[violated] / (s1[violated] - s0[violated])))
    theta = min(1.0, 2.0 * theta) if theta > 0 else min(1.0, 1e-6)
    w = w_start + theta * (w_found - w_start)
    return w if np.all(system.slack(w) > 0) else w_found


def phase1(system: ConstraintSystem, kind: DesignKind = DesignKind.TOTAL,
           cfg: Optional[SolverConfig] = None) -> Phase1Result:
    """
    Strictly feasible (w~0, z0), or an infeasibility certificate.

    Starts from the minimum-norm solution of B w~ = b; when that is not
    strictly feasible, minimises s over A w~ + s >= a (boxed) until s < 0.
    """
    cfg = cfg or SolverConfig()
    n = system.n

    if system.r_b:
        w0 = scipy.linalg.lstsq(system.B, system.b)[0]
        residual = float(np.max(np.abs(system.B @ w0 - system.b)))
        if residual > PHASE1_EQUALITY_TOL * (1.0 + float(np.max(np.abs(system.b)))):
            logger.debug(f"Phase-I: equalities inconsistent (residual {residual:.3g})")
            return Phase1Result(False, w0, math.inf, math.inf, 0)
    else:
        w0 = np.zeros(n)

    def _start(w: np.ndarray, slack: float, iters: int, trace=()) -> Phase1Result:
        z0 = 0.0
        if kind == DesignKind.PEAK:
            q_max = float(np.max(w[:system.nt] ** 2 + w[system.nt:] ** 2))
            z0 = q_max + 0.5 * max(q_max, 1.0)
        return Phase1Result(True, w, z0, slack, iters, tuple(trace))

    if system.r_a == 0 or float(np.min(system.slack(w0))) > 0:
        return _start(w0, -float(np.min(system.slack(w0))) if system.r_a else -math.inf, 0)

    violation = float(np.max(system.a - system.A @ w0))
    box = PHASE1_BOX_SCALE * (1.0 + max(float(np.max(np.abs(w0))),
                                        float(np.max(np.abs(system.a))),
                                        float(np.max(np.abs(system.b))) if system.r_b else 0.0))
    problem = _phase1_problem(system, box)
    x0 = np.concatenate([w0, [max(0.0, violation) + 1.0]])
    m = problem.barrier_count

    def _monitor(x: np.ndarray, t: float, kappa: Optional[float]) -> Optional[str]:
        if x[n] < 0:
            return "feasible"
        # Near the centre |s - s*(t)| <= 2 sqrt(m kappa) / t, and s*(t) - m/t
        # bounds the optimal slack from below.
        if kappa is not None and x[n] - (m + 2.0 * math.sqrt(m * kappa)) / t > 0:
            return "infeasible"
        return None

    p1_cfg = replace(cfg, eps1=PHASE1_EPS, eps2=PHASE1_EPS2, step_mode=StepMode.JOINT_NEWTON)
    result = _path_following(problem, x0, p1_cfg, "phase1", _monitor)
    s_final = float(result.x[n])
    if result.reason == "feasible":
        w = _pull_back(system, w0, result.x[:n])
        logger.debug(f"Phase-I: strictly feasible after {result.inner} steps (s={s_final:.3g})")
        return _start(w, s_final, result.inner, result.trace)

    if result.reason == "infeasible":
        logger.debug(f"Phase-I: infeasible, s={s_final:.3g} after {result.inner} steps")
    else:
        logger.warning(f"Phase-I: no strictly feasible point and no certificate "
                       f"(s={s_final:.3g}, {result.status.value}); treating the frame as infeasible")
    return Phase1Result(False, result.x[:n], math.inf, s_final, result.inner, tuple(result.trace))

# ============================================================================
# DESIGN SOLVES
# ============================================================================

def outer_loop(system: ConstraintSystem, kind: DesignKind,
               cfg: Optional[SolverConfig] = None) -> Solution:
    """Phase-I followed by the path-following solve of one design kind."""
    cfg = cfg or SolverConfig()
    start = phase1(system, kind, cfg)
    if not start.feasible:
        return _infeasible(system, kind, start.trace)

    if kind == DesignKind.TOTAL:
        problem = total_power_problem(system)
        x0 = start.wt.copy()
    else:
        problem = peak_power_problem(system)
        x0 = np.concatenate([start.wt, [start.z]])

    result = _path_following(problem, x0, cfg, kind.value, polish=True)
    n = system.n
    wt = result.x[:n]
    w = complexify(wt)
    q = np.abs(w) ** 2
    z = float(np.max(q))
    t = result.t

    lambda_ineq = 1.0 / (t * system.slack(wt)) if system.r_a else np.zeros(0)
    nu = 1.0 / (t * problem.epi_slacks(result.x)) if kind == DesignKind.PEAK else np.zeros(0)
    objective = float(wt @ wt) if kind == DesignKind.TOTAL else z

    status = result.status
    tol = SOLVER_EQUALITY_TOL * (1.0 + max(_max_abs(system.a), _max_abs(system.b)))
    if status == SolveStatus.OPTIMAL and not system.satisfied(wt, tol):
        logger.warning(f"{kind.value}: path end violates the constraints by more than "
                       f"{tol:.3g}; not reporting it as optimal")
        status = SolveStatus.MAX_ITERS

    sol = Solution(
        kind=kind, status=status, w=w, z=z, objective=objective,
        outer_iters=result.outer, inner_iters=result.inner, t=t,
        lambda_ineq=lambda_ineq, nu=nu, eq_multipliers=result.lam / t,
        path=tuple(result.path), trace=tuple(start.trace) + tuple(result.trace),
    )
    stationarity, feasibility, complementarity = kkt_residual(sol, system, kind)
    return replace(sol, kkt_stationarity=stationarity, kkt_feasibility=feasibility,
                   kkt_complementarity=complementarity)


def _max_abs(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def solve_total_power(system: ConstraintSystem, cfg: Optional[SolverConfig] = None) -> Solution:
    """min ||w||^2 over the frame's regions."""
    return outer_loop(system, DesignKind.TOTAL, cfg)


def solve_peak_power(system: ConstraintSystem, cfg: Optional[SolverConfig] = None) -> Solution:
    """min max_k |w_k|^2 over the frame's regions (epigraph form)."""
    return outer_loop(system, DesignKind.PEAK, cfg)


def solve(system: ConstraintSystem, kind: DesignKind,
          cfg: Optional[SolverConfig] = None) -> Solution:
    return outer_loop(system, kind, cfg)

# ============================================================================
# KKT CHECKS AND COMPARISON
# ============================================================================

def kkt_residual(sol: Solution, system: ConstraintSystem,
                 kind: DesignKind) -> Tuple[float, float, float]:
    """
    (stationarity, feasibility, complementarity) of a solution with its duals.

    Stationarity refits the equality multipliers by least squares; it is the
    infinity norm of the Lagrangian gradient. Complementarity is
    sum(lambda*slack) + sum(nu*u).
    """
    wt = sol.wt
    nt = system.nt
    q = wt[:nt] ** 2 + wt[nt:] ** 2
    lam = np.asarray(sol.lambda_ineq, dtype=float)
    slack = system.slack(wt) if system.r_a else np.zeros(0)

    if kind == DesignKind.TOTAL:
        r = 2.0 * wt
        if system.r_a:
            r = r - system.A.T @ lam
        E = system.B
        u = np.zeros(0)
        nu = np.zeros(0)
    else:
        nu = np.asarray(sol.nu, dtype=float)
        u = sol.z - q
        r = np.zeros(2 * nt + 1)
        r[-1] = 1.0
        if system.r_a:
            r[:2 * nt] -= system.A.T @ lam
        # -nu_k * grad(u_k), grad(u_k) = [-2 E_k w~; 1]
        r[:nt] += 2.0 * nu * wt[:nt]
        r[nt:2 * nt] += 2.0 * nu * wt[nt:]
        r[-1] -= float(np.sum(nu))
        E = np.hstack([system.B, np.zeros((system.r_b, 1))])

    if E.shape[0]:
        mult = scipy.linalg.lstsq(E.T, -r)[0]
        r = r + E.T @ mult
    stationarity = float(np.max(np.abs(r))) if r.size else 0.0

    parts = [0.0]
    if system.r_a:
        parts.append(float(np.max(-slack)))
    if system.r_b:
        parts.append(float(np.max(np.abs(system.B @ wt - system.b))))
    if kind == DesignKind.PEAK:
        parts.append(float(np.max(q - sol.z)))
    feasibility = max(0.0, max(parts))

    complementarity = float(lam @ slack) if lam.size else 0.0
    if nu.size:
        complementarity += float(nu @ u)
    return stationarity, feasibility, complementarity


def deviation(sol: Solution, ref: Solution) -> Tuple[float, float]:
    """
    (relative z deviation, relative w deviation) of `sol` from `ref`.
    """
    w_norm = float(np.linalg.norm(ref.w))
    dw = float(np.linalg.norm(sol.w - ref.w))
    rel_w = dw / w_norm if w_norm > 0 else dw
    rel_z = abs(sol.z - ref.z) / abs(ref.z) if ref.z != 0 else abs(sol.z)
    return rel_z, rel_w
