"""
src/oracle.py

Active-Set Reference Solver

Independent verifier for the interior-point solver on small instances.

- Total power: enumerates active subsets of the inequality rows by increasing
  size. For each subset the equality-constrained problem min ||w~||^2 has the
  minimum-norm solution in closed form; the first candidate that is primal
  feasible with non-negative multipliers is the (unique) optimum.
- Peak power: enumerates subsets of the linear rows together with subsets of
  the amplifier (epigraph) rows. The epigraph rows are quadratic, so each
  subset's square KKT system is solved by Gauss-Newton from several starts
  and the candidate is kept only if it is primal feasible with non-negative
  multipliers. Subsets are visited by distance from the total-power active
  set; the problem is convex, so the first certified point is the optimum.
"""

import logging
import math
from itertools import combinations
from typing import Iterator, List, Optional, Tuple

import numpy as np
import scipy.linalg

from assembly import ConstraintSystem, complexify
from constants import (
    ORACLE_MAX_CONSTRAINTS, ORACLE_MAX_PEAK_CONSTRAINTS, ORACLE_FEAS_TOL,
    ORACLE_DUAL_TOL, DesignKind, SolveStatus
)
from solver import Solution, kkt_residual

logger = logging.getLogger(__name__)


def _scale(system: ConstraintSystem) -> float:
    parts = [1.0]
    if system.r_a:
        parts.append(float(np.max(np.abs(system.a))))
    if system.r_b:
        parts.append(float(np.max(np.abs(system.b))))
    return max(parts)


def _finish(system: ConstraintSystem, kind: DesignKind, wt: np.ndarray, lam: np.ndarray,
            nu: np.ndarray, mult: np.ndarray, status: SolveStatus) -> Solution:
    w = complexify(wt)
    z = float(np.max(np.abs(w) ** 2))
    objective = float(wt @ wt) if kind == DesignKind.TOTAL else z
    sol = Solution(kind=kind, status=status, w=w, z=z, objective=objective,
                   lambda_ineq=lam, nu=nu, eq_multipliers=mult)
    stationarity, feasibility, complementarity = kkt_residual(sol, system, kind)
    return Solution(kind=kind, status=status, w=w, z=z, objective=objective,
                    lambda_ineq=lam, nu=nu, eq_multipliers=mult,
                    kkt_stationarity=stationarity, kkt_feasibility=feasibility,
                    kkt_complementarity=complementarity)

# ============================================================================
# TOTAL POWER: ACTIVE-SET ENUMERATION
# ============================================================================

def _total_candidate(system: ConstraintSystem, active: Tuple[int, ...],
                     tol: float) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Minimum-norm point of one active set, or None if not a KKT point."""
    idx = list(active)
    M = np.vstack([system.A[idx], system.B])
    rhs = np.concatenate([system.a[idx], system.b])
    if M.shape[0] == 0:
        wt = np.zeros(system.n)
    else:
        wt = scipy.linalg.lstsq(M, rhs)[0]
        if np.max(np.abs(M @ wt - rhs)) > tol:
            return None
    if system.r_a and np.min(system.slack(wt)) < -tol:
        return None

    lam = np.zeros(system.r_a)
    mult = np.zeros(system.r_b)
    if M.shape[0]:
        # 2 w~ - A_S^T lam + B^T mult = 0
        coeffs = np.hstack([system.A[idx].T, -system.B.T])
        duals = scipy.linalg.lstsq(coeffs, 2.0 * wt)[0]
        lam_s = duals[:len(idx)]
        if lam_s.size and np.min(lam_s) < -ORACLE_DUAL_TOL * (1.0 + np.max(np.abs(lam_s))):
            return None
        lam[idx] = np.maximum(lam_s, 0.0)
        mult = duals[len(idx):]
    return wt, lam, mult


def _total_oracle(system: ConstraintSystem) -> Solution:
    if system.r_a > ORACLE_MAX_CONSTRAINTS:
        raise ValueError(
            f"Oracle enumeration bound exceeded: r_A={system.r_a} > {ORACLE_MAX_CONSTRAINTS}"
        )
    tol = ORACLE_FEAS_TOL * _scale(system)
    rank_b = int(np.linalg.matrix_rank(system.B)) if system.r_b else 0
    max_active = min(system.r_a, system.n - rank_b)

    checked = 0
    for size in range(max_active + 1):
        for active in combinations(range(system.r_a), size):
            checked += 1
            found = _total_candidate(system, active, tol)
            if found is not None:
                wt, lam, mult = found
                logger.debug(f"Total-power oracle: active set {active} after {checked} subsets")
                return _finish(system, DesignKind.TOTAL, wt, lam, np.zeros(0), mult,
                               SolveStatus.OPTIMAL)

    logger.debug(f"Total-power oracle: no KKT point among {checked} subsets")
    return Solution(kind=DesignKind.TOTAL, status=SolveStatus.INFEASIBLE,
                    w=np.zeros(system.nt, dtype=complex), z=math.inf, objective=math.inf)

# ============================================================================
# PEAK POWER: ACTIVE-SET ENUMERATION WITH KKT REFINEMENT
# ============================================================================

def _epi(wt: np.ndarray, nt: int) -> np.ndarray:
    return wt[:nt] ** 2 + wt[nt:] ** 2


def _refine(system: ConstraintSystem, x0: np.ndarray, lin: List[int], epi: List[int],
            iterations: int = 40) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float]:
    """
    Gauss-Newton on the square KKT system of one active set.

    Unknowns: x = [w~; z], lam (active linear rows), nu (active epigraph rows),
    mult (equalities). Returns them with the final residual (inf on breakdown).
    """
    n, nt = system.n, system.nt
    G = np.hstack([system.A, np.zeros((system.r_a, 1))])[lin]
    h = system.a[lin]
    E = np.hstack([system.B, np.zeros((system.r_b, 1))])
    c = np.zeros(n + 1)
    c[n] = 1.0
    na, nb, p = len(lin), len(epi), system.r_b
    epi_idx = np.array(epi, dtype=int)

    def _g(x):
        """Rows g_k = [2 E_k w~; -1] for the active epigraph rows."""
        g = np.zeros((nb, n + 1))
        g[np.arange(nb), epi_idx] = 2.0 * x[epi_idx]
        g[np.arange(nb), nt + epi_idx] = 2.0 * x[nt + epi_idx]
        g[:, n] = -1.0
        return g

    def _residual(v):
        x = v[:n + 1]
        lam, nu, mult = v[n + 1:n + 1 + na], v[n + 1 + na:n + 1 + na + nb], v[n + 1 + na + nb:]
        return np.concatenate([
            c - G.T @ lam + _g(x).T @ nu + E.T @ mult,
            G @ x - h,
            x[n] - _epi(x[:n], nt)[epi_idx],
            E @ x - system.b,
        ])

    # Initial multipliers by least squares on stationarity
    coeffs = np.hstack([-G.T, _g(x0).T, E.T])
    duals = scipy.linalg.lstsq(coeffs, -c)[0] if coeffs.shape[1] else np.zeros(0)
    v = np.concatenate([x0, duals])

    residual = _residual(v)
    for _ in range(iterations):
        if np.max(np.abs(residual)) < 1e-14 * (1.0 + np.max(np.abs(v))):
            break
        x, nu = v[:n + 1], v[n + 1 + na:n + 1 + na + nb]
        hess = np.zeros(n + 1)
        np.add.at(hess, epi_idx, 2.0 * nu)
        np.add.at(hess, nt + epi_idx, 2.0 * nu)
        g = _g(x)
        J = np.zeros((residual.size, n + 1 + na + nb + p))
        J[:n + 1, :n + 1] = np.diag(hess)
        J[:n + 1, n + 1:n + 1 + na] = -G.T
        J[:n + 1, n + 1 + na:n + 1 + na + nb] = g.T
        J[:n + 1, n + 1 + na + nb:] = E.T
        row = n + 1
        J[row:row + na, :n + 1] = G
        row += na
        J[row:row + nb, :n + 1] = -g
        row += nb
        J[row:row + p, :n + 1] = E
        v = v - scipy.linalg.lstsq(J, residual, cond=None)[0]
        residual = _residual(v)
        if not np.all(np.isfinite(residual)):
            return v[:n + 1], np.zeros(na), np.zeros(nb), np.zeros(p), math.inf

    norm = float(np.max(np.abs(residual))) if residual.size else 0.0
    return v[:n + 1], v[n + 1:n + 1 + na], v[n + 1 + na:n + 1 + na + nb], v[n + 1 + na + nb:], norm


def _subsets_by_distance(guess: np.ndarray) -> Iterator[np.ndarray]:
    """Every 0/1 mask over len(guess) items, by Hamming distance from `guess`."""
    size = guess.size
    for distance in range(size + 1):
        for flips in combinations(range(size), distance):
            mask = guess.copy()
            mask[list(flips)] ^= True
            yield mask


def _peak_starts(system: ConstraintSystem, total_wt: np.ndarray, lin: List[int],
                 epi: List[int]) -> List[np.ndarray]:
    """Gauss-Newton starts: the total-power optimum and the minimum-norm point of the active rows."""
    nt = system.nt
    starts = [total_wt]
    M = np.vstack([system.A[lin], system.B])
    if M.shape[0]:
        rhs = np.concatenate([system.a[lin], system.b])
        starts.append(scipy.linalg.lstsq(M, rhs, cond=None)[0])
    return [np.concatenate([wt, [float(np.max(_epi(wt, nt)[epi]))]]) for wt in starts]


def _linear_rows_independent(system: ConstraintSystem, lin: List[int], rank_b: int) -> bool:
    """[A_S; B] has full rank over the active rows and is consistent."""
    if not lin:
        return True
    M = np.vstack([system.A[lin], system.B])
    return int(np.linalg.matrix_rank(M)) == len(lin) + rank_b


def _peak_oracle(system: ConstraintSystem) -> Solution:
    if system.r_a + system.nt > ORACLE_MAX_PEAK_CONSTRAINTS:
        raise ValueError(
            f"Oracle enumeration bound exceeded: r_A + Nt = {system.r_a + system.nt} "
            f"> {ORACLE_MAX_PEAK_CONSTRAINTS}"
        )
    total = _total_oracle(system)
    if not total.optimal:
        return Solution(kind=DesignKind.PEAK, status=SolveStatus.INFEASIBLE,
                        w=total.w, z=math.inf, objective=math.inf)

    n, nt, r_a = system.n, system.nt, system.r_a
    rank_b = int(np.linalg.matrix_rank(system.B)) if system.r_b else 0
    total_wt = total.wt

    # First guess: rows active at the total-power optimum, every amplifier at the peak
    guess = np.concatenate([total.lambda_ineq > 0, np.ones(nt, dtype=bool)])
    checked = 0
    for mask in _subsets_by_distance(guess):
        lin = [int(i) for i in np.flatnonzero(mask[:r_a])]
        epi = [int(k) for k in np.flatnonzero(mask[r_a:])]
        # The optimum saturates some amplifier; an independent active set has at most n+1 rows
        if not epi or len(lin) + len(epi) + rank_b > n + 1:
            continue
        if not _linear_rows_independent(system, lin, rank_b):
            continue
        checked += 1

        best = None
        for x0 in _peak_starts(system, total_wt, lin, epi):
            x, lam_s, nu_s, mult, residual = _refine(system, x0, lin, epi)
            scale = _scale(system) * (1.0 + abs(x[n]))
            if residual > 1e-9 * scale:
                continue
            if not _peak_certified(system, x, lam_s, nu_s, ORACLE_FEAS_TOL * scale):
                continue
            if best is None or x[n] < best[0][n]:
                best = (x, lam_s, nu_s, mult)
        if best is None:
            continue

        x, lam_s, nu_s, mult = best
        lam = np.zeros(r_a)
        lam[lin] = np.maximum(lam_s, 0.0)
        nu = np.zeros(nt)
        nu[epi] = np.maximum(nu_s, 0.0)
        logger.debug(f"Peak-power oracle: {len(lin)} linear and {len(epi)} amplifier rows "
                     f"active after {checked} subsets")
        return _finish(system, DesignKind.PEAK, x[:n], lam, nu, mult, SolveStatus.OPTIMAL)

    logger.warning(f"Peak-power oracle: no KKT point among {checked} subsets")
    return _finish(system, DesignKind.PEAK, total_wt, np.zeros(r_a), np.zeros(nt),
                   np.zeros(system.r_b), SolveStatus.MAX_ITERS)


def _peak_certified(system: ConstraintSystem, x: np.ndarray, lam_s: np.ndarray,
                    nu_s: np.ndarray, tol: float) -> bool:
    """Primal feasibility of every row and non-negative active multipliers."""
    n, nt = system.n, system.nt
    wt = x[:n]
    primal_ok = (
        (not system.r_a or np.min(system.slack(wt)) >= -tol)
        and np.max(_epi(wt, nt)) <= x[n] + tol
        and (not system.r_b or np.max(np.abs(system.B @ wt - system.b)) <= tol)
    )
    duals = np.concatenate([lam_s, nu_s])
    dual_ok = duals.size == 0 or np.min(duals) >= -ORACLE_DUAL_TOL * (1.0 + np.max(np.abs(duals)))
    return bool(primal_ok and dual_ok)


def within_bound(system: ConstraintSystem, kind: DesignKind) -> bool:
    """Whether the oracle accepts the instance."""
    if kind == DesignKind.TOTAL:
        return system.r_a <= ORACLE_MAX_CONSTRAINTS
    return system.r_a + system.nt <= ORACLE_MAX_PEAK_CONSTRAINTS

# ============================================================================
# PUBLIC ENTRY
# ============================================================================

def active_set_oracle(system: ConstraintSystem, kind: DesignKind) -> Solution:
    """
    Reference optimum of one design problem.

    Raises:
        ValueError: The instance exceeds the enumeration bound
    """
    if kind == DesignKind.TOTAL:
        return _total_oracle(system)
    return _peak_oracle(system)
