"""
src/constants.py

Global constants and configuration defaults for the directional-modulation
precoding simulator.
"""

import math
from enum import Enum, IntEnum

# ============================================================================
# CONSTELLATIONS
# ============================================================================

SUPPORTED_ORDERS = (4, 8, 16, 32)
LATTICE_HALF_SPACING = 1            # Odd-integer lattice, adjacent points 2 apart
MIN_POINT_DISTANCE = 2.0 * LATTICE_HALF_SPACING

# 32-QAM wedges (first quadrant), anchored at 5+3i and 3+5i
WEDGE_FLOOR = 3.0                   # Multiplies sqrt(gamma)
WEDGE_OFFSET = 2.0                  # Multiplies sqrt(gamma)

# ============================================================================
# INTERIOR POINT SOLVER
# ============================================================================

SOLVER_MU = 5.0                     # Barrier multiplier per outer iteration
SOLVER_EPS1 = 6e-2                  # Outer duality-gap tolerance
SOLVER_EPS2 = 6e-2                  # Newton-decrement tolerance
SOLVER_EPS0 = 0.0                   # Initial Hessian regularisation
SOLVER_EPS0_LADDER = (1e-10, 1e-8, 1e-6)
SOLVER_BT_ALPHA = 0.01              # Armijo fraction
SOLVER_BT_BETA = 0.5                # Backtracking shrink factor
SOLVER_MAX_OUTER = 60
SOLVER_MAX_INNER = 100
SOLVER_MIN_STEP = 1e-16             # Below this the line search has stalled
SOLVER_POLISH_KAPPA = 1e-18         # Final re-centring target for the dual estimates
SOLVER_POLISH_STEPS = 20
SOLVER_DIRECTION_TOL = 1e-12        # max|E d| relative to max|d| before re-projection
SOLVER_EQUALITY_TOL = 1e-9          # max|B w~ - b| (relative) required of an optimal point

# Tight tolerances used by oracle comparisons
TIGHT_EPS = 1e-6
TIGHT_MU = 10.0

# Phase-I
PHASE1_EPS = 1e-9                   # Phase-I duality-gap tolerance
PHASE1_EPS2 = 1e-10                 # Centring tolerance before a certificate is trusted
PHASE1_BOX_SCALE = 1e6              # Box |w_i| <= R keeps the auxiliary problem bounded
PHASE1_EQUALITY_TOL = 1e-9

# Active-set oracle
ORACLE_MAX_CONSTRAINTS = 16         # Enumerated linear rows (total-power kind)
ORACLE_MAX_PEAK_CONSTRAINTS = 16    # Linear rows + amplifiers (peak kind)
ORACLE_FEAS_TOL = 1e-9
ORACLE_DUAL_TOL = 1e-9

# ============================================================================
# LINK SIMULATION
# ============================================================================

NOISE_VARIANCE = 1.0                # sigma^2 at every receive antenna
DEFAULT_TRIALS = 100                # Channel realisations
DEFAULT_FRAMES_PER_CHANNEL = 100    # Symbol frames per channel
DEFAULT_SEED = 42
ZF_MAX_CONDITION = 1e12
CI_Z_SCORE = 1.96                   # 95% normal approximation

# ============================================================================
# OUTPUT
# ============================================================================

CSV_SIGNIFICANT_DIGITS = 12
CSV_HEADER = (
    "scenario", "key", "M", "nt", "nr", "snr_db", "d0", "design",
    "avg_total_power", "avg_peak_power", "ser", "ber", "goodput",
    "ci_ser", "infeasible_count",
)
TOOL_NAME = "dmqam-sim"
TOOL_VERSION = "1.0.0"

# ============================================================================
# ENUMS
# ============================================================================

class SetLabel(IntEnum):
    """Partition of a constellation by how its detection region extends."""
    S1 = 1      # Corner/outer: both coordinates free outward
    S2 = 2      # Real part pinned, imaginary part free outward
    S3 = 3      # Imaginary part pinned, real part free outward
    S4 = 4      # Inner point
    S5 = 5      # 32-QAM concave corner, wedge below the diagonal
    S6 = 6      # 32-QAM concave corner, wedge above the diagonal


class ConstraintKind(Enum):
    """Which coordinate a region row acts on."""
    RE_BOUND = "re_bound"
    IM_BOUND = "im_bound"
    RE_PIN = "re_pin"
    IM_PIN = "im_pin"
    RE_LOWER = "re_lower"
    IM_LOWER = "im_lower"
    RE_UPPER = "re_upper"
    IM_UPPER = "im_upper"
    WEDGE_DIFF = "wedge_diff"
    WEDGE_FLOOR = "wedge_floor"


class RegionMode(Enum):
    """Treatment of inner (S4) constellation points."""
    FIXED = "fixed"
    RELAXED = "relaxed"


class DesignKind(Enum):
    """Precoder design objective."""
    TOTAL = "total"
    PEAK = "peak"


class Benchmark(Enum):
    """Reference transmitter evaluated next to the precoder."""
    NONE = "none"
    ZF = "zf"
    GENIE = "genie"


class StepMode(Enum):
    """How a Newton direction is applied in the inner loop."""
    JOINT_NEWTON = "joint_newton"
    BLOCK_NORMALIZED = "block_normalized"


class SolveStatus(Enum):
    """Outcome of a solve."""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERS = "max_iters"

# ============================================================================
# UTILITY FUNCTIONS
# ============================================================================

def decibel_to_linear(db: float) -> float:
    """Convert decibels to linear ratio."""
    return 10.0**(db / 10.0)


def linear_to_decibel(linear: float) -> float:
    """Convert linear ratio to decibels."""
    if linear <= 0:
        return -200.0  # Very negative dB
    return 10.0 * math.log10(linear)


def snr_to_gamma(snr_db: float) -> float:
    """Required amplification gamma = 10^(SNR/10)."""
    return decibel_to_linear(snr_db)


def bits_per_symbol(order: int) -> int:
    """R_s = log2(M) bits per symbol."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(
            f"Unsupported modulation order {order}; supported orders are {SUPPORTED_ORDERS}"
        )
    return int(round(math.log2(order)))
