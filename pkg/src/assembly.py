"""
src/assembly.py

Standard-Form Constraint Assembly

Stacks the per-symbol regions of a frame into the real-valued system

    A w~ >= a,   B w~ = b

over w~ = [Re(w); Im(w)] (length 2*Nt). Rows are grouped in fixed blocks by
(set, constraint kind) so the layout is reproducible: fixed mode puts the S4
points in B, relaxed mode moves them to four box rows each in A.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from constants import ConstraintKind, RegionMode, SetLabel
from constellation import constellation
from regions import frame_regions

logger = logging.getLogger(__name__)

# e^{i*k*pi/2}
_QUARTER_TURNS = (1 + 0j, 1j, -1 + 0j, -1j)

A_BLOCK_ORDER = (
    (SetLabel.S1, ConstraintKind.RE_BOUND),
    (SetLabel.S1, ConstraintKind.IM_BOUND),
    (SetLabel.S2, ConstraintKind.IM_BOUND),
    (SetLabel.S3, ConstraintKind.RE_BOUND),
    (SetLabel.S4, ConstraintKind.RE_LOWER),
    (SetLabel.S4, ConstraintKind.IM_LOWER),
    (SetLabel.S4, ConstraintKind.RE_UPPER),
    (SetLabel.S4, ConstraintKind.IM_UPPER),
    (SetLabel.S5, ConstraintKind.WEDGE_DIFF),
    (SetLabel.S5, ConstraintKind.WEDGE_FLOOR),
    (SetLabel.S6, ConstraintKind.WEDGE_DIFF),
    (SetLabel.S6, ConstraintKind.WEDGE_FLOOR),
)

B_BLOCK_ORDER = (
    (SetLabel.S2, ConstraintKind.RE_PIN),
    (SetLabel.S3, ConstraintKind.IM_PIN),
    (SetLabel.S4, ConstraintKind.RE_PIN),
    (SetLabel.S4, ConstraintKind.IM_PIN),
)

_A_RANK: Dict[Tuple[SetLabel, ConstraintKind], int] = {k: i for i, k in enumerate(A_BLOCK_ORDER)}
_B_RANK: Dict[Tuple[SetLabel, ConstraintKind], int] = {k: i for i, k in enumerate(B_BLOCK_ORDER)}


class RowTag(NamedTuple):
    """Provenance of one stacked row."""
    symbol: int         # Receive antenna / frame position n
    label: SetLabel
    kind: ConstraintKind


@dataclass(frozen=True)
class SymbolFrame:
    """
    Symbols sent to the Nr receive antennas in one channel use.

    Attributes:
        order: Modulation order M
        indices: Constellation point index per receive antenna
        gamma: Amplification, 10^(SNR_dB/10)
        mode: Fixed or relaxed handling of inner points
        d0: Relaxed box half-width (relaxed mode only)
    """
    order: int
    indices: Tuple[int, ...]
    gamma: float
    mode: RegionMode = RegionMode.FIXED
    d0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        for i in self.indices:
            if not 0 <= i < self.order:
                raise ValueError(f"Symbol index {i} out of range for {self.order}-QAM")

    @property
    def symbols(self) -> np.ndarray:
        return constellation(self.order).points[list(self.indices)]


@dataclass(frozen=True)
class ConstraintSystem:
    """
    Real-valued standard-form system over w~ = [Re(w); Im(w)].

    Attributes:
        A, a: Inequality rows A w~ >= a
        B, b: Equality rows B w~ = b
        nt: Number of transmit antennas
        a_tags, b_tags: Provenance of each row of A and B
    """
    A: np.ndarray
    a: np.ndarray
    B: np.ndarray
    b: np.ndarray
    nt: int
    a_tags: Tuple[RowTag, ...] = field(default=())
    b_tags: Tuple[RowTag, ...] = field(default=())

    @property
    def r_a(self) -> int:
        return self.A.shape[0]

    @property
    def r_b(self) -> int:
        return self.B.shape[0]

    @property
    def n(self) -> int:
        return 2 * self.nt

    def check_rank(self) -> bool:
        """True when B has full row rank."""
        if self.r_b == 0:
            return True
        return int(np.linalg.matrix_rank(self.B)) == self.r_b

    def slack(self, w) -> np.ndarray:
        """A w~ - a."""
        return self.A @ _as_real(w, self.nt) - self.a

    def satisfied(self, w, tol: float = 1e-9) -> bool:
        """A w~ >= a - tol and |B w~ - b| <= tol elementwise."""
        wt = _as_real(w, self.nt)
        ok_a = self.r_a == 0 or bool(np.all(self.A @ wt - self.a >= -tol))
        ok_b = self.r_b == 0 or bool(np.all(np.abs(self.B @ wt - self.b) <= tol))
        return ok_a and ok_b

    def counts(self) -> Dict[SetLabel, int]:
        """Number of distinct frame symbols per set, reconciled from the row tags."""
        seen = {(tag.symbol, tag.label) for tag in self.a_tags + self.b_tags}
        return {label: sum(1 for _, s in seen if s == label) for label in SetLabel}

# ============================================================================
# REAL/COMPLEX PLUMBING
# ============================================================================

def realify(h_rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Real forms of a complex channel block.

    Ha = [Re H, -Im H] and Hb = [Im H, Re H], so that Ha w~ = Re(H w) and
    Hb w~ = Im(H w).
    """
    h = np.atleast_2d(np.asarray(h_rows, dtype=complex))
    ha = np.hstack([h.real, -h.imag])
    hb = np.hstack([h.imag, h.real])
    return ha, hb


def stack(w: np.ndarray) -> np.ndarray:
    """w -> w~ = [Re(w); Im(w)]."""
    w = np.asarray(w, dtype=complex).ravel()
    return np.concatenate([w.real, w.imag])


def complexify(wt: np.ndarray) -> np.ndarray:
    """w~ -> w; inverse of stack."""
    wt = np.asarray(wt, dtype=float).ravel()
    nt = wt.size // 2
    return wt[:nt] + 1j * wt[nt:]


def _as_real(w, nt: int) -> np.ndarray:
    w = np.asarray(w)
    if np.iscomplexobj(w):
        return stack(w)
    if w.size != 2 * nt:
        raise ValueError(f"Expected {2 * nt} real entries, got {w.size}")
    return w.astype(float).ravel()


def rotate_row(h: np.ndarray, phi: float) -> np.ndarray:
    """h * e^{i*phi} for phi a multiple of pi/2 (exact)."""
    turns = phi / (np.pi / 2)
    k = int(round(turns))
    if abs(turns - k) > 1e-9:
        raise ValueError(f"Rotation {phi} is not a multiple of pi/2")
    return np.asarray(h, dtype=complex) * _QUARTER_TURNS[k % 4]

# ============================================================================
# SYSTEM BUILDER
# ============================================================================

def build_system(frame: SymbolFrame, channel: np.ndarray) -> ConstraintSystem:
    """
    Stack the regions of `frame` over channel H (Nr x Nt).

    Raises:
        ValueError: Symbol/channel count mismatch, or relaxed mode without
            inner points (M = 4 or 8)
    """
    h = np.asarray(channel, dtype=complex)
    if h.ndim != 2:
        raise ValueError(f"Channel must be a matrix, got shape {h.shape}")
    nr, nt = h.shape
    if len(frame.indices) != nr:
        raise ValueError(
            f"Frame carries {len(frame.indices)} symbols but channel has {nr} receive antennas"
        )
    if frame.mode == RegionMode.RELAXED and frame.order in (4, 8):
        raise ValueError(
            f"Relaxed mode needs inner (S4) points; {frame.order}-QAM has none"
        )
    if not np.all(np.isfinite(h)):
        raise ValueError("Channel entries must be finite")

    spec = constellation(frame.order)
    regions = frame_regions(spec, frame.indices, frame.gamma, frame.mode, frame.d0)

    a_rows: List[Tuple[int, int, np.ndarray, float, RowTag]] = []
    b_rows: List[Tuple[int, int, np.ndarray, float, RowTag]] = []
    for n, rc in enumerate(regions):
        ha, hb = realify(h[n] * rc.rotation)
        for row in rc.inequalities:
            tag = RowTag(n, rc.label, row.kind)
            a_rows.append((_A_RANK[(rc.label, row.kind)], n,
                           row.c_re * ha[0] + row.c_im * hb[0], row.rhs, tag))
        for row in rc.equalities:
            tag = RowTag(n, rc.label, row.kind)
            b_rows.append((_B_RANK[(rc.label, row.kind)], n,
                           row.c_re * ha[0] + row.c_im * hb[0], row.rhs, tag))

    a_rows.sort(key=lambda item: (item[0], item[1]))
    b_rows.sort(key=lambda item: (item[0], item[1]))

    def _pack(rows):
        if not rows:
            return np.zeros((0, 2 * nt)), np.zeros(0), ()
        mat = np.vstack([r[2] for r in rows])
        rhs = np.array([r[3] for r in rows], dtype=float)
        return mat, rhs, tuple(r[4] for r in rows)

    A, a, a_tags = _pack(a_rows)
    B, b, b_tags = _pack(b_rows)
    system = ConstraintSystem(A=A, a=a, B=B, b=b, nt=nt, a_tags=a_tags, b_tags=b_tags)
    logger.debug(f"Assembled system: r_A={system.r_a}, r_B={system.r_b}, Nt={nt}")
    return system
