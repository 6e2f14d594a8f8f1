"""
src/regions.py

Per-Symbol Detection Regions

For one transmitted symbol s and amplification gamma, produces the linear
equalities and inequalities that the induced received value p = h^T w must
satisfy:

- Extended regions (S1/S2/S3 half-planes, S4 pinned point, S5/S6 wedges
  in a rotated frame), which enlarge the conventional decision cell while
  keeping the standard minimum distance to every other symbol.
- Relaxed regions for inner (S4) points: a square of half-width d0 around
  sqrt(gamma)*s.

Every row is (c_re, c_im, rhs) over the rotated value p~ = p * e^{i*phi};
equalities mean c_re*Re(p~) + c_im*Im(p~) = rhs and inequalities mean
c_re*Re(p~) + c_im*Im(p~) >= rhs.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from constants import (
    WEDGE_FLOOR, WEDGE_OFFSET, ConstraintKind, RegionMode, SetLabel
)
from constellation import ConstellationSpec, classify, quadrant_index

logger = logging.getLogger(__name__)

# e^{-i*k*pi/2} for quadrant k, exact
_QUADRANT_TURNS = (1 + 0j, -1j, -1 + 0j, 1j)
_QUADRANT_PHASES = (0.0, -math.pi / 2, math.pi, math.pi / 2)


class RegionRow(NamedTuple):
    """One linear row c_re*Re(p~) + c_im*Im(p~) (= or >=) rhs."""
    c_re: float
    c_im: float
    rhs: float
    kind: ConstraintKind


@dataclass(frozen=True)
class RegionConstraints:
    """
    Linear description of one symbol's region.

    Attributes:
        index: Constellation point index of the symbol
        label: Set of the point
        rotation_phi: Rotation phase in radians, multiple of pi/2 in (-pi, pi]
        rotation: Exact e^{i*rotation_phi}
        equalities: Rows that must hold with equality
        inequalities: Rows in ">= rhs" form
    """
    index: int
    label: SetLabel
    rotation_phi: float
    rotation: complex
    equalities: Tuple[RegionRow, ...]
    inequalities: Tuple[RegionRow, ...]

    @property
    def rows(self) -> Tuple[RegionRow, ...]:
        return self.equalities + self.inequalities

# ============================================================================
# REGION CONSTRUCTION
# ============================================================================

def _check_gamma(gamma: float) -> float:
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be positive and finite, got {gamma}")
    return math.sqrt(gamma)


def extended_region(spec: ConstellationSpec, index: int, gamma: float) -> RegionConstraints:
    """
    Extended detection region of point `index` at amplification gamma.

    Raises:
        ValueError: gamma <= 0 or index out of range
    """
    r = _check_gamma(gamma)
    label = classify(spec, index)
    s = complex(spec.points[index])
    sr, si = s.real, s.imag

    eqs: List[RegionRow] = []
    ineqs: List[RegionRow] = []
    turn = 0

    if label == SetLabel.S1:
        ineqs.append(RegionRow(sr, 0.0, r * sr * sr, ConstraintKind.RE_BOUND))
        ineqs.append(RegionRow(0.0, si, r * si * si, ConstraintKind.IM_BOUND))
    elif label == SetLabel.S2:
        eqs.append(RegionRow(1.0, 0.0, r * sr, ConstraintKind.RE_PIN))
        ineqs.append(RegionRow(0.0, si, r * si * si, ConstraintKind.IM_BOUND))
    elif label == SetLabel.S3:
        ineqs.append(RegionRow(sr, 0.0, r * sr * sr, ConstraintKind.RE_BOUND))
        eqs.append(RegionRow(0.0, 1.0, r * si, ConstraintKind.IM_PIN))
    elif label == SetLabel.S4:
        eqs.append(RegionRow(1.0, 0.0, r * sr, ConstraintKind.RE_PIN))
        eqs.append(RegionRow(0.0, 1.0, r * si, ConstraintKind.IM_PIN))
    elif label == SetLabel.S5:
        # Wedge anchored at 5+3i: Im >= 3r and Re - Im >= 2r
        turn = quadrant_index(s)
        ineqs.append(RegionRow(0.0, 1.0, WEDGE_FLOOR * r, ConstraintKind.WEDGE_FLOOR))
        ineqs.append(RegionRow(1.0, -1.0, WEDGE_OFFSET * r, ConstraintKind.WEDGE_DIFF))
    else:
        # Wedge anchored at 3+5i: Im - Re >= 2r and Re >= 3r
        turn = quadrant_index(s)
        ineqs.append(RegionRow(-1.0, 1.0, WEDGE_OFFSET * r, ConstraintKind.WEDGE_DIFF))
        ineqs.append(RegionRow(1.0, 0.0, WEDGE_FLOOR * r, ConstraintKind.WEDGE_FLOOR))

    return RegionConstraints(
        index=index,
        label=label,
        rotation_phi=_QUADRANT_PHASES[turn],
        rotation=_QUADRANT_TURNS[turn],
        equalities=tuple(eqs),
        inequalities=tuple(ineqs),
    )


def relaxed_region(spec: ConstellationSpec, index: int, gamma: float,
                   d0: float) -> RegionConstraints:
    """
    Square region of half-width d0 around sqrt(gamma)*s for an inner point.

    Raises:
        ValueError: Point is not S4, d0 < 0, or d0 >= sqrt(gamma)
    """
    r = _check_gamma(gamma)
    label = classify(spec, index)
    if label != SetLabel.S4:
        raise ValueError(
            f"Relaxed regions apply to inner (S4) points only; point {index} is {label.name}"
        )
    if d0 < 0:
        raise ValueError(f"d0 must be non-negative, got {d0}")
    if d0 >= r:
        raise ValueError(f"d0 must be below sqrt(gamma)={r:.6g}, got {d0}")

    s = complex(spec.points[index])
    cr, ci = r * s.real, r * s.imag
    ineqs = (
        RegionRow(1.0, 0.0, cr - d0, ConstraintKind.RE_LOWER),
        RegionRow(0.0, 1.0, ci - d0, ConstraintKind.IM_LOWER),
        RegionRow(-1.0, 0.0, -(cr + d0), ConstraintKind.RE_UPPER),
        RegionRow(0.0, -1.0, -(ci + d0), ConstraintKind.IM_UPPER),
    )
    return RegionConstraints(
        index=index,
        label=label,
        rotation_phi=0.0,
        rotation=_QUADRANT_TURNS[0],
        equalities=(),
        inequalities=ineqs,
    )


def frame_regions(spec: ConstellationSpec, indices: Sequence[int], gamma: float,
                  mode: RegionMode = RegionMode.FIXED, d0: float = 0.0) -> List[RegionConstraints]:
    """
    Regions of a whole frame; S4 points get relaxed boxes in relaxed mode.

    A zero-width box (d0 = 0) is emitted as the two pinning equalities.
    """
    regions = []
    for index in indices:
        if mode == RegionMode.RELAXED and d0 > 0 and spec.set_labels[index] == SetLabel.S4:
            regions.append(relaxed_region(spec, index, gamma, d0))
        else:
            regions.append(extended_region(spec, index, gamma))
    return regions

# ============================================================================
# MEMBERSHIP AND GEOMETRY
# ============================================================================

def _row_values(rows: Sequence[RegionRow], q: np.ndarray) -> np.ndarray:
    """Row residuals c.q - rhs, shape (len(rows),) + q.shape."""
    if not rows:
        return np.zeros((0,) + q.shape)
    coeffs = np.array([[row.c_re, row.c_im, row.rhs] for row in rows])
    return (coeffs[:, 0, None] * q.real.ravel() + coeffs[:, 1, None] * q.imag.ravel()
            - coeffs[:, 2, None]).reshape((len(rows),) + q.shape)


def contains_many(rc: RegionConstraints, p: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectorised membership test of received values `p`."""
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    q = np.asarray(p, dtype=complex) * rc.rotation
    ok = np.ones(q.shape, dtype=bool)
    if rc.equalities:
        ok &= np.all(np.abs(_row_values(rc.equalities, q)) <= tol, axis=0)
    if rc.inequalities:
        ok &= np.all(_row_values(rc.inequalities, q) >= -tol, axis=0)
    return ok


def contains(rc: RegionConstraints, p: complex, tol: float = 1e-9) -> bool:
    """True iff p lies in the region (equalities within tol, inequalities within -tol)."""
    return bool(contains_many(rc, np.array([p]), tol)[0])


def region_polygon(rc: RegionConstraints, radius: float) -> List[Tuple[float, float]]:
    """
    Vertices of the region clipped to the square [-radius, radius]^2.

    The result is ordered counter-clockwise around the centroid and degenerates
    to a segment or a point when coordinates are pinned. Empty when the region
    misses the square.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    # Quarter turns map the square onto itself, so clipping happens in the rotated frame
    box = [
        RegionRow(1.0, 0.0, -radius, ConstraintKind.RE_LOWER),
        RegionRow(-1.0, 0.0, -radius, ConstraintKind.RE_UPPER),
        RegionRow(0.0, 1.0, -radius, ConstraintKind.IM_LOWER),
        RegionRow(0.0, -1.0, -radius, ConstraintKind.IM_UPPER),
    ]
    lines = list(rc.rows) + box
    tol = 1e-9 * (1.0 + radius)

    vertices: List[complex] = []
    for first, second in combinations(lines, 2):
        mat = np.array([[first.c_re, first.c_im], [second.c_re, second.c_im]])
        if abs(np.linalg.det(mat)) < 1e-12:
            continue
        x, y = np.linalg.solve(mat, [first.rhs, second.rhs])
        q = complex(x, y)
        inside_box = abs(x) <= radius + tol and abs(y) <= radius + tol
        if inside_box and contains(rc, q * np.conj(rc.rotation), tol):
            if all(abs(q - v) > tol for v in vertices):
                vertices.append(q)

    if not vertices:
        return []
    pts = np.array(vertices) * np.conj(rc.rotation)
    centre = pts.mean()
    order = np.argsort(np.angle(pts - centre))
    return [(float(pts[i].real), float(pts[i].imag)) for i in order]


def sample_region(rc: RegionConstraints, rng: np.random.Generator, count: int,
                  radius: float = 10.0, max_rounds: int = 1000) -> np.ndarray:
    """
    Uniform rejection samples from the region inside [-radius, radius]^2.

    Pinned coordinates are fixed to their equality value.

    Raises:
        ValueError: No samples found within `max_rounds` batches
    """
    pin_re = next((row.rhs / row.c_re for row in rc.equalities if row.c_im == 0.0), None)
    pin_im = next((row.rhs / row.c_im for row in rc.equalities if row.c_re == 0.0), None)

    accepted: List[np.ndarray] = []
    total = 0
    for _ in range(max_rounds):
        batch = max(4 * count, 64)
        re = np.full(batch, pin_re) if pin_re is not None else rng.uniform(-radius, radius, batch)
        im = np.full(batch, pin_im) if pin_im is not None else rng.uniform(-radius, radius, batch)
        p = (re + 1j * im) * np.conj(rc.rotation)
        keep = p[contains_many(rc, p, tol=1e-12)]
        accepted.append(keep)
        total += keep.size
        if total >= count:
            return np.concatenate(accepted)[:count]
    raise ValueError(
        f"Region of point {rc.index} ({rc.label.name}) has no samples within radius {radius}"
    )
