"""
src/constellation.py

M-QAM Constellations on the Odd-Integer Lattice

Builds the 4/8/16/32-QAM point sets used by the precoder, Gray-labels them,
partitions every point into the sets S1..S6 that decide the shape of its
detection region, and implements the conventional minimum-distance detector
used at each receive antenna.

Point ordering is row-major: imaginary part descending, then real part
ascending.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from constants import (
    SUPPORTED_ORDERS, LATTICE_HALF_SPACING, SetLabel, bits_per_symbol
)

logger = logging.getLogger(__name__)

# ============================================================================
# LATTICE GEOMETRY
# ============================================================================

_STEP = 2 * LATTICE_HALF_SPACING

# Outward concave-corner offsets in the first quadrant, turned by j^k per quadrant
_S5_PROBE = complex(-_STEP, _STEP)
_S6_PROBE = complex(_STEP, -_STEP)


def _lattice_levels(count: int) -> List[int]:
    """Odd levels -(count-1)..(count-1) in steps of 2, ascending."""
    return list(range(-(count - 1), count, 2))


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _rectangular_points(nx: int, ny: int) -> Dict[complex, int]:
    """Rectangular nx-by-ny grid with per-axis reflected Gray labels."""
    bits_y = int(np.log2(ny))
    labels = {}
    for ix, x in enumerate(_lattice_levels(nx)):
        for iy, y in enumerate(_lattice_levels(ny)):
            labels[complex(x, y)] = (_gray(ix) << bits_y) | _gray(iy)
    return labels


# Outer rows of the 4x8 Gray rectangle folded onto the cross's side columns
_CROSS_FOLD = {
    (3, 7): (5, 1), (1, 7): (5, 3),
    (-3, 7): (-5, 1), (-1, 7): (-5, 3),
    (3, -7): (5, -1), (1, -7): (5, -3),
    (-3, -7): (-5, -1), (-1, -7): (-5, -3),
}


def _cross_points() -> Dict[complex, int]:
    """
    32-QAM cross with a quasi-Gray labeling.

    The cross cannot be labeled so that every lattice-adjacent pair differs in
    one bit. We Gray-label a 4x8 rectangle (x in {-3..3}, y in {-7..7}) and fold
    its |y| = 7 rows onto the |x| = 5 side columns; the central 4x6 block keeps
    single-bit adjacency.
    """
    labels = {}
    for point, label in _rectangular_points(4, 8).items():
        key = (int(point.real), int(point.imag))
        if key in _CROSS_FOLD:
            x, y = _CROSS_FOLD[key]
            labels[complex(x, y)] = label
        else:
            labels[point] = label
    return labels


def _labeled_points(order: int) -> Dict[complex, int]:
    if order == 4:
        return _rectangular_points(2, 2)
    if order == 8:
        return _rectangular_points(4, 2)
    if order == 16:
        return _rectangular_points(4, 4)
    return _cross_points()


def quadrant_index(point: complex) -> int:
    """Quadrant of a lattice point: Q1 -> 0, Q2 -> 1, Q3 -> 2, Q4 -> 3."""
    if point.real > 0 and point.imag > 0:
        return 0
    if point.real < 0 and point.imag > 0:
        return 1
    if point.real < 0 and point.imag < 0:
        return 2
    return 3


def _classify_point(point: complex, members: set) -> SetLabel:
    """Set label of one point from its lattice neighbors."""
    sr = int(np.sign(point.real))
    si = int(np.sign(point.imag))
    re_free = complex(point.real + _STEP * sr, point.imag) not in members
    im_free = complex(point.real, point.imag + _STEP * si) not in members

    if re_free and im_free:
        turn = 1j ** quadrant_index(point)
        if point + _S5_PROBE * turn in members:
            return SetLabel.S5
        if point + _S6_PROBE * turn in members:
            return SetLabel.S6
        return SetLabel.S1
    if im_free:
        return SetLabel.S2
    if re_free:
        return SetLabel.S3
    return SetLabel.S4

# ============================================================================
# CONSTELLATION SPEC
# ============================================================================

@dataclass(frozen=True)
class ConstellationSpec:
    """
    Immutable M-QAM constellation.

    Attributes:
        order: Modulation order M
        points: Complex lattice points, shape (M,)
        label_values: Integer Gray labels, shape (M,)
        gray_labels: Gray labels as bit strings of length log2(M)
        set_labels: Region set of every point
    """
    order: int
    points: np.ndarray
    label_values: np.ndarray
    gray_labels: Tuple[str, ...]
    set_labels: Tuple[SetLabel, ...]

    @property
    def bits(self) -> int:
        return bits_per_symbol(self.order)

    def count(self, label: SetLabel) -> int:
        """Number of points in one set."""
        return sum(1 for s in self.set_labels if s == label)

    def indices_of(self, label: SetLabel) -> List[int]:
        return [i for i, s in enumerate(self.set_labels) if s == label]


_CACHE: Dict[int, ConstellationSpec] = {}


def constellation(order: int) -> ConstellationSpec:
    """
    Build (or fetch the cached) constellation for modulation order M.

    Args:
        order: One of 4, 8, 16, 32

    Returns:
        ConstellationSpec with deterministic point ordering

    Raises:
        ValueError: If the order is not supported
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(
            f"Unsupported modulation order {order}; supported orders are "
            f"{', '.join(str(m) for m in SUPPORTED_ORDERS)}"
        )
    if order in _CACHE:
        return _CACHE[order]

    labeled = _labeled_points(order)
    ordered = sorted(labeled, key=lambda p: (-p.imag, p.real))
    members = set(ordered)
    nbits = bits_per_symbol(order)

    spec = ConstellationSpec(
        order=order,
        points=np.array(ordered, dtype=complex),
        label_values=np.array([labeled[p] for p in ordered], dtype=np.int64),
        gray_labels=tuple(format(labeled[p], f"0{nbits}b") for p in ordered),
        set_labels=tuple(_classify_point(p, members) for p in ordered),
    )
    spec.points.setflags(write=False)
    spec.label_values.setflags(write=False)
    _CACHE[order] = spec
    logger.debug(f"Built {order}-QAM: " + ", ".join(
        f"{label.name}={spec.count(label)}" for label in SetLabel))
    return spec


def _check_index(spec: ConstellationSpec, index: int) -> None:
    if not 0 <= index < spec.order:
        raise ValueError(f"Point index {index} out of range for {spec.order}-QAM")


def classify(spec: ConstellationSpec, index: int) -> SetLabel:
    """Set label (S1..S6) of point `index`."""
    _check_index(spec, index)
    return spec.set_labels[index]


def gray_bits(spec: ConstellationSpec, index: int) -> str:
    """Gray label of point `index` as a bit string."""
    _check_index(spec, index)
    return spec.gray_labels[index]


def point_index(spec: ConstellationSpec, point: complex) -> int:
    """Index of an exact lattice point; raises ValueError if absent."""
    hits = np.flatnonzero(spec.points == complex(point))
    if hits.size == 0:
        raise ValueError(f"{point} is not a {spec.order}-QAM point")
    return int(hits[0])


def bit_errors(spec: ConstellationSpec, sent: np.ndarray, detected: np.ndarray) -> int:
    """Total number of differing Gray-label bits between two index arrays."""
    diff = np.bitwise_xor(spec.label_values[np.asarray(sent)],
                          spec.label_values[np.asarray(detected)])
    return int(sum(bin(int(v)).count("1") for v in np.atleast_1d(diff)))

# ============================================================================
# DETECTION
# ============================================================================

def detect_many(spec: ConstellationSpec, received: np.ndarray, gamma: float) -> np.ndarray:
    """
    Minimum-distance detection against the sqrt(gamma)-scaled lattice.

    Ties go to the lowest index.

    Args:
        spec: Constellation
        received: Complex received samples, any shape
        gamma: Amplification factor (> 0)

    Returns:
        Integer index array with the shape of `received`
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    received = np.asarray(received, dtype=complex)
    if not np.all(np.isfinite(received)):
        raise ValueError("received samples must be finite")

    scaled = np.sqrt(gamma) * spec.points
    distances = np.abs(received[..., np.newaxis] - scaled)
    return np.argmin(distances, axis=-1)


def detect(spec: ConstellationSpec, received: complex, gamma: float) -> int:
    """Detect a single received sample; see detect_many."""
    return int(detect_many(spec, np.array([received]), gamma)[0])
