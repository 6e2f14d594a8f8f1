"""
tests/test_regions.py

Test extended and relaxed detection regions.

Validates:
- Row layout per set (S1..S6) and the quadrant rotation
- Membership of the scaled lattice point in its own region
- Minimum distance between sampled points of distinct regions
- Relaxed boxes and their preconditions
- Polygon clipping used by `regions dump`
"""

import math
import pytest
import numpy as np
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from constants import ConstraintKind, RegionMode, SetLabel, SUPPORTED_ORDERS
from constellation import constellation, point_index
from regions import (
    contains, contains_many, extended_region, frame_regions, region_polygon,
    relaxed_region, sample_region
)


class TestExtendedRegions:
    """Test region rows per set."""

    def test_s1_half_planes(self):
        """Corner 3+3i at gamma=4: Re >= 6 and Im >= 6."""
        spec = constellation(16)
        rc = extended_region(spec, point_index(spec, 3 + 3j), 4.0)
        assert rc.label == SetLabel.S1
        assert rc.equalities == ()
        assert contains(rc, 6 + 6j)
        assert contains(rc, 50 + 9j)
        assert not contains(rc, 5.9 + 9j)

    def test_s2_pins_real_part(self):
        """Edge point 1+3i: Re pinned, Im free upwards."""
        spec = constellation(16)
        rc = extended_region(spec, point_index(spec, 1 + 3j), 1.0)
        assert [row.kind for row in rc.equalities] == [ConstraintKind.RE_PIN]
        assert contains(rc, 1 + 7j)
        assert not contains(rc, 1.5 + 7j)
        assert not contains(rc, 1 + 2.5j)

    def test_s3_pins_imaginary_part(self):
        """Edge point -3-1i: Im pinned, Re free leftwards."""
        spec = constellation(16)
        rc = extended_region(spec, point_index(spec, -3 - 1j), 1.0)
        assert rc.label == SetLabel.S3
        assert contains(rc, -10 - 1j)
        assert not contains(rc, -2 - 1j)

    def test_s4_is_a_point(self):
        """Inner points are pinned in both coordinates."""
        spec = constellation(16)
        rc = extended_region(spec, point_index(spec, -1 + 1j), 9.0)
        assert rc.inequalities == ()
        assert contains(rc, -3 + 3j)
        assert not contains(rc, -3 + 3.01j)

    def test_s5_wedge_first_quadrant(self):
        """5+3i: Im >= 3r and Re - Im >= 2r, no rotation."""
        spec = constellation(32)
        rc = extended_region(spec, point_index(spec, 5 + 3j), 1.0)
        assert rc.label == SetLabel.S5
        assert rc.rotation == 1
        assert [row.kind for row in rc.inequalities] == [
            ConstraintKind.WEDGE_FLOOR, ConstraintKind.WEDGE_DIFF]
        assert contains(rc, 5 + 3j)
        assert contains(rc, 9 + 4j)
        assert not contains(rc, 4 + 3j)

    @pytest.mark.parametrize("point", [5 + 3j, -3 + 5j, -5 - 3j, 3 - 5j,
                                       3 + 5j, -5 + 3j, -3 - 5j, 5 - 3j])
    def test_wedges_contain_their_anchor(self, point):
        """Every S5/S6 point lies in its own (rotated) wedge."""
        spec = constellation(32)
        rc = extended_region(spec, point_index(spec, point), 4.0)
        assert rc.label in (SetLabel.S5, SetLabel.S6)
        assert abs(rc.rotation) == pytest.approx(1.0)
        assert rc.rotation_phi == pytest.approx(math.atan2(rc.rotation.imag, rc.rotation.real))
        assert contains(rc, 2 * point), f"{2 * point} should be in its wedge"
        assert not contains(rc, 2 * point * 0.9)

    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    @pytest.mark.parametrize("gamma", [1.0, 10.0, 100.0])
    def test_scaled_point_in_own_region(self, order, gamma):
        """sqrt(gamma)*s lies in its region and in no other."""
        spec = constellation(order)
        regions = [extended_region(spec, i, gamma) for i in range(order)]
        for i, rc in enumerate(regions):
            p = math.sqrt(gamma) * spec.points[i]
            assert contains(rc, p, tol=1e-9 * gamma)
            others = [j for j, other in enumerate(regions) if j != i and contains(other, p)]
            assert others == [], f"{p} also falls in regions {others}"

    def test_invalid_gamma(self):
        """gamma must be positive."""
        with pytest.raises(ValueError):
            extended_region(constellation(4), 0, 0.0)


class TestMinimumDistance:
    """Test the minimum-distance property by sampling."""

    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_sampled_pairs_keep_distance(self, order):
        """Sampled points of distinct regions are at least 2 apart at gamma = 1."""
        rng = np.random.default_rng(order)
        spec = constellation(order)
        pools = [sample_region(extended_region(spec, i, 1.0), rng, 64) for i in range(order)]
        worst = min(
            float(np.min(np.abs(pools[i][:, None] - pools[j][None, :])))
            for i in range(order) for j in range(i + 1, order)
        )
        assert worst >= 2.0 - 1e-9, f"Minimum distance violated: {worst}"

    def test_samples_inside_region(self):
        """sample_region returns members only."""
        spec = constellation(32)
        rc = extended_region(spec, point_index(spec, -3 + 5j), 1.0)
        samples = sample_region(rc, np.random.default_rng(0), 100)
        assert samples.shape == (100,)
        assert np.all(contains_many(rc, samples))


class TestRelaxedRegions:
    """Test relaxed boxes for inner points."""

    def test_box_rows(self):
        """Square of half-width d0 around sqrt(gamma)*s."""
        spec = constellation(16)
        rc = relaxed_region(spec, point_index(spec, 1 + 1j), 4.0, 0.5)
        assert [row.kind for row in rc.inequalities] == [
            ConstraintKind.RE_LOWER, ConstraintKind.IM_LOWER,
            ConstraintKind.RE_UPPER, ConstraintKind.IM_UPPER]
        assert contains(rc, 2 + 2j)
        assert contains(rc, 1.5 + 2.5j)
        assert not contains(rc, 2.6 + 2j)

    def test_zero_width_is_the_point(self):
        """d0 = 0 collapses the box to sqrt(gamma)*s."""
        spec = constellation(16)
        rc = relaxed_region(spec, point_index(spec, 1 - 1j), 1.0, 0.0)
        assert contains(rc, 1 - 1j)
        assert not contains(rc, 1.01 - 1j)

    def test_preconditions(self):
        """Only S4 points, 0 <= d0 < sqrt(gamma)."""
        spec = constellation(16)
        inner = point_index(spec, 1 + 1j)
        with pytest.raises(ValueError, match="S4"):
            relaxed_region(spec, point_index(spec, 3 + 3j), 1.0, 0.1)
        with pytest.raises(ValueError):
            relaxed_region(spec, inner, 1.0, -0.1)
        with pytest.raises(ValueError):
            relaxed_region(spec, inner, 1.0, 1.0)

    def test_frame_regions_relaxes_inner_only(self):
        """Relaxed mode replaces S4 regions and keeps the rest."""
        spec = constellation(16)
        indices = [point_index(spec, 1 + 1j), point_index(spec, 3 + 3j)]
        regions = frame_regions(spec, indices, 4.0, RegionMode.RELAXED, 0.5)
        assert len(regions[0].inequalities) == 4 and regions[0].equalities == ()
        assert regions[1].label == SetLabel.S1

    def test_frame_regions_zero_width_pins(self):
        """Relaxed mode at d0 = 0 keeps the two equalities of the fixed region."""
        spec = constellation(16)
        regions = frame_regions(spec, [point_index(spec, 1 + 1j)], 4.0, RegionMode.RELAXED, 0.0)
        assert len(regions[0].equalities) == 2 and regions[0].inequalities == ()


class TestPolygons:
    """Test region polygons."""

    def test_s1_clipped_square(self):
        """Corner 1+1i of 4-QAM at gamma=1 clipped to radius 10."""
        rc = extended_region(constellation(4), point_index(constellation(4), 1 + 1j), 1.0)
        vertices = sorted(region_polygon(rc, 10.0))
        assert len(vertices) == 4
        assert vertices[0] == pytest.approx((1.0, 1.0))
        assert vertices[-1] == pytest.approx((10.0, 10.0))

    def test_s4_single_vertex(self):
        """A pinned point is a single vertex."""
        spec = constellation(16)
        rc = extended_region(spec, point_index(spec, 1 + 1j), 4.0)
        assert region_polygon(rc, 10.0) == [pytest.approx((2.0, 2.0))]

    def test_wedge_vertices_in_original_plane(self):
        """Rotated wedges report vertices in the received plane."""
        spec = constellation(32)
        rc = extended_region(spec, point_index(spec, -3 + 5j), 1.0)
        vertices = region_polygon(rc, 10.0)
        assert len(vertices) >= 3
        for re, im in vertices:
            assert contains(rc, complex(re, im), tol=1e-7)

    def test_invalid_radius(self):
        """radius must be positive."""
        rc = extended_region(constellation(4), 0, 1.0)
        with pytest.raises(ValueError):
            region_polygon(rc, 0.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
