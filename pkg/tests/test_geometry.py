import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from korteweg.errors import ConfigError
from korteweg.geometry import (
    GrainShape,
    Rectangle,
    build_perforated_domain,
    build_unit_cell,
    interior_cell_indices,
    refine_unit_cell,
)


def disc(radius, center=(0.5, 0.5)):
    return GrainShape("disc", center=center, radius=radius)


class TestUnitCell:
    def test_porosity_matches_analytic_disc_area(self):
        # center-counting is first-order accurate: within 2/m of the true area
        for m, r in ((64, 0.25), (128, 0.45)):
            cell = build_unit_cell(disc(r), m)
            assert abs(cell.porosity - (1 - np.pi * r**2)) <= 2.0 / m

    def test_square_grain_area_exact_on_aligned_grid(self):
        # half_width 0.25 on m=8: edges fall on grid lines, count is exact
        cell = build_unit_cell(GrainShape("square", half_width=0.25), 8)
        assert cell.solid_area == pytest.approx(0.25, abs=1e-12)

    def test_empty_grain_rejected(self):
        with pytest.raises(ConfigError, match="empty solid grain"):
            build_unit_cell(disc(0.0), 16)

    def test_boundary_touching_grain_rejected(self):
        with pytest.raises(ConfigError, match="touches"):
            build_unit_cell(disc(0.49), 16)

    def test_annulus_strictly_between_grain_and_cell(self):
        cell = build_unit_cell(disc(0.25), 32)
        assert cell.annulus_radius > 0.25
        assert cell.annulus_mask.any()
        assert not (cell.annulus_mask & cell.solid_mask).any()

    def test_annulus_radius_must_exceed_grain(self):
        with pytest.raises(ConfigError, match="annulus"):
            build_unit_cell(disc(0.25), 32, annulus_radius=0.2)

    @given(
        r=st.floats(0.05, 0.25),
        m=st.integers(16, 64),
    )
    @settings(max_examples=30, deadline=None)
    def test_porosity_strictly_between_zero_and_one(self, r, m):
        cell = build_unit_cell(disc(r), m)
        assert 0.0 < cell.porosity < 1.0
        assert cell.solid_mask.shape == (m, m)
        assert cell.porosity == pytest.approx(1.0 - cell.solid_mask.mean(), abs=1e-12)

    def test_refinement_preserves_porosity_and_shape(self):
        cell = build_unit_cell(disc(0.25), 16)
        fine = refine_unit_cell(cell, 4)
        assert fine.resolution == 64
        assert fine.porosity == cell.porosity
        # block-subdivided mask agrees with the coarse mask on block averages
        blocks = fine.solid_mask.reshape(16, 4, 16, 4).mean(axis=(1, 3))
        assert np.array_equal(blocks.astype(bool), cell.solid_mask)

    def test_centered_disc_mask_has_square_symmetries(self):
        cell = build_unit_cell(disc(0.3), 32)
        s = cell.solid_mask
        assert np.array_equal(s, s[::-1, :])
        assert np.array_equal(s, s[:, ::-1])
        assert np.array_equal(s, s.T)


class TestInteriorCells:
    def test_unit_square_quarter_eps_has_four_interior_cells(self):
        # brute-force oracle over a generous index window
        eps = 0.25
        dom = Rectangle()
        expected = []
        for kx in range(-10, 11):
            for ky in range(-10, 11):
                if (
                    eps * kx > 0 and eps * (kx + 1) < 1
                    and eps * ky > 0 and eps * (ky + 1) < 1
                ):
                    expected.append((kx, ky))
        got = interior_cell_indices(dom, eps)
        assert sorted(got) == sorted(expected)
        assert len(got) == 4

    def test_large_eps_gives_no_interior_cells(self):
        assert interior_cell_indices(Rectangle(), 1.5) == []

    def test_count_scales_like_inverse_eps_squared(self):
        counts = [len(interior_cell_indices(Rectangle(), e)) for e in (0.25, 0.125, 0.0625)]
        assert counts == [4, 36, 196]  # (1/eps - 2)^2 with boundary row excluded


class TestPerforatedDomain:
    def test_no_grains_when_eps_too_large(self, disc_cell):
        mask = build_perforated_domain(disc_cell, 2.0, Rectangle(lx=2.0, ly=2.0), h=0.25)
        assert mask.fluid.all()
        assert mask.k_indices == ()

    def test_measured_porosity_matches_cell(self, disc_cell):
        mask = build_perforated_domain(disc_cell, 0.125, Rectangle())
        assert mask.measured_porosity() == pytest.approx(disc_cell.porosity, abs=1e-12)

    def test_boundary_band_is_all_fluid(self, quarter_mask):
        assert quarter_mask.fluid[~quarter_mask.omega_k].all()

    def test_uncovered_area_decreases_with_eps(self, disc_cell):
        dom = Rectangle()
        h = 0.0625 / 8
        leftovers = []
        for eps in (0.25, 0.125, 0.0625):
            mask = build_perforated_domain(disc_cell, eps, dom, h=h)
            leftovers.append(1.0 - mask.omega_k.mean())
        assert leftovers[0] > leftovers[1] > leftovers[2]

    def test_incompatible_spacing_rejected(self, disc_cell):
        with pytest.raises(ConfigError, match="integer"):
            build_perforated_domain(disc_cell, 0.25, Rectangle(), h=0.1)

    def test_under_resolved_eps_cell_rejected(self, disc_cell):
        with pytest.raises(ConfigError, match="under-resolved"):
            build_perforated_domain(disc_cell, 0.25, Rectangle(), h=0.125)

    def test_same_cell_reused_across_eps(self, disc_cell):
        for eps in (0.25, 0.125):
            mask = build_perforated_domain(disc_cell, eps, Rectangle(), h=eps / 8)
            assert mask.cell is disc_cell

    def test_fluid_mask_symmetric_for_centered_disc(self, quarter_mask):
        f = quarter_mask.fluid
        assert np.array_equal(f, f[::-1, :])
        assert np.array_equal(f, f[:, ::-1])
        assert np.array_equal(f, f.T)
