import numpy as np
import pytest

from korteweg.errors import ConfigError
from korteweg.extensions import (
    default_test_functions,
    mean_value_extend,
    weak_limit_check,
    zero_extend,
)
from korteweg.geometry import GrainShape, Rectangle, build_perforated_domain, build_unit_cell


@pytest.fixture(scope="module")
def cell():
    return build_unit_cell(GrainShape("disc", radius=0.25), 8)


def field(mask, f):
    x, y = mask.cell_centers()
    return np.where(mask.fluid, f(x, y), 0.0)


class TestZeroExtension:
    def test_values_vanish_on_grains(self, cell):
        mask = build_perforated_domain(cell, 0.25, Rectangle())
        g = zero_extend(np.ones(mask.shape), mask)
        assert np.all(g.values[~mask.fluid] == 0)
        assert np.all(g.values[mask.fluid] == 1)
        assert g.provenance == "zero"


class TestMeanValueExtension:
    def test_constant_field_extends_to_the_same_constant(self, cell):
        mask = build_perforated_domain(cell, 0.25, Rectangle())
        rho = np.where(mask.fluid, 0.7, 0.0)
        g = mean_value_extend(rho, mask)
        assert np.abs(g.values - 0.7).max() <= 1e-14

    def test_grain_values_are_annulus_averages(self, cell):
        mask = build_perforated_domain(cell, 0.25, Rectangle())
        rho = field(mask, lambda x, y: 1.0 + x)
        g = mean_value_extend(rho, mask)
        r = mask.cells_per_eps
        annulus = mask.cell.annulus_mask_at(r)
        solid = mask.cell.solid_mask_at(r)
        kx, ky = mask.k_indices[0]
        ix = round(0.25 * kx / mask.h)
        iy = round(0.25 * ky / mask.h)
        block = rho[ix : ix + r, iy : iy + r]
        expected = block[annulus].mean()
        got = g.values[ix : ix + r, iy : iy + r][solid]
        assert np.abs(got - expected).max() <= 1e-14

    def test_fluid_values_untouched(self, cell):
        mask = build_perforated_domain(cell, 0.25, Rectangle())
        rho = field(mask, lambda x, y: np.sin(x) + y)
        g = mean_value_extend(rho, mask)
        assert np.array_equal(g.values[mask.fluid], rho[mask.fluid])


class TestWeakLimits:
    def test_extension_errors_decrease_together(self, cell):
        dom = Rectangle()
        h = 0.0625 / 8
        f = lambda x, y: 1.0 + 0.5 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
        families = []
        g = None
        for eps in (0.25, 0.125, 0.0625):
            mask = build_perforated_domain(cell, eps, dom, h=h)
            if g is None:
                x, y = mask.cell_centers()
                g = f(x, y)
            families.append((eps, np.where(mask.fluid, f(*mask.cell_centers()), 0.0), mask))
        rows = weak_limit_check(families, g, cell.porosity, default_test_functions())
        by_psi = {}
        for r in rows:
            by_psi.setdefault(r.test_function, []).append(r)
        for name, series in by_psi.items():
            zero_errs = [r.zero_error for r in series]
            # zero-extension gap to theta * target shrinks with the boundary layer
            assert zero_errs[0] > zero_errs[-1], name
            # mean-value extension error stays at quadrature level
            assert max(r.mean_value_error for r in series) < 0.05 * max(
                zero_errs[0], 1e-6
            ), name

    def test_eps_must_decrease(self, cell):
        dom = Rectangle()
        m1 = build_perforated_domain(cell, 0.125, dom, h=0.125 / 8)
        m2 = build_perforated_domain(cell, 0.25, dom, h=0.125 / 8)
        fam = [
            (0.125, np.ones(m1.shape), m1),
            (0.25, np.ones(m2.shape), m2),
        ]
        with pytest.raises(ConfigError):
            weak_limit_check(fam, np.ones(m1.shape), 0.8, default_test_functions())
