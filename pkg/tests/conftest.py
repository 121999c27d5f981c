import numpy as np
import pytest

from korteweg.constitutive import energy_function, make_pressure
from korteweg.geometry import (
    GrainShape,
    Rectangle,
    build_perforated_domain,
    build_unit_cell,
)
from korteweg.nonlocal_ops import make_kernel


@pytest.fixture(scope="session")
def disc_cell():
    return build_unit_cell(GrainShape("disc", radius=0.25), 8)


@pytest.fixture(scope="session")
def unit_square():
    return Rectangle()


@pytest.fixture(scope="session")
def quarter_mask(disc_cell, unit_square):
    """Perforated unit square at eps = 1/4 on a 32x32 grid."""
    return build_perforated_domain(disc_cell, 0.25, unit_square, h=0.25 / 8)


@pytest.fixture(scope="session")
def quadratic_law():
    return make_pressure(
        "polytropic", {"coeff": 1.0, "exponent": 2.0}, gamma=1.0, rho_s=1.0, r_max=5.0
    )


@pytest.fixture(scope="session")
def quadratic_energy(quadratic_law):
    return energy_function(quadratic_law)


@pytest.fixture(scope="session")
def two_well_law():
    return make_pressure(
        "cubic",
        {"amp": 0.05, "center": 1.0, "width": 0.6, "well": 0.5},
        gamma=1.5,
        rho_s=1.0,
        r_max=50.0,
    )


@pytest.fixture(scope="session")
def two_well_energy(two_well_law):
    return energy_function(two_well_law, gauge="double_well")


@pytest.fixture()
def wavy_datum():
    def make(mask, base=1.0, amp=0.3):
        x, y = mask.cell_centers()
        rho = base + amp * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
        return np.where(mask.fluid, rho, 0.0)

    return make


@pytest.fixture(scope="session")
def small_kernel(quarter_mask):
    return make_kernel(0.2, quarter_mask.h)
