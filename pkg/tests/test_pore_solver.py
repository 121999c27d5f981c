import numpy as np
import pytest

from korteweg.errors import ConfigError
from korteweg.pore_solver import (
    MomentumOperator,
    PoreConfig,
    advance_density,
    momentum_rhs,
    run_pore,
    solve_momentum,
)


@pytest.fixture(scope="module")
def setup(request):
    # shared small configuration: eps = 1/4 on a 32^2 grid
    from korteweg.constitutive import energy_function, make_pressure
    from korteweg.geometry import GrainShape, Rectangle, build_perforated_domain, build_unit_cell
    from korteweg.nonlocal_ops import make_kernel

    cell = build_unit_cell(GrainShape("disc", radius=0.25), 8)
    mask = build_perforated_domain(cell, 0.25, Rectangle(), h=0.25 / 8)
    law = make_pressure(
        "cubic", {"amp": 0.05, "center": 1.0, "width": 0.6, "well": 0.5},
        gamma=1.5, rho_s=1.0, r_max=50.0,
    )
    energy = energy_function(law, gauge="double_well")
    kernel = make_kernel(0.2, mask.h)
    return mask, law, energy, kernel


def wavy(mask, base=1.0, amp=0.3):
    x, y = mask.cell_centers()
    return np.where(
        mask.fluid, base + amp * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y), 0.0
    )


class TestEquilibrium:
    def test_constant_wall_density_is_a_fixed_point_for_100_steps(self, setup):
        mask, law, energy, kernel = setup
        rho0 = np.where(mask.fluid, law.rho_s, 0.0)
        dt = 1e-4
        cfg = PoreConfig(eps=0.25, t_end=100 * dt)
        run = run_pore(rho0, cfg, mask, kernel, law, energy, dt_fixed=dt)
        assert len(run.dt) == 100
        assert np.abs(run.final_rho - rho0).max() <= 1e-10
        assert max(run.max_velocity) <= 1e-12
        e = run.energy
        assert np.abs(e - e[0]).max() <= 1e-12 * max(1.0, abs(e[0]))


class TestConservationAndDissipation:
    def test_mass_conserved_to_1e12_over_1000_steps(self, setup):
        mask, law, energy, kernel = setup
        rho0 = wavy(mask)
        dt = 2e-5
        cfg = PoreConfig(eps=0.25, t_end=1000 * dt)
        run = run_pore(rho0, cfg, mask, kernel, law, energy, dt_fixed=dt)
        assert len(run.dt) == 1000
        m = np.asarray(run.mass)
        assert np.abs(m - m[0]).max() <= 1e-12 * m[0]

    def test_energy_nonincreasing(self, setup):
        mask, law, energy, kernel = setup
        cfg = PoreConfig(eps=0.25, t_end=0.05)
        run = run_pore(wavy(mask), cfg, mask, kernel, law, energy)
        e = run.energy
        assert np.all(np.diff(e) <= 1e-13 * max(1.0, abs(e[0])))

    def test_dissipation_terms_nonnegative(self, setup):
        mask, law, energy, kernel = setup
        cfg = PoreConfig(eps=0.25, t_end=0.05)
        run = run_pore(wavy(mask), cfg, mask, kernel, law, energy)
        assert min(run.dissipation) >= 0
        assert min(run.numerical_dissipation) >= -1e-12

    def test_halving_dt_halves_energy_balance_residual(self, setup):
        mask, law, energy, kernel = setup
        rho0 = wavy(mask)

        def max_residual(dt):
            cfg = PoreConfig(eps=0.25, t_end=20 * dt)
            run = run_pore(rho0, cfg, mask, kernel, law, energy, dt_fixed=dt)
            return np.abs(run.balance_residual).max()

        r1 = max_residual(4e-5)
        r2 = max_residual(2e-5)
        assert 1.5 <= r1 / r2 <= 2.5


class TestMomentum:
    def test_rhs_forms_agree_to_machine_precision(self, setup):
        mask, law, energy, kernel = setup
        op = MomentumOperator(mask, mu=1.0, xi=0.0)
        rho = wavy(mask)
        a = momentum_rhs(rho, mask, kernel, law, op, form="generalized")
        b = momentum_rhs(rho, mask, kernel, law, op, form="bare")
        assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(a).max())

    def test_velocity_antisymmetric_under_datum_reflection(self, setup):
        mask, law, energy, kernel = setup
        cfg = PoreConfig(eps=0.25, t_end=1.0)
        rho = wavy(mask)
        u, v, _ = solve_momentum(rho, mask, kernel, law, cfg)
        # reflecting the datum in x reflects (and flips) the x-velocity
        rho_r = rho[::-1, :]
        ur, vr, _ = solve_momentum(rho_r, mask, kernel, law, cfg)
        assert np.abs(ur + u[::-1, :]).max() <= 1e-9 * max(1.0, np.abs(u).max())

    def test_bulk_viscosity_shrinks_divergence(self, setup):
        mask, law, energy, kernel = setup
        rho = wavy(mask)
        h = mask.h

        def div_norm(xi):
            cfg = PoreConfig(eps=0.25, t_end=1.0, xi=xi)
            u, v, _ = solve_momentum(rho, mask, kernel, law, cfg)
            d = (u[1:, :] - u[:-1, :] + v[:, 1:] - v[:, :-1]) / h
            return float(np.sqrt(h**2 * np.sum(d[mask.fluid] ** 2)))

        assert div_norm(10.0) < div_norm(0.0)

    def test_negative_density_rejected(self, setup):
        mask, law, energy, kernel = setup
        rho = np.where(mask.fluid, -0.1, 0.0)
        with pytest.raises(ConfigError):
            solve_momentum(rho, mask, kernel, law, PoreConfig(eps=0.25))


class TestTransport:
    def test_cfl_violation_rejected(self, setup):
        mask, law, energy, kernel = setup
        u = np.ones((mask.shape[0] + 1, mask.shape[1]))
        v = np.zeros((mask.shape[0], mask.shape[1] + 1))
        rho = wavy(mask)
        with pytest.raises(ConfigError, match="CFL"):
            advance_density(rho, u, v, dt=1.0, mask=mask, eps=0.25)

    def test_upwind_step_exactly_conservative(self, setup):
        mask, law, energy, kernel = setup
        rho = wavy(mask)
        cfg = PoreConfig(eps=0.25, t_end=1.0)
        u, v, _ = solve_momentum(rho, mask, kernel, law, cfg)
        speed = np.abs(u).max() + np.abs(v).max()
        dt = 0.4 * 0.25**2 * mask.h / speed
        rho2 = advance_density(rho, u, v, dt, mask, eps=0.25)
        assert rho2[mask.fluid].sum() == pytest.approx(rho[mask.fluid].sum(), abs=1e-11)
        assert np.all(rho2[~mask.fluid] == rho[~mask.fluid])

    def test_record_times_hit_exactly(self, setup):
        mask, law, energy, kernel = setup
        cfg = PoreConfig(eps=0.25, t_end=0.02, record_times=(0.01, 0.02))
        run = run_pore(wavy(mask), cfg, mask, kernel, law, energy)
        assert set(run.snapshots) == {0.01, 0.02}
        assert set(run.velocity_snapshots) == {0.01, 0.02}
