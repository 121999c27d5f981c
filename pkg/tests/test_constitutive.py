import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from korteweg.constitutive import (
    check_admissibility,
    energy_function,
    free_energy,
    make_pressure,
    tail_energy_pressure_ratio,
)
from korteweg.errors import ConfigError


def linear_law(gamma):
    return make_pressure(
        "polytropic", {"coeff": 1.0, "exponent": 1.0}, gamma=gamma, rho_s=1.0, r_max=100.0
    )


class TestAdmissibility:
    def test_linear_pressure_with_capillarity_passes_with_alpha_one(self):
        rep = check_admissibility(linear_law(1.0))
        assert rep.admissible
        assert rep.alpha == pytest.approx(1.0, rel=1e-12)

    def test_linear_pressure_without_capillarity_fails_convexity(self):
        rep = check_admissibility(linear_law(0.0))
        assert not rep.admissible
        failed = [it.item for it in rep.items if not it.passed]
        assert 3 in failed
        # without capillarity the linear law also has no beta >= 2 tail
        assert set(failed) <= {3, 5}

    def test_two_well_cubic_is_admissible(self, two_well_law):
        rep = check_admissibility(two_well_law)
        assert rep.admissible
        assert rep.alpha > 0

    def test_two_well_cubic_pressure_is_nonmonotone(self, two_well_law):
        lo, hi = two_well_law.spinodal
        mid = 0.5 * (lo + hi)
        assert two_well_law.dp(mid) < 0
        assert two_well_law.dp(0.0) > 0
        assert two_well_law.dp(2.0 * hi) > 0

    def test_vdw_requires_range_below_pole(self):
        with pytest.raises(ConfigError):
            make_pressure("vdw", {"R": 1.0, "T": 1.0, "a": 1.0, "b": 2.0}, r_max=3.0)

    @given(
        a=st.floats(0.1, 5.0),
        b=st.floats(2.0, 4.0),
        gamma=st.floats(0.1, 3.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_polytropic_with_capillarity_has_positive_alpha(self, a, b, gamma):
        law = make_pressure(
            "polytropic", {"coeff": a, "exponent": b}, gamma=gamma, rho_s=1.0, r_max=10.0
        )
        rep = check_admissibility(law, n_samples=200)
        assert rep.alpha > 0


class TestEnergyIdentities:
    R = np.linspace(0.05, 4.0, 173)

    @pytest.mark.parametrize(
        "kind,params,gamma",
        [
            ("polytropic", {"coeff": 1.0, "exponent": 2.0}, 1.0),
            ("polytropic", {"coeff": 0.7, "exponent": 3.0}, 0.5),
            ("cubic", {"amp": 0.05, "center": 1.0, "width": 0.6, "well": 0.5}, 1.5),
        ],
    )
    def test_rho_Wpp_equals_pp_and_rho_Wp_minus_W_equals_p(self, kind, params, gamma):
        law = make_pressure(kind, params, gamma=gamma, rho_s=1.0, r_max=10.0)
        en = energy_function(law)
        r = self.R
        scale = np.maximum(np.abs(law.dp(r)), 1.0)
        assert np.all(np.abs(r * en.ddW(r) - law.dp(r)) <= 1e-8 * scale)
        scale = np.maximum(np.abs(law.p(r)), 1.0)
        assert np.all(np.abs(r * en.dW(r) - en.W(r) - law.p(r)) <= 1e-8 * scale)

    def test_dW_matches_finite_difference_of_W(self, quadratic_law):
        en = energy_function(quadratic_law)
        r = np.linspace(0.2, 3.0, 50)
        d = 1e-6
        fd = (en.W(r + d) - en.W(r - d)) / (2 * d)
        assert np.abs(en.dW(r) - fd).max() < 1e-6

    def test_W_vanishes_at_zero_without_nan(self, quadratic_energy):
        vals = quadratic_energy.W(np.array([0.0, 0.5, 1.0]))
        assert np.isfinite(vals).all()
        assert vals[0] == 0.0

    def test_nonneg_gauge_keeps_W_nonnegative(self, quadratic_law):
        en = energy_function(quadratic_law, gauge="nonneg")
        r = np.linspace(0.0, 5.0, 400)
        assert en.W(r).min() >= -1e-12

    def test_double_well_gauge_gives_two_local_minima(self, two_well_law):
        en = energy_function(two_well_law, gauge="double_well")
        r = np.linspace(0.05, 2.5, 2000)
        w = en.W(r)
        interior_minima = np.flatnonzero((w[1:-1] < w[:-2]) & (w[1:-1] < w[2:]))
        assert len(interior_minima) == 2


class TestTailRatio:
    def test_cubic_tail_ratio_approaches_one_half_monotonically(self):
        law = make_pressure(
            "polytropic", {"coeff": 1.0, "exponent": 3.0}, gamma=0.5, rho_s=1.0, r_max=2000.0
        )
        en = energy_function(law)
        ratios = [tail_energy_pressure_ratio(law, en, r) for r in (10.0, 100.0, 1000.0)]
        gaps = [abs(r - 0.5) for r in ratios]
        assert gaps[0] > gaps[1] > gaps[2]
        assert ratios[2] == pytest.approx(0.5, abs=2e-3)

    def test_tail_ratio_requires_supercritical_exponent(self, quadratic_law):
        en = energy_function(quadratic_law)
        with pytest.raises(ConfigError):
            tail_energy_pressure_ratio(quadratic_law, en, 100.0)


class TestRangeAndFreeEnergy:
    def test_check_range_rejects_values_beyond_r_max(self, quadratic_law):
        with pytest.raises(ConfigError):
            quadratic_law.check_range(np.array([0.5, 6.0]))

    def test_free_energy_zero_at_wall_density(
        self, quarter_mask, small_kernel, quadratic_law
    ):
        # constant rho = rho_s: both interaction terms vanish identically
        en = energy_function(quadratic_law, rho_ref=quadratic_law.rho_s, rho_min=None)
        rho = np.where(quarter_mask.fluid, quadratic_law.rho_s, 0.0)
        e = free_energy(rho, quarter_mask, small_kernel, quadratic_law, en)
        assert abs(e.fluid_fluid) < 1e-14
        assert abs(e.fluid_solid) < 1e-14

    def test_free_energy_interaction_terms_nonnegative(
        self, quarter_mask, small_kernel, quadratic_law, quadratic_energy, wavy_datum
    ):
        rho = wavy_datum(quarter_mask)
        e = free_energy(rho, quarter_mask, small_kernel, quadratic_law, quadratic_energy)
        assert e.fluid_fluid >= 0
        assert e.fluid_solid >= 0
        assert e.total == pytest.approx(e.fluid_fluid + e.fluid_solid + e.bulk)
