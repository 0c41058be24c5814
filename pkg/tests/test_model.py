import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tycsim.exceptions import ParameterError
from tycsim.model import (
    MuSchedule,
    Parameters,
    Sinusoid,
    StatePoint,
    clipped_growth_factor,
    growth_factor,
    mu_decays,
    mu_sample,
    reaction_modified,
    reaction_original,
    reaction_reduced,
    validate_initial_data,
    validate_params,
)

density = st.floats(0.0, 1.0, allow_nan=False)


class TestGrowthFactor:
    @pytest.mark.parametrize(
        "p, expected",
        [((0, 0, 0, 0), 1.0), ((0.25, 0.25, 0.25, 0.25), 0.0), ((0.5, 0.25, 0.25, 0.25), -0.25)],
    )
    def test_examples(self, p, expected):
        assert growth_factor(StatePoint(*p), 1.0) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("total, expected", [(1.25, 0.0), (0.0, 1.0), (0.5, 0.5)])
    def test_clipped(self, total, expected):
        assert clipped_growth_factor((total, 0, 0, 0), 1.0) == expected

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            growth_factor((np.nan, 0, 0, 0), 1.0)
        with pytest.raises(ValueError):
            growth_factor((0, 0, 0, 0), 0.0)

    @given(st.tuples(density, density, density, density), st.floats(0.01, 1.0), st.integers(0, 3))
    def test_strictly_decreasing_and_clip(self, p, bump, k):
        q = list(p)
        q[k] += bump
        assert growth_factor(q, 2.0) < growth_factor(p, 2.0)
        assert clipped_growth_factor(p, 2.0) == max(growth_factor(p, 2.0), 0.0)


class TestReactionModified:
    def test_interior_steady_state_at_critical_beta(self, unit_params):
        F = reaction_modified((0.25, 0.25, 0.0, 0.0), unit_params, 0.0)
        np.testing.assert_allclose(F, 0.0, atol=1e-15)

    def test_origin(self, unit_params):
        assert np.all(reaction_modified((0, 0, 0, 0), unit_params, 0.7) == 0.0)

    def test_above_capacity_hand_evaluation(self, unit_params):
        # exact rational evaluation of the four right-hand sides with g = -1/2
        f, m, s, r = Fraction(1, 2), Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)
        beta, mu = 16, 1
        g = 1 - (f + m + s + r)
        expected = [beta / 2 * f * m * g - f, -m, -s, mu * r * g - r]
        F = reaction_modified((0.5, 0.5, 0.25, 0.25), unit_params, 1.0)
        np.testing.assert_allclose(F, [float(x) for x in expected], rtol=1e-15)
        np.testing.assert_allclose(F, [-1.5, -0.5, -0.25, -0.375], rtol=1e-15)

    def test_clip_all_growth_switch(self, unit_params):
        p = unit_params.replace(clip_all_growth=True)
        F = reaction_modified((0.5, 0.5, 0.25, 0.25), p, 1.0)
        np.testing.assert_allclose(F, [-0.5, -0.5, -0.25, -0.25])

    def test_vectorised_matches_pointwise(self, unit_params):
        rng = np.random.default_rng(3)
        Z = rng.random((4, 7)) * 0.4
        F = reaction_modified(Z, unit_params, 0.3)
        for j in range(7):
            np.testing.assert_allclose(F[:, j], reaction_modified(Z[:, j], unit_params, 0.3))

    def test_non_finite_rejected(self, unit_params):
        with pytest.raises(ValueError):
            reaction_modified((np.inf, 0, 0, 0), unit_params, 0.0)

    @settings(max_examples=300)
    @given(st.tuples(density, density, density, density), st.integers(0, 3),
           st.floats(0.1, 64.0), st.floats(0.0, 5.0), st.booleans())
    def test_quasi_positivity(self, p, k, beta, mu, clip):
        """A species at zero density never has a negative rate."""
        q = list(p)
        q[k] = 0.0
        params = Parameters(beta=beta, K=1.0, d1=0.3, d2=0.6, d3=0.9, d4=1.2, clip_all_growth=clip)
        F = reaction_modified(q, params, mu)
        assert F[k] >= 0.0

    @given(st.tuples(density, density, density, density), st.floats(0.1, 64.0))
    def test_birth_terms_nonnegative(self, p, beta):
        params = Parameters(beta=beta, K=1.0, d1=1.0, d2=1.0, d3=1.0, d4=1.0)
        F = reaction_modified(p, params, 0.0)
        f, m, s, r = p
        # adding back the death terms leaves the birth terms of m and s
        assert F[1] + m >= 0.0
        assert F[2] + s >= 0.0


class TestReactionOriginal:
    def test_constant_source_at_origin(self):
        np.testing.assert_array_equal(reaction_original((0, 0, 0, 0), 1.0, 16.0, 1.0, 1.0, 0.1), [0, 0, 0, 0.1])

    def test_matches_modified_without_s_and_r(self):
        F = reaction_original((0.25, 0.25, 0, 0), 1.0, 16.0, 1.0, 1.0, 0.0)
        np.testing.assert_allclose(F, 0.0, atol=1e-15)

    def test_negative_s_rate_at_zero_s(self):
        """Above capacity with m, r > 0 the original s-equation pushes s below zero."""
        F = reaction_original((0.2, 0.5, 0.0, 0.6), 1.0, 16.0, 1.0, 1.0, 0.5)
        assert F[2] < 0.0
        F_mod = reaction_modified((0.2, 0.5, 0.0, 0.6), Parameters(16.0, 1.0, 1, 1, 1, 1), 0.5)
        assert F_mod[2] == 0.0

    def test_per_species_deaths(self):
        F = reaction_original((0.1, 0.1, 0.1, 0.1), 1.0, 0.0, 1.0, (1, 2, 3, 4), 0.0)
        np.testing.assert_allclose(F, [-0.1, -0.2, -0.3, -0.4])


class TestReactionReduced:
    def test_origin(self, unit_params):
        np.testing.assert_array_equal(reaction_reduced(0.0, 0.0, unit_params), [0.0, 0.0])

    def test_critical_point(self, unit_params):
        np.testing.assert_allclose(reaction_reduced(0.25, 0.25, unit_params), 0.0, atol=1e-15)

    def test_lower_interior_point_beta_32(self):
        params = Parameters(beta=32.0, K=1.0, d1=1.0, d2=1.0, d3=1.0, d4=1.0)
        b = math.sqrt(0.5)
        x = 1.0 * 1.0 * (1 - b) / (2 * 2.0)
        assert x == pytest.approx(0.0732233, abs=5e-8)
        np.testing.assert_allclose(reaction_reduced(x, x, params), 0.0, atol=1e-12)

    @given(density, density, st.floats(1.0, 64.0))
    def test_equals_modified_restriction(self, f, m, beta):
        if f + m > 1.0:
            f, m = f / 2, m / 2
        params = Parameters(beta=beta, K=1.0, d1=0.7, d2=1.3, d3=1.0, d4=1.0)
        np.testing.assert_allclose(
            reaction_reduced(f, m, params), reaction_modified((f, m, 0, 0), params, 0.4)[:2], rtol=1e-12, atol=1e-15
        )


class TestValidation:
    def test_diffusion_below_bound(self):
        p = Parameters(1.0, 1.0, 1, 1, 1, 1, a1=0.0, a0=0.1)
        with pytest.raises(ParameterError) as exc:
            validate_params(p)
        assert exc.value.violations[0].field == "a1"
        assert exc.value.violations[0].hypothesis == "diffusion-bounds"

    def test_accepts_death_rate_in_range(self):
        p = Parameters(1.0, 1.0, 0.5, 0.5, 0.5, 0.5, D0=0.1, D1=1.0)
        assert validate_params(p) is p

    def test_reports_all_violations(self):
        p = Parameters(-1.0, 1.0, 5.0, 0.5, 0.5, 0.5, D0=0.1, D1=1.0, a2=100.0)
        with pytest.raises(ParameterError) as exc:
            validate_params(p)
        assert {v.field for v in exc.value.violations} == {"beta", "d1", "a2"}

    def test_sinusoid_coefficient_bounds(self):
        p = Parameters(1.0, 1.0, 1, 1, 1, 1, a3=Sinusoid(1.0, 0.95), a0=0.1)
        with pytest.raises(ParameterError):
            validate_params(p)

    def test_mu_above_rate_bound(self):
        p = Parameters(1.0, 1.0, 1, 1, 1, 1, mu=MuSchedule("constant", 20.0), D1=10.0)
        with pytest.raises(ParameterError):
            validate_params(p)

    def test_initial_data_above_capacity(self):
        fields = np.full((4, 5), 0.1)
        fields[0, 2] = 1.5
        with pytest.raises(ParameterError) as exc:
            validate_initial_data(fields, 1.0)
        v = exc.value.violations[0]
        assert v.field == "f0" and v.hypothesis == "initial-data-bounds"

    def test_initial_data_negative(self):
        fields = np.zeros((4, 3))
        fields[3, 0] = -1e-3
        with pytest.raises(ParameterError):
            validate_initial_data(fields, 1.0)


class TestMuSchedule:
    def test_exponential(self):
        s = MuSchedule("exponential-decay", 1.0, 1.0)
        assert mu_sample(s, 0.0) == 1.0
        assert mu_sample(s, math.log(100)) == pytest.approx(0.01, rel=1e-14)

    def test_step_off(self):
        s = MuSchedule("step-off", 0.8, t_off=2.0)
        assert mu_sample(s, 1.999) == 0.8
        assert mu_sample(s, 2.0) == 0.0
        assert mu_sample(s, 50.0) == 0.0

    def test_constant(self):
        assert mu_sample(MuSchedule("constant", 0.3), 7.0) == 0.3

    def test_decay_flags(self):
        assert mu_decays(MuSchedule("exponential-decay", 1.0, 0.1))
        assert mu_decays(MuSchedule("step-off", 1.0, t_off=1.0))
        assert not mu_decays(MuSchedule("constant", 1.0))
        assert mu_decays(MuSchedule("constant", 0.0))

    def test_negative_time(self):
        with pytest.raises(ValueError):
            mu_sample(MuSchedule(), -1.0)

    @given(st.floats(0.0, 5.0), st.floats(0.0, 3.0), st.floats(0.0, 100.0))
    def test_samples_within_bounds(self, mu0, gamma, t):
        for kind in ("constant", "exponential-decay", "step-off"):
            v = mu_sample(MuSchedule(kind, mu0, gamma, 1.0), t)
            assert 0.0 <= v <= mu0
