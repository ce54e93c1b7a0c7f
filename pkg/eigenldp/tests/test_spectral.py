"""Tests for the limiting spectral laws and their transforms (eigenldp/spectral.py)."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from eigenldp import spectral
from eigenldp.errors import DomainError
from eigenldp.spectral import block_law, marchenko_pastur, semicircle


ALL_LAWS = [semicircle(), marchenko_pastur(1.0), marchenko_pastur(4.0), block_law(1.0), block_law(3.0)]


# ---------------------------------------------------------------------------
# Supports, names, atoms
# ---------------------------------------------------------------------------

class TestSupport:
    def test_semicircle_edges(self):
        assert semicircle().support == (-2.0, 2.0)

    def test_mp_edges(self):
        law = marchenko_pastur(4.0)
        assert (law.a, law.b) == (1.0, 9.0)
        assert law.support == (1.0, 9.0)

    def test_block_edge(self):
        assert block_law(1.0).right_edge == pytest.approx(math.sqrt(2.0))
        assert block_law(4.0).right_edge == pytest.approx(math.sqrt(9.0 / 5.0))
        assert block_law(4.0).left_edge == -block_law(4.0).right_edge

    def test_block_atom(self):
        assert block_law(3.0).atom_at_zero == pytest.approx(0.5)
        assert block_law(1.0).atom_at_zero == 0.0

    def test_alpha_below_one(self):
        with pytest.raises(DomainError):
            marchenko_pastur(0.5)

    def test_from_name(self):
        assert spectral.spectral_from_name("SC") == semicircle()
        assert spectral.spectral_from_name("marchenko-pastur", 2.0) == marchenko_pastur(2.0)

    def test_unknown_name(self):
        with pytest.raises(DomainError, match="did you mean"):
            spectral.spectral_from_name("semicirle")

    def test_json_round_trip(self):
        law = block_law(2.5)
        assert spectral.law_from_json(spectral.law_to_json(law)) == law

    def test_malformed_json(self):
        with pytest.raises(DomainError):
            spectral.law_from_json({"alpha": 2.0})


# ---------------------------------------------------------------------------
# Densities, distribution functions, moments
# ---------------------------------------------------------------------------

class TestDistribution:
    @pytest.mark.parametrize("law", ALL_LAWS)
    def test_total_mass(self, law):
        assert spectral.expectation(law, lambda x: 1.0) == pytest.approx(1.0, abs=1e-10)

    def test_semicircle_cdf_midpoint(self):
        assert spectral.cdf(semicircle(), 0.0) == pytest.approx(0.5)

    @pytest.mark.parametrize("x", [1.5, 4.0, 7.0])
    def test_mp_cdf_against_density(self, x):
        law = marchenko_pastur(4.0)
        value, _ = quad(lambda t: spectral.density(law, t), law.a, x, epsabs=1e-12, limit=200)
        assert spectral.cdf(law, x) == pytest.approx(value, abs=1e-7)

    def test_block_cdf_jump_is_the_atom(self):
        law = block_law(3.0)
        assert spectral.cdf(law, 0.0) - spectral.cdf_left(law, 0.0) == pytest.approx(0.5)

    def test_block_cdf_is_symmetric(self):
        law = block_law(2.0)
        assert spectral.cdf(law, 0.7) == pytest.approx(1.0 - spectral.cdf_left(law, -0.7))

    def test_density_vanishes_outside(self):
        assert spectral.density(semicircle(), 2.5) == 0.0
        assert spectral.density(marchenko_pastur(4.0), 0.5) == 0.0

    def test_block_density_alpha_one_is_finite_at_zero(self):
        assert spectral.density(block_law(1.0), 0.0) == pytest.approx(2.0 / (math.pi * math.sqrt(2.0)))

    @pytest.mark.parametrize("law,k,expected", [
        (semicircle(), 2, 1.0),
        (semicircle(), 4, 2.0),
        (marchenko_pastur(4.0), 1, 4.0),
        (marchenko_pastur(4.0), 2, 20.0),
        (block_law(4.0), 2, 8.0 / 25.0),
        (block_law(1.0), 2, 0.5),
    ])
    def test_moments(self, law, k, expected):
        assert spectral.moment(law, k) == pytest.approx(expected, rel=1e-9)

    def test_semicircle_partial_mean(self):
        assert spectral.partial_mean(semicircle(), 0.0) == pytest.approx(-8.0 / (6.0 * math.pi))

    @pytest.mark.parametrize("law,y", [(marchenko_pastur(4.0), 3.0), (block_law(2.0), 0.6)])
    def test_partial_mean_against_quadrature(self, law, y):
        expected = spectral.expectation(law, lambda t: t if t <= y else 0.0)
        assert spectral.partial_mean(law, y) == pytest.approx(expected, abs=1e-6)

    def test_partial_mean_above_support(self):
        assert spectral.partial_mean(marchenko_pastur(4.0), 10.0) == 4.0

    def test_quantile_median(self):
        assert spectral.quantile(semicircle(), 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_quantile_inside_block_atom(self):
        assert spectral.quantile(block_law(3.0), 0.5) == 0.0

    @pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
    def test_mp_quantile_inverts_cdf(self, q):
        law = marchenko_pastur(2.0)
        assert spectral.cdf(law, spectral.quantile(law, q)) == pytest.approx(q, abs=1e-10)

    def test_quantile_level(self):
        with pytest.raises(DomainError):
            spectral.quantile(semicircle(), 1.5)


# ---------------------------------------------------------------------------
# Stieltjes transform, inverse, R-transform
# ---------------------------------------------------------------------------

class TestStieltjes:
    def test_semicircle_value(self):
        assert spectral.stieltjes(semicircle(), 3.0) == pytest.approx(0.381966, abs=1e-6)

    @pytest.mark.parametrize("law", ALL_LAWS)
    def test_against_quadrature(self, law):
        for z in (law.right_edge + 0.2, law.right_edge + 3.0):
            assert spectral.stieltjes(law, z) == pytest.approx(spectral.stieltjes_quadrature(law, z), abs=1e-8)

    def test_vectorized(self):
        out = spectral.stieltjes(semicircle(), np.array([3.0, 4.0]))
        assert out.shape == (2,)

    def test_inside_support(self):
        with pytest.raises(DomainError):
            spectral.stieltjes(semicircle(), 2.0)

    @pytest.mark.parametrize("law,expected", [
        (semicircle(), 1.0),
        (marchenko_pastur(4.0), 1.0 / 3.0),
        (block_law(1.0), math.sqrt(2.0)),
    ])
    def test_h_max(self, law, expected):
        assert spectral.h_max(law, law.right_edge) == pytest.approx(expected, rel=1e-6)

    def test_h_max_below_edge(self):
        with pytest.raises(DomainError):
            spectral.h_max(semicircle(), 1.9)

    def test_mp_quadratic_residual(self):
        g = spectral.mp_stieltjes(4.0, 12.0)
        assert spectral.mp_quadratic_residual(4.0, 12.0, g) == pytest.approx(0.0, abs=1e-14)

    def test_companion_behaves_like_one_over_z(self):
        z = 1e6
        assert z * spectral.companion_stieltjes(4.0, z) == pytest.approx(1.0, abs=1e-5)

    def test_companion_carries_zero_atom(self):
        z = 20.0
        direct = spectral.stieltjes_quadrature(marchenko_pastur(4.0), z) / 4.0 + 0.75 / z
        assert spectral.companion_stieltjes(4.0, z) == pytest.approx(direct)


class TestInverse:
    def test_semicircle_closed_form(self):
        assert spectral.inverse_stieltjes(semicircle(), 0.5) == pytest.approx(2.5)

    @pytest.mark.parametrize("law", ALL_LAWS)
    def test_round_trip(self, law):
        top = spectral.h_max(law, law.right_edge)
        for frac in (0.2, 0.7):
            u = frac * top
            assert spectral.stieltjes(law, spectral.inverse_stieltjes(law, u)) == pytest.approx(u, rel=1e-10)

    def test_at_h_max_returns_edge(self):
        law = block_law(2.0)
        assert spectral.inverse_stieltjes(law, spectral.h_max(law, law.right_edge)) == law.right_edge

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            spectral.inverse_stieltjes(semicircle(), 1.5)

    def test_mp_r_transform(self):
        assert spectral.r_transform(marchenko_pastur(4.0), 0.2) == pytest.approx(5.0, rel=1e-10)

    def test_semicircle_r_transform(self):
        assert spectral.r_transform(semicircle(), 0.3) == 0.3


class TestLogPotential:
    @pytest.mark.parametrize("gamma", [2.0, 2.5, 4.0])
    def test_semicircle_closed_form(self, gamma):
        expected = spectral.expectation(semicircle(), lambda y: math.log(gamma - y) if y < gamma else 0.0)
        assert spectral.log_potential(semicircle(), gamma) == pytest.approx(expected, abs=1e-7)

    def test_semicircle_at_edge(self):
        assert spectral.log_potential(semicircle(), 2.0) == pytest.approx(0.5)

    def test_inside_support(self):
        with pytest.raises(DomainError):
            spectral.log_potential(marchenko_pastur(4.0), 5.0)
