"""Tests for lambda_max rate functions (eigenldp/rates.py)."""

import math

import numpy as np
import pytest

from eigenldp.ensembles import EnsembleKind
from eigenldp.errors import DomainError
from eigenldp.rare_event import theta_x_wigner
from eigenldp.rates import (
    RateMethod,
    law_for,
    rate_block,
    rate_block_derivative,
    rate_block_display,
    rate_for,
    rate_lambda_min,
    rate_scan,
    rate_variational,
    rate_wigner,
    rate_wigner_quadrature,
    rate_wishart,
)
from eigenldp.spectral import block_law


# ---------------------------------------------------------------------------
# Wigner closed form
# ---------------------------------------------------------------------------

class TestWigner:
    @pytest.mark.parametrize("x,expected", [(2.5, 0.244353), (3.0, 0.714627)])
    def test_worked_values(self, x, expected):
        assert rate_wigner(x, 1).value == pytest.approx(expected, abs=1e-6)

    def test_beta_two_doubles(self):
        assert rate_wigner(3.0, 2).value == pytest.approx(2.0 * rate_wigner(3.0, 1).value)

    def test_zero_at_edge(self):
        res = rate_wigner(2.0, 1)
        assert res.value == 0.0
        assert res.theta_star == 0.5

    def test_infinite_inside_bulk(self):
        res = rate_wigner(1.5, 1)
        assert res.infinite
        assert math.isinf(res.value)
        assert math.isnan(res.theta_star)

    def test_theta_star(self):
        assert rate_wigner(2.5, 1).theta_star == pytest.approx(1.0)

    @pytest.mark.parametrize("x", [2.01, 2.5, 3.0, 6.0])
    def test_against_quadrature(self, x):
        assert rate_wigner(x, 1).value == pytest.approx(rate_wigner_quadrature(x, 1), abs=1e-10)

    def test_derivative_is_half_beta_sqrt(self):
        x, h = 3.0, 1e-5
        fd = (rate_wigner(x + h, 1).value - rate_wigner(x - h, 1).value) / (2 * h)
        assert fd == pytest.approx(0.5 * math.sqrt(x * x - 4.0), rel=1e-7)


# ---------------------------------------------------------------------------
# Wishart and block
# ---------------------------------------------------------------------------

class TestWishart:
    def test_against_gauss_legendre(self):
        x, alpha = 12.0, 4.0
        a, b = 1.0, 9.0
        nodes, weights = np.polynomial.legendre.leggauss(200)
        top = math.sqrt(x - b)
        u = 0.5 * top * (nodes + 1.0)
        integrand = 2.0 * u * u * np.sqrt(b - a + u * u) / (b + u * u)
        expected = 1.0 / (2.0 * (1.0 + alpha)) * 0.5 * top * float(weights @ integrand)
        assert rate_wishart(x, 1, alpha).value == pytest.approx(expected, rel=1e-10)

    def test_zero_at_edge(self):
        assert rate_wishart(9.0, 1, 4.0).value == 0.0

    def test_infinite_below_edge(self):
        assert rate_wishart(8.0, 1, 4.0).infinite

    @pytest.mark.parametrize("x,alpha", [(2.0, 1.0), (1.8, 4.0), (3.0, 2.0)])
    def test_block_is_wishart_at_pushed_point(self, x, alpha):
        expected = rate_wishart((1.0 + alpha) * x * x, 1, alpha).value
        assert rate_block(x, 1, alpha).value == pytest.approx(expected, rel=1e-12)

    def test_block_zero_at_edge(self):
        law = block_law(4.0)
        res = rate_block(law.right_edge, 1, 4.0)
        assert res.value == pytest.approx(0.0, abs=1e-12)
        assert res.method is RateMethod.QUADRATURE

    def test_block_infinite_inside(self):
        assert rate_block(1.0, 1, 1.0).infinite

    @pytest.mark.parametrize("alpha", [1.0, 4.0])
    def test_display_equals_composition(self, alpha):
        x = 1.5 * block_law(alpha).right_edge
        assert rate_block_display(x, 1, alpha) == pytest.approx(rate_block(x, 1, alpha).value, rel=1e-8)

    @pytest.mark.parametrize("x,alpha", [(4.0, 4.0), (2.0, 1.0)])
    def test_derivative_against_finite_difference(self, x, alpha):
        h = 1e-5
        fd = (rate_block(x + h, 2, alpha).value - rate_block(x - h, 2, alpha).value) / (2 * h)
        assert rate_block_derivative(x, 2, alpha) == pytest.approx(fd, rel=1e-6)

    def test_derivative_below_edge(self):
        with pytest.raises(DomainError):
            rate_block_derivative(1.0, 1, 1.0)

    def test_needs_alpha(self):
        with pytest.raises(DomainError):
            rate_for(EnsembleKind.BLOCK1, 2.0)
        with pytest.raises(DomainError):
            law_for(EnsembleKind.BLOCK2)


class TestDispatch:
    def test_wigner(self):
        assert rate_for(EnsembleKind.WIGNER2, 3.0).value == pytest.approx(2.0 * 0.714627, abs=1e-5)

    def test_lambda_min_mirrors(self):
        assert rate_lambda_min(-3.0, EnsembleKind.WIGNER1).value == rate_wigner(3.0, 1).value

    def test_lambda_min_block(self):
        assert rate_lambda_min(-2.0, EnsembleKind.BLOCK1, 1.0).value == rate_block(2.0, 1, 1.0).value


# ---------------------------------------------------------------------------
# Variational formula
# ---------------------------------------------------------------------------

class TestVariational:
    @pytest.mark.parametrize("x", [2.1, 2.5, 3.0, 5.0])
    def test_matches_wigner_closed_form(self, x):
        res = rate_variational(x, EnsembleKind.WIGNER1)
        assert res.value == pytest.approx(rate_wigner(x, 1).value, abs=1e-6)
        assert res.method is RateMethod.VARIATIONAL

    def test_complex_wigner(self):
        assert rate_variational(3.0, EnsembleKind.WIGNER2).value == pytest.approx(rate_wigner(3.0, 2).value, abs=1e-6)

    def test_optimizer_is_theta_x(self):
        res = rate_variational(3.0, EnsembleKind.WIGNER1)
        assert res.theta_star == pytest.approx(theta_x_wigner(3.0, 1), abs=1e-5)

    @pytest.mark.parametrize("x,alpha", [(2.0, 1.0), (2.0, 4.0)])
    def test_matches_block_composition(self, x, alpha):
        res = rate_variational(x, EnsembleKind.BLOCK1, alpha)
        assert res.value == pytest.approx(rate_block(x, 1, alpha).value, abs=1e-4)

    def test_zero_at_edge(self):
        res = rate_variational(2.0, EnsembleKind.WIGNER1)
        assert res.value == 0.0
        assert res.theta_star == pytest.approx(0.5)

    def test_inside_bulk(self):
        with pytest.raises(DomainError, match="inside the bulk"):
            rate_variational(1.0, EnsembleKind.WIGNER1)


class TestScan:
    def test_table(self):
        frame = rate_scan(EnsembleKind.WIGNER1, 1.9, 2.5, 0.1)
        assert list(frame.columns) == ["x", "closed_form", "variational", "theta_star"]
        assert len(frame) == 7
        assert frame["x"].tolist() == pytest.approx([1.9, 2.0, 2.1, 2.2, 2.3, 2.4, 2.5])

    def test_bulk_rows(self):
        frame = rate_scan(EnsembleKind.WIGNER1, 1.9, 2.5, 0.1)
        assert math.isinf(frame["closed_form"].iloc[0])
        assert math.isnan(frame["variational"].iloc[0])

    def test_columns_agree(self):
        frame = rate_scan(EnsembleKind.WIGNER1, 2.0, 3.0, 0.5)
        assert np.allclose(frame["closed_form"], frame["variational"], atol=1e-6)

    def test_bad_range(self):
        with pytest.raises(DomainError):
            rate_scan(EnsembleKind.WIGNER1, 3.0, 2.0, 0.1)
