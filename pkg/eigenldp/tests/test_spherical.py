"""Tests for spherical integrals and the annealed inner average (eigenldp/spherical.py)."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad
from scipy.special import i0

from eigenldp import laws
from eigenldp.ensembles import EnsembleKind, Spectrum
from eigenldp.errors import DomainError
from eigenldp.laws import Field
from eigenldp.spectral import block_law, h_max, semicircle
from eigenldp.spherical import (
    JLimitInput,
    SphereVector,
    deloc_check,
    f_n_estimate,
    inner_annealed,
    inner_log_annealed,
    j_limit,
    j_n_contour,
    j_n_monte_carlo,
    norm_split,
    quadratic_form,
    sample_sphere,
    sample_sphere_batch,
    sample_split_sphere,
)


# ---------------------------------------------------------------------------
# Sphere vectors
# ---------------------------------------------------------------------------

class TestSphere:
    @pytest.mark.parametrize("field", ["real", "complex"])
    def test_unit_norm(self, rng, field):
        e = sample_sphere(50, field, rng)
        assert np.linalg.norm(e.components) == pytest.approx(1.0)
        assert e.field is Field(field)

    def test_batch_rows_are_unit(self, rng):
        rows = sample_sphere_batch(7, Field.REAL, rng, 11)
        assert np.allclose(np.linalg.norm(rows, axis=1), 1.0)

    def test_rejects_non_unit(self):
        with pytest.raises(DomainError):
            SphereVector(np.array([1.0, 1.0]))

    def test_flat_vector_is_delocalized(self):
        n = 64
        assert deloc_check(SphereVector(np.full(n, 1.0 / math.sqrt(n))), 0.1)

    def test_basis_vector_is_localized(self):
        assert not deloc_check(SphereVector(np.eye(64)[0]), 0.1)

    @pytest.mark.parametrize("eps", [0.0, 0.25, -0.1])
    def test_eps_range(self, eps):
        with pytest.raises(DomainError):
            deloc_check(SphereVector(np.eye(4)[0]), eps)

    def test_quadratic_form_stack(self, symmetric_factory):
        x = symmetric_factory(np.array([2.0, -1.0, 0.5]))
        e = np.eye(3)
        assert np.allclose(quadratic_form(x, e), np.diag(x))


# ---------------------------------------------------------------------------
# Finite-N spherical integral
# ---------------------------------------------------------------------------

class TestContour:
    def test_real_two_by_two(self):
        """|e1|^2 = cos^2: E exp(cos 2 phi) = I0(1)."""
        assert j_n_contour([1.0, -1.0], 0.5, 1) == pytest.approx(0.5 * math.log(i0(1.0)), rel=1e-8)

    def test_complex_two_by_two(self):
        """|e1|^2 is uniform: E exp(2s - 1) = sinh(1)."""
        assert j_n_contour([1.0, -1.0], 0.5, 2) == pytest.approx(0.5 * math.log(math.sinh(1.0)), rel=1e-8)

    def test_complex_divided_difference(self):
        lam = np.array([1.0, 0.0, -0.5])
        theta, n = 0.4, 3
        c = theta * n * lam
        total = sum(math.exp(c[k]) / np.prod([c[k] - c[j] for j in range(n) if j != k]) for k in range(n))
        expected = math.log(2.0 * total) / n
        assert j_n_contour(lam, theta, 2) == pytest.approx(expected, rel=1e-8)

    def test_accepts_a_spectrum(self):
        s = Spectrum(np.array([1.0, -1.0]))
        assert j_n_contour(s, 0.5, 2) == j_n_contour([1.0, -1.0], 0.5, 2)

    def test_zero_theta(self):
        assert j_n_contour([1.0, 2.0], 0.0, 1) == 0.0

    def test_single_eigenvalue(self):
        assert j_n_contour([3.0], 0.5, 1) == 1.5

    def test_shift_adds_theta(self):
        lam = np.array([0.3, -0.2, 0.9, -1.1])
        assert j_n_contour(lam + 1.0, 0.7, 1) == pytest.approx(j_n_contour(lam, 0.7, 1) + 0.7, rel=1e-9)

    def test_bounded_by_extremes(self):
        lam = np.array([2.1, 0.5, -0.4, -1.7, 1.2])
        value = j_n_contour(lam, 1.0, 1)
        assert 1.0 * float(np.mean(lam)) <= value <= 1.0 * float(np.max(lam))

    def test_bad_beta(self):
        with pytest.raises(DomainError):
            j_n_contour([1.0, 2.0], 1.0, 3)

    def test_monte_carlo_agrees(self, rng, symmetric_factory):
        lam = np.array([1.0, 0.0, -1.0])
        x = symmetric_factory(lam)
        est = j_n_monte_carlo(x, 0.3, 20_000, rng, seed=12345)
        assert est.value == pytest.approx(j_n_contour(lam, 0.3, 1), abs=0.01)
        assert est.n_samples == 20_000
        assert est.seed == 12345

    def test_monte_carlo_rejects_asymmetric(self, rng):
        with pytest.raises(DomainError):
            j_n_monte_carlo(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.3, 10, rng)


# ---------------------------------------------------------------------------
# Large-N limit
# ---------------------------------------------------------------------------

class TestLimit:
    def test_subcritical_is_quadratic(self):
        assert j_limit(JLimitInput(semicircle(), 0.2, 2.5, 1)) == pytest.approx(0.04)

    def test_supercritical_value(self):
        assert j_limit(JLimitInput(semicircle(), 1.0, 2.5, 1)) == pytest.approx(1.244353, abs=1e-6)

    def test_continuous_at_threshold(self):
        """2 theta / beta = G(2.5) = 1/2 at theta = 1/4."""
        below = j_limit(JLimitInput(semicircle(), 0.25 - 1e-9, 2.5, 1))
        above = j_limit(JLimitInput(semicircle(), 0.25 + 1e-9, 2.5, 1))
        assert below == pytest.approx(above, abs=1e-7)
        assert above == pytest.approx(0.0625, abs=1e-7)

    def test_supercritical_derivative(self):
        lam, beta, theta, h = 2.5, 1, 1.0, 1e-5
        fd = (j_limit(JLimitInput(semicircle(), theta + h, lam, beta))
              - j_limit(JLimitInput(semicircle(), theta - h, lam, beta))) / (2 * h)
        assert fd == pytest.approx(lam - beta / (2.0 * theta), rel=1e-7)

    def test_block_continuous_at_threshold(self):
        law = block_law(2.0)
        lam = 1.3 * law.right_edge
        threshold = 0.5 * h_max(law, lam)
        below = j_limit(JLimitInput(law, threshold - 1e-9, lam, 1))
        above = j_limit(JLimitInput(law, threshold + 1e-9, lam, 1))
        assert below == pytest.approx(above, abs=1e-7)

    def test_zero_theta(self):
        assert j_limit(JLimitInput(semicircle(), 0.0, 3.0, 1)) == 0.0

    def test_inside_support(self):
        with pytest.raises(DomainError):
            j_limit(JLimitInput(semicircle(), 1.0, 1.5, 1))


# ---------------------------------------------------------------------------
# Annealed inner average and its sphere average
# ---------------------------------------------------------------------------

class TestInnerAnnealed:
    @pytest.mark.parametrize("kind,beta", [(EnsembleKind.WIGNER1, 1), (EnsembleKind.WIGNER2, 2)])
    def test_gaussian_is_exact(self, rng, kind, beta):
        law = laws.gaussian() if beta == 1 else laws.complexify(laws.gaussian())
        e = sample_sphere(25, kind.field, rng)
        assert inner_annealed(e, 0.8, law, kind) == pytest.approx(0.64 / beta, rel=1e-12)

    def test_sharp_law_is_below_gaussian(self, rng):
        e = sample_sphere(25, Field.REAL, rng)
        assert inner_annealed(e, 0.8, laws.rademacher(), EnsembleKind.WIGNER1) <= 0.64 + 1e-12

    def test_block_gaussian_depends_on_split(self, rng):
        """Gaussian block: N inner = 2 theta^2 N s (1 - s) with s = |e1|^2."""
        l, m, theta = 4, 8, 0.6
        e = sample_sphere(l + m, Field.REAL, rng)
        s = float(np.sum(e.components[:l] ** 2))
        assert inner_annealed(e, theta, laws.gaussian(), EnsembleKind.BLOCK1, l) == pytest.approx(
            2.0 * theta * theta * s * (1.0 - s), rel=1e-12
        )

    def test_stack_matches_rows(self, rng):
        rows = sample_sphere_batch(6, Field.REAL, rng, 4)
        stacked = inner_log_annealed(rows, 0.5, laws.uniform_sqrt3(), EnsembleKind.WIGNER1)
        single = [inner_log_annealed(r, 0.5, laws.uniform_sqrt3(), EnsembleKind.WIGNER1) for r in rows]
        assert np.allclose(stacked, single)

    def test_block_needs_l(self, rng):
        with pytest.raises(DomainError):
            inner_log_annealed(np.eye(4)[0], 0.5, laws.gaussian(), EnsembleKind.BLOCK1)


class TestFreeEnergyEstimate:
    def test_gaussian_is_exact(self, rng, gaussian_wigner_spec):
        est = f_n_estimate(gaussian_wigner_spec, 0.7, 64, rng)
        assert est.value == pytest.approx(0.49, rel=1e-10)
        assert est.std_err == pytest.approx(0.0, abs=1e-10)

    def test_rademacher_close_to_gaussian(self, rng, wigner1_spec):
        est = f_n_estimate(wigner1_spec, 0.5, 200, rng)
        assert est.value <= 0.25 + 1e-12
        assert est.value == pytest.approx(0.25, abs=0.05)

    def test_zero_theta(self, rng, wigner1_spec):
        assert f_n_estimate(wigner1_spec, 0.0, 10, rng).value == 0.0

    def test_split_norm_needs_block(self, rng, wigner1_spec):
        with pytest.raises(DomainError):
            f_n_estimate(wigner1_spec, 0.5, 10, rng, split_norm=True)

    def test_split_rows_are_unit(self, rng, spec_factory):
        spec = spec_factory(EnsembleKind.BLOCK1, law="gaussian", l=8, m=24)
        e, log_ratio = sample_split_sphere(spec, norm_split(spec, 0.5), rng, 20)
        assert np.allclose(np.linalg.norm(e, axis=1), 1.0)
        assert np.all(np.isfinite(log_ratio))

    def test_split_estimate_matches_beta_integral(self, rng, spec_factory):
        spec = spec_factory(EnsembleKind.BLOCK1, law="gaussian", l=8, m=24)
        theta, n = 0.5, spec.size
        base = stats.beta(0.5 * spec.l, 0.5 * spec.m)
        value, _ = quad(lambda s: math.exp(2.0 * theta * theta * n * s * (1.0 - s)) * base.pdf(s), 0.0, 1.0)
        est = f_n_estimate(spec, theta, 4000, rng, split_norm=True)
        assert est.value == pytest.approx(math.log(value) / n, abs=0.01)
