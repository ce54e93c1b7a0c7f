"""Tests for spectral distances, delocalization and resolvent blocks (eigenldp/diagnostics.py)."""

import math

import numpy as np
import pytest

from eigenldp.diagnostics import distances, resolvent_cross_block, top_vector_deloc
from eigenldp.ensembles import EmpiricalMeasure, Spectrum
from eigenldp.errors import DomainError
from eigenldp.spectral import block_law, marchenko_pastur, quantile, semicircle


def _quantile_atoms(law, n):
    return np.array([quantile(law, (k + 0.5) / n) for k in range(n)])


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

class TestDistances:
    def test_point_mass_ks_against_semicircle(self):
        assert distances([0.0], semicircle()).ks == pytest.approx(0.5)

    def test_point_mass_ks_against_block_atom(self):
        """Half the block law sits at zero, so the jump leaves a quarter on each side."""
        assert distances([0.0], block_law(3.0)).ks == pytest.approx(0.25)

    def test_point_mass_w1_is_mean_absolute_value(self):
        assert distances([0.0], semicircle()).w1 == pytest.approx(8.0 / (3.0 * math.pi), rel=1e-8)

    @pytest.mark.parametrize("law,atom,expected", [
        (marchenko_pastur(4.0), 20.0, 16.0),
        (block_law(2.0), 10.0, 10.0),
    ])
    def test_far_atom_w1_is_mean_gap(self, law, atom, expected):
        assert distances([atom], law).w1 == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("law", [semicircle(), marchenko_pastur(2.0)])
    def test_quantile_atoms_are_close(self, law):
        report = distances(_quantile_atoms(law, 200), law)
        assert report.ks <= 1.0 / 200 + 1e-9
        assert report.w1 < 0.02
        assert report.bl_lower < 0.02
        assert report.n == 200

    @pytest.mark.parametrize("atoms", [[0.0], [3.0, -1.0, 0.5], [2.5, 2.5, 2.6]])
    def test_bl_lower_below_w1(self, atoms):
        report = distances(atoms, semicircle())
        assert report.bl_lower <= report.w1 + 1e-12

    def test_input_types_agree(self):
        values = np.array([0.4, -1.2, 1.9, 0.0])
        from_array = distances(values, semicircle())
        from_spectrum = distances(Spectrum(values), semicircle())
        from_measure = distances(EmpiricalMeasure(values), semicircle())
        assert from_array == from_spectrum == from_measure

    def test_grid_too_small(self):
        with pytest.raises(DomainError):
            distances([0.0], semicircle(), grid_m=1)


# ---------------------------------------------------------------------------
# Top eigenvector
# ---------------------------------------------------------------------------

class TestTopVector:
    def test_basis_vector(self):
        assert top_vector_deloc(np.diag([1.0, 2.0, 3.0])) == pytest.approx(1.0)

    def test_flat_vector(self):
        n = 16
        assert top_vector_deloc(np.ones((n, n)) / n) == pytest.approx(1.0 / math.sqrt(n))

    def test_single_entry(self):
        assert top_vector_deloc(np.array([[4.0]])) == 1.0

    def test_degenerate_top(self):
        with pytest.raises(DomainError, match="degenerate"):
            top_vector_deloc(np.eye(3))

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            top_vector_deloc(np.array([[0.0, 1.0], [0.0, 0.0]]))


# ---------------------------------------------------------------------------
# Resolvent cross block
# ---------------------------------------------------------------------------

class TestResolvent:
    def test_matches_full_inverse(self, rng):
        l, m = 3, 5
        g = rng.standard_normal((l, m)) / math.sqrt(l + m)
        z = 2.0 * float(np.linalg.norm(g, 2)) + 1.0
        e1 = rng.standard_normal(l)
        e1 /= np.linalg.norm(e1)
        e2 = rng.standard_normal(m)
        e2 /= np.linalg.norm(e2)
        h = np.block([[np.zeros((l, l)), g], [g.T, np.zeros((m, m))]])
        r = np.linalg.inv(z * np.eye(l + m) - h)
        expected = abs(e2 @ r[l:, :l] @ e1)
        assert resolvent_cross_block(g, z, e1=e1, e2=e2) == pytest.approx(expected, rel=1e-10)

    def test_draws_unit_vectors(self, rng):
        g = rng.standard_normal((4, 6)) / math.sqrt(10)
        value = resolvent_cross_block(g, 5.0, rng)
        assert 0.0 <= value <= float(np.linalg.norm(g, 2)) / (25.0 - float(np.linalg.norm(g, 2)) ** 2) + 1e-12

    def test_z_inside_spectrum(self):
        with pytest.raises(DomainError, match="inside the spectrum"):
            resolvent_cross_block(np.eye(2), 0.5)

    def test_needs_a_matrix(self):
        with pytest.raises(DomainError):
            resolvent_cross_block(np.ones(3), 2.0)
