"""Distances between empirical and limiting spectral laws, delocalization, resolvent blocks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .ensembles import EmpiricalMeasure, check_self_adjoint
from .errors import DomainError
from .spectral import SpectralLaw, cdf, cdf_left, partial_mean, quantile

logger = logging.getLogger(__name__)

_BL_WIDTHS = (0.1, 0.25, 0.5, 1.0, 2.0)
_BL_MARGIN = 1.0
_EIGEN_GAP_TOL = 1e-10


@dataclass
class DistanceReport:
    ks: float
    w1: float
    bl_lower: float
    n: int


def _as_measure(measure) -> EmpiricalMeasure:
    if isinstance(measure, EmpiricalMeasure):
        return measure
    return EmpiricalMeasure(np.asarray(getattr(measure, "eigenvalues", measure), dtype=float))


# ---------------------------------------------------------------------------
# KS and W1
# ---------------------------------------------------------------------------

def _ks(values: np.ndarray, counts: np.ndarray, n: int, law: SpectralLaw) -> float:
    """sup |F_n - F|, checked from both sides of every atom."""
    upper = np.cumsum(counts) / n
    lower = upper - counts / n
    right = np.array([cdf(law, v) for v in values])
    left = np.array([cdf_left(law, v) for v in values])
    return float(max(np.max(np.abs(upper - right)), np.max(np.abs(lower - left))))


def _integrated_cdf(law: SpectralLaw, y: float) -> float:
    """integral of F over (-inf, y] = y F(y) - integral of t over (-inf, y]."""
    return y * cdf(law, y) - partial_mean(law, y)


def _abs_gap(law: SpectralLaw, level: float, lo: float, hi: float) -> float:
    """integral over [lo, hi] of |level - F(x)|; F crosses level at most once."""
    if hi <= lo:
        return 0.0
    cross = min(max(quantile(law, level), lo), hi)
    a_lo, a_cross, a_hi = (_integrated_cdf(law, y) for y in (lo, cross, hi))
    below = level * (cross - lo) - (a_cross - a_lo)
    above = (a_hi - a_cross) - level * (hi - cross)
    return below + above


def _w1(values: np.ndarray, counts: np.ndarray, n: int, law: SpectralLaw) -> float:
    """integral of |F_n - F| dx, exact up to the closed forms of cdf and partial_mean."""
    total = _integrated_cdf(law, float(values[0]))
    levels = np.cumsum(counts) / n
    for k in range(values.size - 1):
        total += _abs_gap(law, float(levels[k]), float(values[k]), float(values[k + 1]))
    last = float(values[-1])
    top = max(last, law.right_edge)
    total += (top - last) - (_integrated_cdf(law, top) - _integrated_cdf(law, last))
    return max(total, 0.0)


# ---------------------------------------------------------------------------
# Bounded-Lipschitz lower bound
# ---------------------------------------------------------------------------

class _LawIntegrals:
    """Caches F and the partial mean at the knots of the test functions."""

    def __init__(self, law: SpectralLaw) -> None:
        self.law = law
        self._cache: dict[float, tuple[float, float]] = {}

    def _at(self, y: float) -> tuple[float, float]:
        if y not in self._cache:
            self._cache[y] = (cdf(self.law, y), partial_mean(self.law, y))
        return self._cache[y]

    def linear(self, lo: float, hi: float, p: float, s: float) -> float:
        """integral over (lo, hi] of p + s x."""
        f_lo, m_lo = self._at(lo)
        f_hi, m_hi = self._at(hi)
        return p * (f_hi - f_lo) + s * (m_hi - m_lo)

    def above(self, y: float) -> float:
        return 1.0 - self._at(y)[0]


def _hat(x: np.ndarray, c: float, w: float, h: float) -> np.ndarray:
    return h * np.clip(1.0 - np.abs(x - c) / w, 0.0, None)


def _ramp(x: np.ndarray, c: float, w: float, h: float) -> np.ndarray:
    return h * np.clip((x - c) / w, 0.0, 1.0)


def _bl_lower(atoms: np.ndarray, law: SpectralLaw, grid_m: int) -> float:
    """max |int f d(mu_n - mu)| over hats and ramps with sup|f| + Lip(f) = 1."""
    lo = min(law.left_edge, float(atoms[0])) - _BL_MARGIN
    hi = max(law.right_edge, float(atoms[-1])) + _BL_MARGIN
    centers = np.linspace(lo, hi, grid_m)
    integrals = _LawIntegrals(law)
    best = 0.0
    for w in _BL_WIDTHS:
        h = w / (1.0 + w)
        for c in centers:
            c = float(c)
            hat_law = (integrals.linear(c - w, c, h * (w - c) / w, h / w)
                       + integrals.linear(c, c + w, h * (c + w) / w, -h / w))
            ramp_law = integrals.linear(c, c + w, -h * c / w, h / w) + h * integrals.above(c + w)
            best = max(best,
                       abs(float(np.mean(_hat(atoms, c, w, h))) - hat_law),
                       abs(float(np.mean(_ramp(atoms, c, w, h))) - ramp_law))
    return best


def distances(measure, law: SpectralLaw, grid_m: int = 64) -> DistanceReport:
    """KS, W1 and a bounded-Lipschitz lower bound between an ESD and a limiting law.

    measure may be an EmpiricalMeasure, a Spectrum or a plain array of atoms.
    """
    if grid_m < 2:
        raise DomainError("grid_m must be at least 2")
    esd = _as_measure(measure)
    values, counts = np.unique(esd.atoms, return_counts=True)
    n = esd.n
    return DistanceReport(
        ks=_ks(values, counts, n, law),
        w1=_w1(values, counts, n, law),
        bl_lower=_bl_lower(esd.atoms, law, grid_m),
        n=n,
    )


# ---------------------------------------------------------------------------
# Eigenvectors and resolvents
# ---------------------------------------------------------------------------

def top_vector_deloc(matrix: np.ndarray) -> float:
    """max_i |v_i| for the unit top eigenvector v."""
    matrix = np.asarray(matrix)
    check_self_adjoint(matrix)
    n = matrix.shape[0]
    if n == 1:
        return 1.0
    vals, vecs = scipy.linalg.eigh(matrix, subset_by_index=[n - 2, n - 1], check_finite=False)
    gap = float(vals[1] - vals[0])
    if gap < _EIGEN_GAP_TOL:
        raise DomainError(f"top eigenspace is degenerate (gap {gap:.3e})")
    return float(np.max(np.abs(vecs[:, 1])))


def _random_unit(n: int, complex_: bool, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n)
    if complex_:
        v = v + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def resolvent_cross_block(g: np.ndarray, z: float, rng: np.random.Generator | None = None,
                          e1: np.ndarray | None = None, e2: np.ndarray | None = None) -> float:
    """|<e2, R_21(z) e1>| for the block operator [[0, G], [G*, 0]].

    R_21(z) = G* (z^2 - G G*)^{-1}, so one l x l solve suffices. G must already
    carry the 1/sqrt(N) normalization; unit vectors are drawn when not given.
    """
    g = np.asarray(g)
    if g.ndim != 2:
        raise DomainError(f"expected an l x m matrix, got shape {g.shape}")
    l, m = g.shape
    norm = float(np.linalg.norm(g, 2)) if g.size else 0.0
    if z * z <= norm * norm:
        raise DomainError(f"z = {z} lies inside the spectrum (operator norm {norm:.6g})")
    if e1 is None or e2 is None:
        rng = np.random.default_rng() if rng is None else rng
        complex_ = np.iscomplexobj(g)
        e1 = _random_unit(l, complex_, rng) if e1 is None else e1
        e2 = _random_unit(m, complex_, rng) if e2 is None else e2
    e1 = np.asarray(e1)
    e2 = np.asarray(e2)
    lhs = z * z * np.eye(l) - g @ g.conj().T
    y = scipy.linalg.solve(lhs, e1, assume_a="her", check_finite=False)
    value = abs(np.vdot(g @ e2, y))
    logger.debug("resolvent cross block at z=%g: %.3e", z, value)
    return float(value)
