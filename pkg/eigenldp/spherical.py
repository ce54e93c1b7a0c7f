"""Spherical integrals: finite-N values, their large-N limit, and the annealed inner average."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln

from . import laws
from .ensembles import EnsembleKind, EnsembleSpec, check_self_adjoint, diagonal_entry_law
from .errors import ConvergenceError, DomainError
from .free_energy import f_wishart
from .laws import EntryLaw, Field
from .montecarlo import Estimate, jackknife_log_mean_exp
from .spectral import SpectralKind, SpectralLaw, h_max, inverse_stieltjes, log_potential

logger = logging.getLogger(__name__)

_NORM_TOL = 1e-12
# j_n_monte_carlo is advertised for theta * N * lambda_max up to this value
_MC_EXPONENT_CAP = 50.0
_CHUNK = 256
_CONTOUR_EPSABS = 0.0
_CONTOUR_EPSREL = 1e-11
# width of the saddle window in units of 1/sqrt(h'')
_CONTOUR_WINDOW = 12.0


@dataclass
class SphereVector:
    components: np.ndarray

    def __post_init__(self) -> None:
        self.components = np.asarray(self.components)
        norm = float(np.linalg.norm(self.components))
        if abs(norm - 1.0) > _NORM_TOL:
            raise DomainError(f"sphere vector has norm {norm!r}")

    @property
    def n(self) -> int:
        return int(self.components.size)

    @property
    def field(self) -> Field:
        return Field.COMPLEX if np.iscomplexobj(self.components) else Field.REAL


@dataclass(frozen=True)
class JLimitInput:
    law: SpectralLaw
    theta: float
    lam: float
    beta: int


def _gaussian_rows(n: int, field: Field, rng: np.random.Generator, size) -> np.ndarray:
    shape = (n,) if size is None else (size, n)
    g = rng.standard_normal(shape)
    if field is Field.COMPLEX:
        g = (g + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    return g


def sample_sphere_batch(n: int, field: Field, rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, n) array of independent uniform unit vectors."""
    g = _gaussian_rows(n, field, rng, size)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_sphere(n: int, field: Field | str, rng: np.random.Generator) -> SphereVector:
    if n < 1:
        raise DomainError("n must be at least 1")
    g = _gaussian_rows(n, Field(field), rng, None)
    return SphereVector(g / np.linalg.norm(g))


def deloc_check(e: SphereVector, eps: float) -> bool:
    """Whether every |e_i| <= N^(-1/4 - eps)."""
    if not 0.0 < eps < 0.25:
        raise DomainError(f"eps must lie in (0, 1/4), got {eps}")
    return bool(np.max(np.abs(e.components)) <= e.n ** (-0.25 - eps))


def quadratic_form(x: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Re <e, X e> for one vector or a stack of row vectors."""
    return np.real(np.einsum("...i,ij,...j->...", np.conj(e), x, e))


def j_n_monte_carlo(x: np.ndarray, theta: float, n_samples: int, rng: np.random.Generator,
                    seed: int | None = None) -> Estimate:
    """(1/N) log-mean-exp of theta N <e, X e> over uniform sphere draws.

    The estimate is biased low for finite n_samples (Jensen), and the
    integrand is heavy-tailed once theta N lambda_max is large.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    check_self_adjoint(x)
    n = x.shape[0]
    field = Field.COMPLEX if np.iscomplexobj(x) else Field.REAL

    top = float(np.max(np.linalg.eigvalsh(x)))
    if theta * n * top > _MC_EXPONENT_CAP:
        logger.warning(
            "theta*N*lambda_max = %.1f exceeds %.0f; the Monte Carlo spherical integral is unreliable here",
            theta * n * top, _MC_EXPONENT_CAP,
        )

    exponents = []
    done = 0
    while done < n_samples:
        size = min(_CHUNK, n_samples - done)
        e = sample_sphere_batch(n, field, rng, size)
        exponents.append(theta * n * quadratic_form(x, e))
        done += size
    value, se = jackknife_log_mean_exp(np.concatenate(exponents))
    return Estimate(value=value / n, std_err=se / n, n_samples=n_samples, seed=seed)


def _contour_log_integral(c: np.ndarray, a: float) -> float:
    """ln of Gamma(aN)/(2 pi i) * integral of e^s prod (s - c_k)^(-a) ds."""
    n = c.size
    big_a = a * n
    c_max = float(np.max(c))

    def dh(s: float) -> float:
        return 1.0 - float(np.sum(a / (s - c)))

    lo, hi = c_max + 0.5 * a, c_max + big_a
    if dh(hi) <= 0.0:
        gamma = hi
    else:
        gamma = brentq(dh, lo, hi, xtol=1e-14 * max(1.0, abs(hi)))
    d = gamma - c

    def phase(y):
        return np.exp(1j * y - a * np.sum(np.log1p(1j * y / d)))

    curvature = float(np.sum(a / (d * d)))
    window = _CONTOUR_WINDOW / math.sqrt(curvature)
    head, _ = quad(lambda y: float(np.real(phase(y))), 0.0, window,
                   epsabs=_CONTOUR_EPSABS, epsrel=_CONTOUR_EPSREL, limit=400)
    # Fourier-type tail: Re(e^{iy} phi) = cos(y) Re(phi) - sin(y) Im(phi)

    def envelope(y):
        return np.exp(-a * np.sum(np.log1p(1j * y / d)))

    tail_cos, _ = quad(lambda y: float(np.real(envelope(y))), window, np.inf, weight="cos", wvar=1.0)
    tail_sin, _ = quad(lambda y: float(np.imag(envelope(y))), window, np.inf, weight="sin", wvar=1.0)
    integral = head + tail_cos - tail_sin
    if not integral > 0:
        raise ConvergenceError(f"contour integral came out non-positive ({integral!r})")
    return gammaln(big_a) + gamma - a * float(np.sum(np.log(d))) - math.log(math.pi) + math.log(integral)


def j_n_contour(eigs, theta: float, beta: int) -> float:
    """Exact J_N(X, theta) = (1/N) ln E_e exp(theta N <e, X e>) from the spectrum of X.

    The weights |e_k|^2 in the eigenbasis are Dirichlet(beta/2, ...), so the
    expectation is a single contour integral, taken along the vertical line
    through its real saddle point.
    """
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if beta not in (1, 2):
        raise DomainError(f"beta must be 1 or 2, got {beta}")
    lam = np.asarray(getattr(eigs, "eigenvalues", eigs), dtype=float)
    n = lam.size
    if theta == 0 or n == 0:
        return 0.0
    if n == 1:
        return theta * float(lam[0])
    c = theta * n * lam
    return _contour_log_integral(c, 0.5 * beta) / n


def j_limit(inp: JLimitInput) -> float:
    """J(mu, theta, lam) = theta v - (beta/2) integral ln(1 + (2/beta) theta (v - y)) d mu(y)."""
    law, theta, lam, beta = inp.law, inp.theta, inp.lam, inp.beta
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if beta not in (1, 2):
        raise DomainError(f"beta must be 1 or 2, got {beta}")
    if lam < law.right_edge:
        raise DomainError(f"lam = {lam} lies inside the support (edge {law.right_edge:g})")
    if theta == 0:
        return 0.0

    u = 2.0 * theta / beta
    subcritical = u <= h_max(law, lam)
    if subcritical and law.kind is SpectralKind.SEMICIRCLE:
        return theta * theta / beta
    gamma = inverse_stieltjes(law, u) if subcritical else lam
    if gamma < law.right_edge:
        raise DomainError(f"log argument vanishes inside the support (gamma = {gamma})")
    v = gamma - beta / (2.0 * theta)
    # 1 + u v - u y = u (gamma - y)
    return theta * v - 0.5 * beta * (math.log(u) + log_potential(law, gamma))


def inner_log_annealed(e: np.ndarray, theta: float, law: EntryLaw, kind: EnsembleKind,
                       l: int | None = None) -> np.ndarray:
    """N * inner_annealed for one vector or a stack of row vectors.

    Wigner kinds sum L over i < j at 2 theta sqrt(N) e_i conj(e_j) plus the
    diagonal law at theta sqrt(N) |e_i|^2; block kinds only pair the first l
    coordinates with the rest.
    """
    e = np.asarray(e)
    n = e.shape[-1]
    root = math.sqrt(n)
    if kind.is_block:
        if l is None:
            raise DomainError("block kinds need l")
        t = 2.0 * theta * root * np.einsum("...i,...j->...ij", e[..., :l], np.conj(e[..., l:]))
        return np.sum(laws.log_mgf(law, t), axis=(-2, -1))

    iu, ju = np.triu_indices(n, 1)
    t = 2.0 * theta * root * e[..., iu] * np.conj(e[..., ju])
    off = np.sum(laws.log_mgf(law, t), axis=-1)
    diag_law = diagonal_entry_law(kind, law)
    diag = np.sum(laws.log_mgf(diag_law, theta * root * np.abs(e) ** 2), axis=-1)
    return off + diag


def inner_annealed(e: SphereVector, theta: float, law: EntryLaw, kind: EnsembleKind,
                   l: int | None = None) -> float:
    """(1/N) ln E_X exp(theta N <e, X e>) for a fixed unit vector e."""
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if theta == 0:
        return 0.0
    return float(inner_log_annealed(e.components, theta, law, kind, l)) / e.n


@dataclass
class NormSplit:
    """Beta proposal for s = |e1|^2 centred on the annealed maximizer."""

    base: stats.rv_continuous
    proposal: stats.rv_continuous


def norm_split(spec: EnsembleSpec, theta: float) -> NormSplit:
    i = spec.beta
    x_star = f_wishart(theta, i, spec.alpha).x_star
    kappa = 0.5 * i * spec.size
    return NormSplit(
        base=stats.beta(0.5 * i * spec.l, 0.5 * i * spec.m),
        proposal=stats.beta(kappa * x_star, kappa * (1.0 - x_star)),
    )


def sample_split_sphere(spec: EnsembleSpec, split: NormSplit, rng: np.random.Generator,
                        size: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows e = (sqrt(s) u1, sqrt(1-s) u2) with s from the proposal; returns (e, log p(s)/q(s))."""
    field = spec.kind.field
    s = split.proposal.rvs(size=size, random_state=rng)
    s = np.clip(s, 1e-300, 1.0 - 1e-16)
    u1 = sample_sphere_batch(spec.l, field, rng, size)
    u2 = sample_sphere_batch(spec.m, field, rng, size)
    e = np.concatenate([np.sqrt(s)[:, None] * u1, np.sqrt(1.0 - s)[:, None] * u2], axis=1)
    log_ratio = split.base.logpdf(s) - split.proposal.logpdf(s)
    return e, log_ratio


def f_n_estimate(spec: EnsembleSpec, theta: float, n_samples: int, rng: np.random.Generator,
                 split_norm: bool = False, seed: int | None = None) -> Estimate:
    """(1/N) ln E_e exp(N inner_annealed(e)): Monte Carlo over e only, X integrated exactly."""
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    n = spec.size
    if theta == 0:
        return Estimate(value=0.0, std_err=0.0, n_samples=n_samples, seed=seed)
    if split_norm and not spec.kind.is_block:
        raise DomainError("norm splitting applies to block kinds")

    split = norm_split(spec, theta) if split_norm else None
    # keep each chunk's tilt array near a few million entries
    pairs = spec.l * spec.m if spec.kind.is_block else n * (n - 1) // 2
    chunk = max(1, min(_CHUNK, 4_000_000 // max(pairs, 1)))
    logs = []
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        if split is not None:
            e, log_ratio = sample_split_sphere(spec, split, rng, size)
        else:
            e = sample_sphere_batch(n, spec.kind.field, rng, size)
            log_ratio = 0.0
        logs.append(inner_log_annealed(e, theta, spec.law, spec.kind, spec.l) + log_ratio)
        done += size
    value, se = jackknife_log_mean_exp(np.concatenate(logs))
    return Estimate(value=value / n, std_err=se / n, n_samples=n_samples, seed=seed)
