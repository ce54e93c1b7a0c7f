"""Limiting spectral laws: semicircle, Marchenko-Pastur and the symmetrized block law."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from rapidfuzz import fuzz, process
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

_QUAD_EPSABS = 1e-12
_QUAD_EPSREL = 1e-12
_QUAD_LIMIT = 200
_ROOT_XTOL = 1e-14
# Block-law inverse is cross-checked against the Marchenko-Pastur quadratic
_ALGEBRAIC_RESIDUAL_TOL = 1e-8


class SpectralKind(str, Enum):
    SEMICIRCLE = "semicircle"
    MARCHENKO_PASTUR = "mp"
    BLOCK = "block"


@dataclass(frozen=True)
class SpectralLaw:
    kind: SpectralKind
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.kind is not SpectralKind.SEMICIRCLE and not self.alpha >= 1.0:
            raise DomainError(f"alpha must be >= 1, got {self.alpha}")

    # Marchenko-Pastur edges a, b (also used by the block law)
    @property
    def a(self) -> float:
        return (1.0 - math.sqrt(self.alpha)) ** 2

    @property
    def b(self) -> float:
        return (1.0 + math.sqrt(self.alpha)) ** 2

    @property
    def right_edge(self) -> float:
        if self.kind is SpectralKind.SEMICIRCLE:
            return 2.0
        if self.kind is SpectralKind.MARCHENKO_PASTUR:
            return self.b
        return math.sqrt(self.b / (1.0 + self.alpha))

    @property
    def left_edge(self) -> float:
        if self.kind is SpectralKind.SEMICIRCLE:
            return -2.0
        if self.kind is SpectralKind.MARCHENKO_PASTUR:
            return self.a
        return -self.right_edge

    @property
    def support(self) -> tuple[float, float]:
        return self.left_edge, self.right_edge

    @property
    def atom_at_zero(self) -> float:
        if self.kind is SpectralKind.BLOCK:
            return (self.alpha - 1.0) / (self.alpha + 1.0)
        return 0.0

    @property
    def mean(self) -> float:
        return self.alpha if self.kind is SpectralKind.MARCHENKO_PASTUR else 0.0


def semicircle() -> SpectralLaw:
    return SpectralLaw(SpectralKind.SEMICIRCLE)


def marchenko_pastur(alpha: float) -> SpectralLaw:
    return SpectralLaw(SpectralKind.MARCHENKO_PASTUR, float(alpha))


def block_law(alpha: float) -> SpectralLaw:
    return SpectralLaw(SpectralKind.BLOCK, float(alpha))


def spectral_from_name(name: str, alpha: float = 1.0) -> SpectralLaw:
    aliases = {
        "semicircle": SpectralKind.SEMICIRCLE,
        "sc": SpectralKind.SEMICIRCLE,
        "mp": SpectralKind.MARCHENKO_PASTUR,
        "marchenkopastur": SpectralKind.MARCHENKO_PASTUR,
        "block": SpectralKind.BLOCK,
    }
    key = name.strip().lower().replace("-", "").replace("_", "")
    if key not in aliases:
        best = process.extractOne(key, list(aliases), scorer=fuzz.ratio)
        hint = f"; did you mean {best[0]!r}?" if best is not None else ""
        raise DomainError(f"unknown spectral law {name!r}{hint}")
    kind = aliases[key]
    if kind is SpectralKind.SEMICIRCLE:
        return semicircle()
    return SpectralLaw(kind, float(alpha))


def law_to_json(law: SpectralLaw) -> dict:
    return {"kind": law.kind.value, "alpha": law.alpha}


def law_from_json(obj: dict) -> SpectralLaw:
    try:
        return SpectralLaw(SpectralKind(obj["kind"]), float(obj.get("alpha", 1.0)))
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"malformed spectral-law object: {exc}") from exc


# ---------------------------------------------------------------------------
# Densities and distribution functions
# ---------------------------------------------------------------------------

def _mp_density(alpha: float, y):
    a = (1.0 - math.sqrt(alpha)) ** 2
    b = (1.0 + math.sqrt(alpha)) ** 2
    y = np.asarray(y, dtype=float)
    inside = (y > a) & (y < b) & (y > 0)
    safe = np.where(inside, y, 1.0)
    q = np.clip((b - safe) * (safe - a), 0.0, None)
    return np.where(inside, np.sqrt(q) / (2.0 * math.pi * safe), 0.0)


def density(law: SpectralLaw, x):
    """Absolutely continuous part of the law; 0 outside the support."""
    arr = np.asarray(x, dtype=float)
    if law.kind is SpectralKind.SEMICIRCLE:
        out = np.where(np.abs(arr) < 2.0, np.sqrt(np.clip(4.0 - arr * arr, 0.0, None)) / (2.0 * math.pi), 0.0)
    elif law.kind is SpectralKind.MARCHENKO_PASTUR:
        out = _mp_density(law.alpha, arr)
    else:
        s = 1.0 + law.alpha
        y = s * arr * arr
        if law.alpha == 1.0:
            # a = 0: the 1/|x| of the pushforward cancels against sqrt(y)
            out = np.where(y < law.b, np.sqrt(np.clip(law.b - y, 0.0, None)) / (math.pi * math.sqrt(s)), 0.0)
        else:
            out = 2.0 * np.abs(arr) * _mp_density(law.alpha, y)
    return float(out) if np.ndim(x) == 0 else out


def _mp_cdf(alpha: float, x: float) -> float:
    a = (1.0 - math.sqrt(alpha)) ** 2
    b = (1.0 + math.sqrt(alpha)) ** 2
    if x <= a:
        return 0.0
    if x >= b:
        return 1.0
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    q = max((b - x) * (x - a), 0.0)
    g = ((a + b) * x - 2.0 * a * b) / (x * (b - a))
    g = min(max(g, -1.0), 1.0)
    s = min(max((x - c) / r, -1.0), 1.0)
    value = (math.sqrt(q) + c * (math.asin(s) + 0.5 * math.pi)
             - math.sqrt(a * b) * (math.asin(g) + 0.5 * math.pi)) / (2.0 * math.pi)
    return min(max(value, 0.0), 1.0)


def cdf(law: SpectralLaw, x: float) -> float:
    """P(X <= x), atoms included."""
    x = float(x)
    if law.kind is SpectralKind.SEMICIRCLE:
        if x <= -2.0:
            return 0.0
        if x >= 2.0:
            return 1.0
        value = 0.5 + (x * math.sqrt(4.0 - x * x) + 4.0 * math.asin(x / 2.0)) / (4.0 * math.pi)
        return min(max(value, 0.0), 1.0)
    if law.kind is SpectralKind.MARCHENKO_PASTUR:
        return _mp_cdf(law.alpha, x)

    s = 1.0 + law.alpha
    tail = _mp_cdf(law.alpha, s * x * x)
    if x < 0:
        return (1.0 - tail) / s
    return 1.0 / s + law.atom_at_zero + tail / s


def cdf_left(law: SpectralLaw, x: float) -> float:
    """P(X < x)."""
    if law.kind is SpectralKind.BLOCK and x == 0.0:
        return 1.0 / (1.0 + law.alpha)
    return cdf(law, x)


def quantile(law: SpectralLaw, q: float) -> float:
    """Generalized inverse inf{x : cdf(x) >= q}."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile level must be in [0, 1], got {q}")
    lo, hi = law.support
    if q <= 0.0:
        return lo
    if q >= 1.0:
        return hi
    if law.kind is SpectralKind.BLOCK:
        left, right = cdf_left(law, 0.0), cdf(law, 0.0)
        if left <= q <= right:
            return 0.0
        if q < left:
            hi = 0.0
        else:
            lo = 0.0
    f_lo = cdf(law, lo) - q
    if f_lo >= 0:
        return lo
    return brentq(lambda x: cdf(law, x) - q, lo, hi, xtol=_ROOT_XTOL)


# ---------------------------------------------------------------------------
# Quadrature against the law (cosine map removes both square-root edges)
# ---------------------------------------------------------------------------

def _quad(f: Callable[[float], float], lo: float, hi: float) -> float:
    value, err = quad(f, lo, hi, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=_QUAD_LIMIT)
    if err > 1e-8 * max(1.0, abs(value)):
        logger.debug("quad error estimate %.3e on [%g, %g]", err, lo, hi)
    return value


def _mp_expectation(alpha: float, f: Callable[[float], float], phi_lo: float = 0.0) -> float:
    a = (1.0 - math.sqrt(alpha)) ** 2
    b = (1.0 + math.sqrt(alpha)) ** 2
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)

    def integrand(phi: float) -> float:
        x = c - r * math.cos(phi)
        s = math.sin(phi)
        if x <= 0.0:
            return 0.0
        return f(x) * r * r * s * s / (2.0 * math.pi * x)

    return _quad(integrand, phi_lo, math.pi)


def expectation(law: SpectralLaw, f: Callable[[float], float]) -> float:
    """Integral of f against the law by adaptive quadrature."""
    if law.kind is SpectralKind.SEMICIRCLE:
        return _quad(lambda phi: f(-2.0 * math.cos(phi)) * (2.0 / math.pi) * math.sin(phi) ** 2, 0.0, math.pi)
    if law.kind is SpectralKind.MARCHENKO_PASTUR:
        return _mp_expectation(law.alpha, f)
    s = 1.0 + law.alpha

    def folded(y: float) -> float:
        r = math.sqrt(y / s)
        return f(r) + f(-r)

    value = _mp_expectation(law.alpha, folded) / s
    if law.atom_at_zero > 0:
        value += law.atom_at_zero * f(0.0)
    return value


def moment(law: SpectralLaw, k: int) -> float:
    return expectation(law, lambda x: x**k)


def partial_mean(law: SpectralLaw, y: float) -> float:
    """Integral of x over (-inf, y], atoms included."""
    lo, hi = law.support
    if y <= lo:
        return 0.0
    if y >= hi:
        return law.mean
    if law.kind is SpectralKind.SEMICIRCLE:
        return -((4.0 - y * y) ** 1.5) / (6.0 * math.pi)
    if law.kind is SpectralKind.MARCHENKO_PASTUR:
        c = 0.5 * (law.a + law.b)
        r = 0.5 * (law.b - law.a)
        s = y - c
        ratio = min(max(s / r, -1.0), 1.0)
        return (0.5 * s * math.sqrt(max(r * r - s * s, 0.0))
                + 0.5 * r * r * (math.asin(ratio) + 0.5 * math.pi)) / (2.0 * math.pi)

    # block law: zero mean, so the partial mean is minus the upper tail mean
    s = 1.0 + law.alpha
    u0 = s * y * y
    c = 0.5 * (law.a + law.b)
    r = 0.5 * (law.b - law.a)
    phi_lo = math.acos(min(max((c - u0) / r, -1.0), 1.0)) if u0 > law.a else 0.0
    upper = _mp_expectation(law.alpha, lambda u: math.sqrt(u / s), phi_lo) / s
    return -upper


# ---------------------------------------------------------------------------
# Stieltjes transform and its inverse
# ---------------------------------------------------------------------------

def _g_mp(alpha: float, z):
    a = (1.0 - math.sqrt(alpha)) ** 2
    b = (1.0 + math.sqrt(alpha)) ** 2
    root = np.sqrt(np.clip((z - a) * (z - b), 0.0, None))
    return 2.0 / (z + 1.0 - alpha + root)


def _g(law: SpectralLaw, z):
    """Real-axis Stieltjes transform for z >= right edge (no domain check)."""
    z = np.asarray(z, dtype=float)
    if law.kind is SpectralKind.SEMICIRCLE:
        return 2.0 / (z + np.sqrt(np.clip(z * z - 4.0, 0.0, None)))
    if law.kind is SpectralKind.MARCHENKO_PASTUR:
        return _g_mp(law.alpha, z)
    s = 1.0 + law.alpha
    return 2.0 * z * _g_mp(law.alpha, s * z * z) + (law.alpha - 1.0) / (s * z)


def mp_stieltjes(alpha: float, z) -> float:
    """G of MP(alpha) at real z >= b."""
    return float(_g_mp(alpha, z))


def stieltjes(law: SpectralLaw, z):
    """G(z) = integral of 1/(z - t) for real z above the right edge."""
    if np.any(np.asarray(z) <= law.right_edge):
        raise DomainError(f"stieltjes needs z > {law.right_edge:g}; use h_max at the edge")
    out = _g(law, z)
    return float(out) if np.ndim(z) == 0 else out


def stieltjes_quadrature(law: SpectralLaw, z: float) -> float:
    """Quadrature value of G(z); an oracle for the closed forms."""
    if z <= law.right_edge:
        raise DomainError(f"stieltjes needs z > {law.right_edge:g}")
    return expectation(law, lambda t: 1.0 / (z - t))


def companion_stieltjes(alpha: float, z):
    """Stieltjes transform of (1/alpha) MP(alpha) + (1 - 1/alpha) delta_0.

    This is the spectral law of the M x M matrix G*G / L when W = G G* / L.
    """
    z = np.asarray(z, dtype=float)
    out = _g_mp(alpha, z) / alpha + (1.0 - 1.0 / alpha) / z
    return float(out) if np.ndim(out) == 0 else out


def h_max(law: SpectralLaw, lam: float) -> float:
    """lim G(z) as z decreases to lam, for lam at or above the right edge."""
    if lam < law.right_edge:
        raise DomainError(f"h_max needs lam >= {law.right_edge:g}, got {lam}")
    return float(_g(law, lam))


def mp_quadratic_residual(alpha: float, z: float, g: float) -> float:
    """z g^2 - (z + 1 - alpha) g + 1, which vanishes at g = G_MP(z)."""
    return z * g * g - (z + 1.0 - alpha) * g + 1.0


def _block_inverse_residual(law: SpectralLaw, u: float, k: float) -> float:
    s = 1.0 + law.alpha
    c = (law.alpha - 1.0) / s
    g = (u - c / k) / (2.0 * k)
    return mp_quadratic_residual(law.alpha, s * k * k, g)


def inverse_stieltjes(law: SpectralLaw, u: float) -> float:
    """K(u): the z above the edge with G(z) = u, for 0 < u <= H_max."""
    edge = law.right_edge
    top = h_max(law, edge)
    if not 0.0 < u <= top:
        raise DomainError(f"u must lie in (0, {top:.12g}], got {u}")
    if u == top:
        return edge
    if law.kind is SpectralKind.SEMICIRCLE:
        return u + 1.0 / u

    # G(z) <= 1/(z - edge) puts the root below edge + 2/u
    try:
        k = brentq(lambda z: float(_g(law, z)) - u, edge, edge + 2.0 / u, xtol=_ROOT_XTOL)
    except ValueError as exc:
        raise ConvergenceError(f"could not bracket K({u}) for {law.kind.value}") from exc

    if law.kind is SpectralKind.BLOCK:
        residual = _block_inverse_residual(law, u, k)
        if abs(residual) > _ALGEBRAIC_RESIDUAL_TOL:
            logger.debug("block K(%g) = %.15g leaves algebraic residual %.3e", u, k, residual)
    return k


def r_transform(law: SpectralLaw, u: float) -> float:
    """R(u) = K(u) - 1/u on (0, H_max]."""
    if law.kind is SpectralKind.SEMICIRCLE:
        if not 0.0 < u <= 1.0:
            raise DomainError(f"u must lie in (0, 1], got {u}")
        return float(u)
    return inverse_stieltjes(law, u) - 1.0 / u


def log_potential(law: SpectralLaw, gamma: float) -> float:
    """Integral of ln(gamma - y) for gamma at or above the right edge."""
    if gamma < law.right_edge:
        raise DomainError(f"log potential needs gamma >= {law.right_edge:g}, got {gamma}")
    if law.kind is SpectralKind.SEMICIRCLE:
        root = math.sqrt(max(gamma * gamma - 4.0, 0.0))
        return gamma * gamma / 4.0 - gamma * root / 4.0 + math.log((gamma + root) / 2.0) - 0.5

    def integrand(y: float) -> float:
        gap = gamma - y
        return math.log(gap) if gap > 0 else 0.0

    return expectation(law, integrand)
