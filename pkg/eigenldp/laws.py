"""Centered entry laws: log-Laplace transforms, sharp sub-Gaussian checks, tilting."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from rapidfuzz import fuzz, process
from scipy.special import expit, logsumexp, softmax

from .errors import DomainError

logger = logging.getLogger(__name__)

_SQRT3 = math.sqrt(3.0)
_LN2 = math.log(2.0)

# log T(t) must stay representable: |t| * max|atom| <= 700
_EXP_BOUND = 700.0
# Series cut-offs for the uniform law around t = 0
_UNIFORM_SERIES_L = 1e-4
_UNIFORM_SERIES_DL = 1e-2

_MEAN_TOL = 1e-12
_PROB_TOL = 1e-12
_VARIANCE_TOL = 1e-10
_SUBGAUSS_TOL = 1e-12
_COMPLEX_PHASES = 8

# Names accepted without confirmation when the fuzzy score is at least this high
_AUTOCORRECT_SCORE = 90.0


class LawKind(str, Enum):
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    DISCRETE = "discrete"
    SCALED = "scaled"


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"


@dataclass(frozen=True)
class EntryLaw:
    """A centered scalar law.

    Complex laws are (Re, Im) pairs of independent copies of the real law
    with the same kind, each rescaled to variance/2.
    """

    kind: LawKind
    variance: float = 1.0
    field: Field = Field.REAL
    atoms: tuple[tuple[float, float], ...] = ()
    base: EntryLaw | None = None

    def __post_init__(self) -> None:
        if self.variance < 0 or not math.isfinite(self.variance):
            raise DomainError(f"variance must be finite and >= 0, got {self.variance}")
        if self.kind in (LawKind.RADEMACHER, LawKind.UNIFORM):
            if abs(self.variance - 1.0) > _VARIANCE_TOL:
                raise DomainError(f"{self.kind.value} has unit variance; use scaled() to rescale")
        elif self.kind is LawKind.DISCRETE:
            _validate_atoms(self.atoms, self.variance)
        elif self.kind is LawKind.SCALED:
            if self.base is None:
                raise DomainError("scaled law needs a base law")
            if self.base.field is not Field.REAL:
                raise DomainError("scaled law base must be real")
            if self.base.variance == 0 and self.variance > 0:
                raise DomainError("cannot rescale a degenerate base law")

    @property
    def name(self) -> str:
        if self.kind is LawKind.SCALED:
            return f"scaled({self.base.name}, {self.variance:g})"
        return self.kind.value


def _validate_atoms(atoms: tuple[tuple[float, float], ...], variance: float) -> None:
    if not atoms:
        raise DomainError("discrete law needs at least one atom")
    values = np.array([a[0] for a in atoms], dtype=float)
    probs = np.array([a[1] for a in atoms], dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError("atom values must be finite")
    if np.any(probs < 0):
        raise DomainError("atom probabilities must be nonnegative")
    if abs(probs.sum() - 1.0) > _PROB_TOL:
        raise DomainError(f"atom probabilities sum to {probs.sum()!r}, not 1")
    mean = float(probs @ values)
    if abs(mean) > _MEAN_TOL:
        raise DomainError(f"discrete law is not centered (mean {mean:.3e})")
    second = float(probs @ values**2)
    if abs(second - variance) > _VARIANCE_TOL:
        raise DomainError(f"second moment {second!r} does not match variance {variance!r}")


# ---------------------------------------------------------------------------
# Constructors and registry
# ---------------------------------------------------------------------------

def rademacher() -> EntryLaw:
    return EntryLaw(LawKind.RADEMACHER)


def uniform_sqrt3() -> EntryLaw:
    """Uniform on [-sqrt(3), sqrt(3)], unit variance."""
    return EntryLaw(LawKind.UNIFORM)


def gaussian(variance: float = 1.0) -> EntryLaw:
    return EntryLaw(LawKind.GAUSSIAN, variance=variance)


def discrete(atoms) -> EntryLaw:
    """Finite table of (value, probability) pairs; the variance is read off the table."""
    table = tuple((float(v), float(p)) for v, p in atoms)
    variance = sum(p * v * v for v, p in table)
    return EntryLaw(LawKind.DISCRETE, variance=variance, atoms=table)


def scaled(base: EntryLaw, variance: float) -> EntryLaw:
    """sqrt(variance / base.variance) * base."""
    return EntryLaw(LawKind.SCALED, variance=variance, base=base)


def complexify(law: EntryLaw) -> EntryLaw:
    if law.field is Field.COMPLEX:
        return law
    return replace(law, field=Field.COMPLEX)


def real_part_law(law: EntryLaw) -> EntryLaw:
    """The real law of one component of a complex law (variance/2)."""
    if law.field is Field.REAL:
        return law
    return scaled(replace(law, field=Field.REAL), law.variance / 2.0)


def as_real(law: EntryLaw) -> EntryLaw:
    """Same kind and variance, real field."""
    return replace(law, field=Field.REAL)


def sparse_ternary() -> EntryLaw:
    """{-2: 1/8, 0: 3/4, 2: 1/8}: unit variance, fourth moment 4."""
    return discrete([(-2.0, 0.125), (0.0, 0.75), (2.0, 0.125)])


def symmetric_ternary() -> EntryLaw:
    """{-sqrt(2): 1/4, 0: 1/2, sqrt(2): 1/4}: unit variance, fourth moment 2."""
    r = math.sqrt(2.0)
    return discrete([(-r, 0.25), (0.0, 0.5), (r, 0.25)])


_REGISTRY = {
    "rademacher": rademacher,
    "uniform": uniform_sqrt3,
    "uniformsqrt3": uniform_sqrt3,
    "gaussian": gaussian,
    "sparse": sparse_ternary,
    "ternary": symmetric_ternary,
}


def law_names() -> list[str]:
    return sorted(_REGISTRY)


def law_from_name(name: str, field: Field | str = Field.REAL) -> EntryLaw:
    """Resolve a law name, tolerating small typos.

    Raises DomainError with the closest registered name if nothing is close enough.
    """
    key = name.strip().lower().replace("-", "").replace("_", "")
    factory = _REGISTRY.get(key)
    if factory is None:
        best = process.extractOne(key, list(_REGISTRY), scorer=fuzz.ratio)
        if best is not None and best[1] >= _AUTOCORRECT_SCORE:
            logger.info("Interpreting law %r as %r", name, best[0])
            factory = _REGISTRY[best[0]]
        else:
            hint = f"; did you mean {best[0]!r}?" if best is not None else ""
            raise DomainError(f"unknown entry law {name!r}{hint}")
    law = factory()
    if Field(field) is Field.COMPLEX:
        law = complexify(law)
    return law


def law_to_json(law: EntryLaw) -> dict:
    params: dict = {}
    if law.kind is LawKind.DISCRETE:
        params["atoms"] = [[v, p] for v, p in law.atoms]
    elif law.kind is LawKind.SCALED:
        params["base"] = law_to_json(law.base)
    return {
        "kind": law.kind.value,
        "params": params,
        "variance": law.variance,
        "field": law.field.value,
    }


def law_from_json(obj: dict) -> EntryLaw:
    try:
        kind = LawKind(obj["kind"])
        field = Field(obj.get("field", "real"))
        params = obj.get("params") or {}
        variance = float(obj.get("variance", 1.0))
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"malformed entry-law object: {exc}") from exc

    if kind is LawKind.DISCRETE:
        law = discrete(params.get("atoms", []))
    elif kind is LawKind.SCALED:
        if "base" not in params:
            raise DomainError("scaled law object lacks params.base")
        law = scaled(law_from_json(params["base"]), variance)
    elif kind is LawKind.GAUSSIAN:
        law = gaussian(variance)
    else:
        law = EntryLaw(kind, variance=variance)
    return replace(law, field=field)


# ---------------------------------------------------------------------------
# Real-law kernels (vectorized over t)
# ---------------------------------------------------------------------------

def _scale(law: EntryLaw) -> float:
    if law.variance == 0:
        return 0.0
    return math.sqrt(law.variance / law.base.variance)


def _atom_arrays(law: EntryLaw) -> tuple[np.ndarray, np.ndarray]:
    values = np.array([a[0] for a in law.atoms], dtype=float)
    probs = np.array([a[1] for a in law.atoms], dtype=float)
    return values, probs


def _support_radius(law: EntryLaw) -> float:
    if law.kind is LawKind.RADEMACHER:
        return 1.0
    if law.kind is LawKind.UNIFORM:
        return _SQRT3
    if law.kind is LawKind.GAUSSIAN:
        return math.inf
    if law.kind is LawKind.DISCRETE:
        return float(max(abs(v) for v, _ in law.atoms))
    if law.variance == 0:
        return 0.0
    return _scale(law) * _support_radius(law.base)


def t_bound(law: EntryLaw) -> float:
    """Largest |t| accepted by log_mgf (per component for complex laws)."""
    radius = _support_radius(real_part_law(law))
    if radius == 0 or math.isinf(radius):
        return math.inf
    return _EXP_BOUND / radius


def _real_log_mgf(law: EntryLaw, t: np.ndarray) -> np.ndarray:
    if law.kind is LawKind.RADEMACHER:
        a = np.abs(t)
        return a + np.log1p(np.exp(-2.0 * a)) - _LN2
    if law.kind is LawKind.UNIFORM:
        u = _SQRT3 * np.abs(t)
        small = u < _UNIFORM_SERIES_L
        safe = np.where(small, 1.0, u)
        big = safe + np.log1p(-np.exp(-2.0 * safe)) - np.log(2.0 * safe)
        u2 = u * u
        return np.where(small, np.log1p(u2 / 6.0 + u2 * u2 / 120.0), big)
    if law.kind is LawKind.GAUSSIAN:
        return 0.5 * law.variance * t * t
    if law.kind is LawKind.DISCRETE:
        values, probs = _atom_arrays(law)
        return logsumexp(np.multiply.outer(t, values), b=probs, axis=-1)
    s = _scale(law)
    return _real_log_mgf(law.base, s * t)


def _real_dlog_mgf(law: EntryLaw, t: np.ndarray) -> np.ndarray:
    if law.kind is LawKind.RADEMACHER:
        return np.tanh(t)
    if law.kind is LawKind.UNIFORM:
        u = _SQRT3 * t
        small = np.abs(u) < _UNIFORM_SERIES_DL
        safe = np.where(small, 1.0, u)
        return _SQRT3 * np.where(small, u / 3.0 - u**3 / 45.0, 1.0 / np.tanh(safe) - 1.0 / safe)
    if law.kind is LawKind.GAUSSIAN:
        return law.variance * t
    if law.kind is LawKind.DISCRETE:
        values, probs = _atom_arrays(law)
        weights = softmax(np.multiply.outer(t, values) + np.log(probs), axis=-1)
        return weights @ values
    s = _scale(law)
    return s * _real_dlog_mgf(law.base, s * t)


def _real_d2log_mgf(law: EntryLaw, t: np.ndarray) -> np.ndarray:
    if law.kind is LawKind.RADEMACHER:
        th = np.tanh(t)
        return 1.0 - th * th
    if law.kind is LawKind.UNIFORM:
        u = np.abs(_SQRT3 * t)
        small = u < _UNIFORM_SERIES_DL
        safe = np.where(small, 1.0, u)
        # 1/sinh(u)^2 written through exp(-2u) to stay finite for large u
        q = np.exp(-2.0 * safe)
        inv_sinh2 = 4.0 * q / (1.0 - q) ** 2
        u2 = u * u
        series = 1.0 - u2 / 5.0 + 2.0 * u2 * u2 / 63.0
        return np.where(small, series, 3.0 * (1.0 / safe**2 - inv_sinh2))
    if law.kind is LawKind.GAUSSIAN:
        return np.full_like(np.asarray(t, dtype=float), law.variance)
    if law.kind is LawKind.DISCRETE:
        values, probs = _atom_arrays(law)
        weights = softmax(np.multiply.outer(t, values) + np.log(probs), axis=-1)
        mean = weights @ values
        return weights @ values**2 - mean**2
    s = _scale(law)
    return s * s * _real_d2log_mgf(law.base, s * t)


def _real_sample(law: EntryLaw, rng: np.random.Generator, size) -> np.ndarray:
    if law.kind is LawKind.RADEMACHER:
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)
    if law.kind is LawKind.UNIFORM:
        return rng.uniform(-_SQRT3, _SQRT3, size)
    if law.kind is LawKind.GAUSSIAN:
        return rng.normal(0.0, math.sqrt(law.variance), size)
    if law.kind is LawKind.DISCRETE:
        values, probs = _atom_arrays(law)
        return rng.choice(values, size=size, p=probs)
    return _scale(law) * _real_sample(law.base, rng, size)


def _real_sample_tilted(law: EntryLaw, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if law.kind is LawKind.RADEMACHER:
        return np.where(rng.random(t.shape) < expit(2.0 * t), 1.0, -1.0)
    if law.kind is LawKind.UNIFORM:
        c = _SQRT3
        u = rng.random(t.shape)
        zero = t == 0.0
        safe = np.where(zero, 1.0, t)
        a = np.abs(safe)
        # inverse cdf of exp(t x) on [-c, c], measured from the favoured edge
        v = np.where(safe > 0, 1.0 - u, u)
        off = -np.log1p(v * np.expm1(-2.0 * c * a)) / a
        x = np.where(safe > 0, c - off, -c + off)
        return np.where(zero, c * (2.0 * u - 1.0), np.clip(x, -c, c))
    if law.kind is LawKind.GAUSSIAN:
        return rng.normal(law.variance * t, math.sqrt(law.variance))
    if law.kind is LawKind.DISCRETE:
        values, probs = _atom_arrays(law)
        weights = softmax(np.multiply.outer(t, values) + np.log(probs), axis=-1)
        cum = np.cumsum(weights, axis=-1)
        u = rng.random(t.shape)[..., None]
        idx = np.minimum((cum < u).sum(axis=-1), len(values) - 1)
        return values[idx]
    s = _scale(law)
    return s * _real_sample_tilted(law.base, s * t, rng)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def _check_bound(law: EntryLaw, t) -> None:
    bound = t_bound(law)
    if math.isinf(bound):
        return
    arr = np.asarray(t)
    if law.field is Field.COMPLEX:
        worst = max(float(np.max(np.abs(arr.real), initial=0.0)), float(np.max(np.abs(arr.imag), initial=0.0)))
    else:
        worst = float(np.max(np.abs(arr), initial=0.0))
    if not math.isfinite(worst) or worst > bound:
        raise DomainError(f"|t| = {worst:.6g} exceeds the admissible bound {bound:.6g} for {law.name}")


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def log_mgf(law: EntryLaw, t):
    """L(t) = ln E exp(Re(a conj(t))). Accepts scalars or arrays."""
    _check_bound(law, t)
    if law.field is Field.COMPLEX:
        arr = np.asarray(t, dtype=complex)
        comp = real_part_law(law)
        out = _real_log_mgf(comp, arr.real) + _real_log_mgf(comp, arr.imag)
    else:
        arr = np.asarray(t, dtype=float)
        out = _real_log_mgf(law, arr)
    return _unwrap(out, t)


def tilted_mean(law: EntryLaw, t):
    """L'(t); for complex laws L_c'(Re t) + i L_c'(Im t)."""
    _check_bound(law, t)
    if law.field is Field.COMPLEX:
        arr = np.asarray(t, dtype=complex)
        comp = real_part_law(law)
        out = _real_dlog_mgf(comp, arr.real) + 1j * _real_dlog_mgf(comp, arr.imag)
        return complex(out) if np.ndim(t) == 0 else out
    out = _real_dlog_mgf(law, np.asarray(t, dtype=float))
    return _unwrap(out, t)


def tilted_variance(law: EntryLaw, t):
    """E|a - mean|^2 under the tilt; L''(t) for real laws."""
    _check_bound(law, t)
    if law.field is Field.COMPLEX:
        arr = np.asarray(t, dtype=complex)
        comp = real_part_law(law)
        out = _real_d2log_mgf(comp, arr.real) + _real_d2log_mgf(comp, arr.imag)
    else:
        out = _real_d2log_mgf(law, np.asarray(t, dtype=float))
    return _unwrap(out, t)


def sample(law: EntryLaw, rng: np.random.Generator, size=None) -> np.ndarray:
    if law.field is Field.COMPLEX:
        comp = real_part_law(law)
        return _real_sample(comp, rng, size) + 1j * _real_sample(comp, rng, size)
    return _real_sample(law, rng, size)


def sample_tilted(law: EntryLaw, t, rng: np.random.Generator) -> np.ndarray:
    """One draw per entry of t from the law tilted by that entry."""
    _check_bound(law, t)
    if law.field is Field.COMPLEX:
        arr = np.asarray(t, dtype=complex)
        comp = real_part_law(law)
        return _real_sample_tilted(comp, arr.real, rng) + 1j * _real_sample_tilted(comp, arr.imag, rng)
    return _real_sample_tilted(law, np.asarray(t, dtype=float), rng)


@dataclass(frozen=True)
class TiltedLaw:
    """law tilted by exp(Re(a conj(t))) / T(t)."""

    law: EntryLaw
    t: complex | float

    @property
    def log_normalizer(self) -> float:
        return log_mgf(self.law, self.t)

    @property
    def tilted_mean(self):
        return tilted_mean(self.law, self.t)

    @property
    def tilted_variance(self) -> float:
        return tilted_variance(self.law, self.t)

    def log_likelihood_ratio(self, a):
        """ln(d law / d tilted)(a) = -Re(a conj(t)) + L(t)."""
        a = np.asarray(a)
        out = -np.real(a * np.conj(self.t)) + self.log_normalizer
        return _unwrap(out, a)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = () if size is None else size
        t = np.full(shape, self.t, dtype=complex if self.law.field is Field.COMPLEX else float)
        return sample_tilted(self.law, t, rng)


def tilt(law: EntryLaw, t) -> TiltedLaw:
    _check_bound(law, t)
    if law.field is Field.REAL and np.iscomplexobj(t):
        if np.imag(t) != 0:
            raise DomainError("real laws take a real tilt")
        t = float(np.real(t))
    if not math.isfinite(log_mgf(law, t)):
        raise DomainError(f"T(t) is not finite at t = {t!r}")
    return TiltedLaw(law, t)


@dataclass
class SubgaussReport:
    max_gap: float
    argmax_t: complex | float
    passed: bool
    t_grid: str


def check_sharp_subgaussian(law: EntryLaw, t_max: float = 20.0, n_grid: int = 4001) -> SubgaussReport:
    """Max of L(t) - t^2 var / 2 on a symmetric grid.

    Complex laws are scanned over |t| in [0, t_max] at 8 phases against
    |t|^2 var / 4.
    """
    if t_max <= 0:
        raise DomainError("t_max must be positive")
    if n_grid < 3:
        raise DomainError("n_grid must be at least 3")

    if law.field is Field.COMPLEX:
        radii = np.linspace(0.0, t_max, n_grid)
        phases = np.exp(2j * np.pi * np.arange(_COMPLEX_PHASES) / _COMPLEX_PHASES)
        grid = np.multiply.outer(phases, radii).ravel()
        gap = log_mgf(law, grid) - np.abs(grid) ** 2 * law.variance / 4.0
        desc = f"|t| in linspace(0, {t_max:g}, {n_grid}) x {_COMPLEX_PHASES} phases"
    else:
        grid = np.linspace(-t_max, t_max, n_grid)
        gap = log_mgf(law, grid) - grid**2 * law.variance / 2.0
        desc = f"linspace({-t_max:g}, {t_max:g}, {n_grid})"

    k = int(np.argmax(gap))
    argmax = complex(grid[k]) if law.field is Field.COMPLEX else float(grid[k])
    max_gap = float(gap[k])
    return SubgaussReport(
        max_gap=max_gap,
        argmax_t=argmax,
        passed=max_gap <= _SUBGAUSS_TOL,
        t_grid=desc,
    )


def moment_bound(n: int) -> float:
    """(2n)(2n-1)...(n+1) / 2^n, the Gaussian 2n-th moment."""
    return math.prod(range(n + 1, 2 * n + 1)) / 2**n


def moment_criterion(even_moments) -> bool:
    """True iff the k-th entry (the 2k-th moment) is at most moment_bound(k) for all k."""
    moments = list(even_moments)
    if not moments:
        raise DomainError("moment list is empty")
    return all(m <= moment_bound(k) * (1.0 + 1e-12) for k, m in enumerate(moments, start=1))


def even_moments(law: EntryLaw, n: int) -> list[float]:
    """First n even moments E a^2, ..., E a^(2n) of a real law."""
    if law.field is Field.COMPLEX:
        raise DomainError("even moments are defined for real laws")
    if n < 1:
        raise DomainError("n must be at least 1")
    ks = range(1, n + 1)
    if law.kind is LawKind.RADEMACHER:
        return [1.0 for _ in ks]
    if law.kind is LawKind.UNIFORM:
        return [3.0**k / (2 * k + 1) for k in ks]
    if law.kind is LawKind.GAUSSIAN:
        return [law.variance**k * math.prod(range(1, 2 * k, 2)) for k in ks]
    if law.kind is LawKind.DISCRETE:
        values, probs = _atom_arrays(law)
        return [float(probs @ values ** (2 * k)) for k in ks]
    s = _scale(law)
    return [s ** (2 * k) * m for k, m in zip(ks, even_moments(law.base, n))]


def cubic_constant(law: EntryLaw, t_max: float = 5.0, n_grid: int = 400) -> float:
    """sup over t != 0 of |L'(t) - var t| / |t|^3 on a log-spaced grid."""
    comp = real_part_law(law)
    pos = np.logspace(-2, math.log10(t_max), n_grid)
    grid = np.concatenate([-pos[::-1], pos])
    ratio = np.abs(_real_dlog_mgf(comp, grid) - comp.variance * grid) / np.abs(grid) ** 3
    c = float(np.max(ratio))
    # |z|^3 bounds |Re z|^3 + |Im z|^3 up to a factor 2
    return 2.0 * c if law.field is Field.COMPLEX else c
