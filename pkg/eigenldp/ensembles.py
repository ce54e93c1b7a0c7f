"""Wigner and block (Wishart) ensembles: sampling, spectra, empirical measures."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from rapidfuzz import fuzz, process

from . import laws
from .errors import DomainError
from .laws import EntryLaw, Field
from .montecarlo import run_replicas, spawn_generators
from .spectral import SpectralLaw, block_law, semicircle

logger = logging.getLogger(__name__)

_SELF_ADJOINT_TOL = 1e-12
_CHIRAL_TOL = 1e-8


class EnsembleKind(str, Enum):
    WIGNER1 = "wigner1"
    WIGNER2 = "wigner2"
    BLOCK1 = "block1"
    BLOCK2 = "block2"

    @property
    def beta(self) -> int:
        return 1 if self in (EnsembleKind.WIGNER1, EnsembleKind.BLOCK1) else 2

    @property
    def is_block(self) -> bool:
        return self in (EnsembleKind.BLOCK1, EnsembleKind.BLOCK2)

    @property
    def field(self) -> Field:
        return Field.REAL if self.beta == 1 else Field.COMPLEX


_KIND_ALIASES = {
    "wigner1": EnsembleKind.WIGNER1,
    "wigner2": EnsembleKind.WIGNER2,
    "block1": EnsembleKind.BLOCK1,
    "block2": EnsembleKind.BLOCK2,
    "wishart1": EnsembleKind.BLOCK1,
    "wishart2": EnsembleKind.BLOCK2,
}


def kind_from_name(name: str) -> EnsembleKind:
    key = name.strip().lower().replace("-", "").replace("_", "")
    if key not in _KIND_ALIASES:
        best = process.extractOne(key, list(_KIND_ALIASES), scorer=fuzz.ratio)
        hint = f"; did you mean {best[0]!r}?" if best is not None else ""
        raise DomainError(f"unknown ensemble kind {name!r}{hint}")
    return _KIND_ALIASES[key]


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    law: EntryLaw
    n: int | None = None
    l: int | None = None
    m: int | None = None

    def __post_init__(self) -> None:
        if self.kind.is_block:
            if self.l is None or self.m is None:
                raise DomainError("block ensembles need l and m")
            if not 1 <= self.l <= self.m:
                raise DomainError(f"need 1 <= l <= m, got l={self.l}, m={self.m}")
        elif self.n is None or self.n < 2:
            raise DomainError(f"Wigner ensembles need n >= 2, got {self.n}")
        if abs(self.law.variance - 1.0) > 1e-10:
            raise DomainError(f"entry law must have unit variance, got {self.law.variance}")
        if self.law.field is not self.kind.field:
            raise DomainError(f"{self.kind.value} needs a {self.kind.field.value} entry law")

    @property
    def size(self) -> int:
        return self.l + self.m if self.kind.is_block else self.n

    @property
    def beta(self) -> int:
        return self.kind.beta

    @property
    def alpha(self) -> float | None:
        return self.m / self.l if self.kind.is_block else None

    @property
    def spectral_law(self) -> SpectralLaw:
        return block_law(self.alpha) if self.kind.is_block else semicircle()


def make_spec(kind: EnsembleKind | str, law: EntryLaw, n: int | None = None,
              l: int | None = None, m: int | None = None) -> EnsembleSpec:
    """Build a spec, complexifying a real law for the beta = 2 kinds."""
    kind = EnsembleKind(kind) if not isinstance(kind, EnsembleKind) else kind
    if kind.field is Field.COMPLEX:
        law = laws.complexify(law)
    if kind.is_block and n is not None and l is None and m is None:
        l, m = n // 2, n - n // 2
    return EnsembleSpec(kind, law, n=None if kind.is_block else n, l=l, m=m)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray

    def __post_init__(self) -> None:
        self.eigenvalues = np.sort(np.asarray(self.eigenvalues, dtype=float))

    @property
    def n(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])


@dataclass
class EmpiricalMeasure:
    """Uniform weights 1/n on sorted atoms."""

    atoms: np.ndarray
    weights: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.atoms = np.sort(np.asarray(self.atoms, dtype=float))
        if self.atoms.size == 0:
            raise DomainError("empirical measure needs at least one atom")
        self.weights = np.full(self.atoms.size, 1.0 / self.atoms.size)

    @property
    def n(self) -> int:
        return int(self.atoms.size)


def diagonal_entry_law(kind: EnsembleKind, law: EntryLaw) -> EntryLaw | None:
    """Law of the unnormalized diagonal entries; None for block kinds.

    Real diagonals have variance 2; complex ensembles keep a real unit-variance diagonal.
    """
    if kind is EnsembleKind.WIGNER1:
        return laws.scaled(law, 2.0)
    if kind is EnsembleKind.WIGNER2:
        return laws.as_real(law)
    return None


def diagonal_law(spec: EnsembleSpec) -> EntryLaw | None:
    return diagonal_entry_law(spec.kind, spec.law)


def sample_rectangular(spec: EnsembleSpec, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    """Unnormalized l x m entry matrix G of a block ensemble."""
    if not spec.kind.is_block:
        raise DomainError("rectangular samples exist only for block kinds")
    shape = (spec.l, spec.m) if batch is None else (batch, spec.l, spec.m)
    return laws.sample(spec.law, rng, shape)


def block_from_rectangular(g: np.ndarray, n: int | None = None) -> np.ndarray:
    """[[0, G], [G*, 0]] / sqrt(n), with n = l + m by default."""
    l, m = g.shape[-2:]
    n = l + m if n is None else n
    out = np.zeros(g.shape[:-2] + (l + m, l + m), dtype=g.dtype)
    out[..., :l, l:] = g
    out[..., l:, :l] = np.conj(np.swapaxes(g, -1, -2))
    return out / math.sqrt(n)


def sample_matrix(spec: EnsembleSpec, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    """One self-adjoint matrix (or a (batch, N, N) stack) of the ensemble."""
    if spec.kind.is_block:
        return block_from_rectangular(sample_rectangular(spec, rng, batch))

    n = spec.n
    shape = (n, n) if batch is None else (batch, n, n)
    a = laws.sample(spec.law, rng, shape)
    upper = np.triu(a, 1)
    x = upper + np.conj(np.swapaxes(upper, -1, -2))
    diag = laws.sample(diagonal_law(spec), rng, shape[:-1])
    idx = np.arange(n)
    x[..., idx, idx] = diag
    return x / math.sqrt(n)


def check_self_adjoint(matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}")
    asym = float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0))
    if asym > _SELF_ADJOINT_TOL:
        raise DomainError(f"matrix is not self-adjoint (max asymmetry {asym:.3e})")


def eigenvalues(matrix: np.ndarray) -> Spectrum:
    check_self_adjoint(matrix)
    return Spectrum(scipy.linalg.eigh(matrix, eigvals_only=True, check_finite=False))


def esd(spectrum: Spectrum) -> EmpiricalMeasure:
    return EmpiricalMeasure(spectrum.eigenvalues)


def wishart_eigs_from_block(block_spectrum: Spectrum, l: int, m: int) -> Spectrum:
    """Spectrum of W = G G* / l read off the block spectrum: (n/l) * lambda^2 for the top l.

    The m - l zero eigenvalues of the block belong to G*G and are not returned.
    """
    lam = block_spectrum.eigenvalues
    n = l + m
    if lam.size != n:
        raise DomainError(f"block spectrum has {lam.size} eigenvalues, expected {n}")
    scale = max(1.0, float(np.max(np.abs(lam))))
    asym = float(np.max(np.abs(lam + lam[::-1])))
    if asym > _CHIRAL_TOL * scale:
        raise DomainError(f"block spectrum is not symmetric (max mismatch {asym:.3e})")
    top = lam[-l:]
    return Spectrum(n / l * top * top)


def wishart_spectrum_direct(g: np.ndarray) -> Spectrum:
    """Eigenvalues of G G* / l from the unnormalized l x m matrix."""
    l = g.shape[0]
    w = g @ g.conj().T / l
    return Spectrum(scipy.linalg.eigh(w, eigvals_only=True, check_finite=False))


def sample_spectra(spec: EnsembleSpec, replicas: int, seed: int | None, threads: int = 1) -> list[Spectrum]:
    """Independent replica spectra, one seeded stream per replica."""
    if replicas < 1:
        raise DomainError("replicas must be at least 1")
    generators = spawn_generators(seed, replicas)
    return run_replicas(lambda rng: eigenvalues(sample_matrix(spec, rng)), generators, threads)


def flip(spectrum: Spectrum) -> Spectrum:
    """Spectrum of -X; lambda_min of X becomes -lambda_max of the result."""
    return Spectrum(-spectrum.eigenvalues)
