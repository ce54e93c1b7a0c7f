"""Shared fixtures and builders for eigenldp tests."""

import numpy as np
import pytest

from eigenldp import laws
from eigenldp.ensembles import EnsembleKind, EnsembleSpec, make_spec


def _make_spec(
    kind: EnsembleKind | str = EnsembleKind.WIGNER1,
    law: str = "rademacher",
    n: int | None = None,
    l: int | None = None,
    m: int | None = None,
) -> EnsembleSpec:
    """Spec from a kind and a registered law name; Wigner kinds default to n = 20."""
    kind = EnsembleKind(kind)
    if not kind.is_block and n is None:
        n = 20
    return make_spec(kind, laws.law_from_name(law), n=n, l=l, m=m)


def _symmetric(values: np.ndarray) -> np.ndarray:
    """Real symmetric matrix with the given spectrum in a random orthogonal basis."""
    rng = np.random.default_rng(99)
    q, _ = np.linalg.qr(rng.standard_normal((len(values), len(values))))
    return q @ np.diag(values) @ q.T


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def wigner1_spec() -> EnsembleSpec:
    return _make_spec(EnsembleKind.WIGNER1, n=20)


@pytest.fixture
def wigner2_spec() -> EnsembleSpec:
    return _make_spec(EnsembleKind.WIGNER2, n=12)


@pytest.fixture
def block1_spec() -> EnsembleSpec:
    """l = 8, m = 24, so alpha = 3."""
    return _make_spec(EnsembleKind.BLOCK1, l=8, m=24)


@pytest.fixture
def gaussian_wigner_spec() -> EnsembleSpec:
    return _make_spec(EnsembleKind.WIGNER1, law="gaussian", n=30)


@pytest.fixture
def spec_factory():
    return _make_spec


@pytest.fixture
def symmetric_factory():
    return _symmetric
