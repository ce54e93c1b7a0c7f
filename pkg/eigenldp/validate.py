"""Numerical check suites: Monte Carlo convergence statements and transform identities.

Each suite returns named checks {name, value, threshold, passed}; the
default sizes are the acceptance sizes, the tests pass smaller ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import laws
from .diagnostics import distances, resolvent_cross_block, top_vector_deloc
from .ensembles import (
    EnsembleKind,
    eigenvalues,
    make_spec,
    sample_matrix,
    sample_rectangular,
    wishart_spectrum_direct,
)
from .errors import DomainError
from .free_energy import d_theta_f_wishart, f_wishart
from .montecarlo import run_replicas, spawn_generators
from .rare_event import make_plan, sample_tilted, spike_location_wishart, theta_x_wishart
from .rates import rate_block, rate_variational, rate_wigner, rate_wigner_quadrature
from .spectral import (
    block_law,
    h_max,
    inverse_stieltjes,
    marchenko_pastur,
    r_transform,
    semicircle,
    stieltjes,
    stieltjes_quadrature,
)

logger = logging.getLogger(__name__)

_FD_STEP = 1e-5
_RATE_GRID = (2.1, 2.5, 3.0, 4.0, 6.0)


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


def check_below(name: str, value: float, threshold: float) -> Check:
    passed = bool(np.isfinite(value)) and value < threshold
    if not passed:
        logger.info("check %s failed: %.6g >= %.6g", name, value, threshold)
    return Check(name=name, value=float(value), threshold=threshold, passed=passed)


@dataclass
class SuiteResult:
    suite: str
    seeds: int
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


# ---------------------------------------------------------------------------
# Monte Carlo suites
# ---------------------------------------------------------------------------

def suite_bulk(seeds: int = 10, seed: int | None = 0, threads: int = 1, n: int = 1000,
               block_side: int = 300) -> SuiteResult:
    """Semicircle convergence, top-vector delocalization and vanishing resolvent cross blocks."""
    spec = make_spec(EnsembleKind.WIGNER1, laws.rademacher(), n=n)
    law = semicircle()

    def replica(rng: np.random.Generator) -> tuple[float, float, float]:
        x = sample_matrix(spec, rng)
        ks = distances(eigenvalues(x), law).ks
        deloc = top_vector_deloc(x)
        g = sample_rectangular(make_spec(EnsembleKind.BLOCK1, laws.rademacher(), l=block_side, m=block_side), rng)
        cross = resolvent_cross_block(g / math.sqrt(2 * block_side), 3.0, rng)
        return ks, deloc, cross

    rows = np.array(run_replicas(replica, spawn_generators(seed, seeds), threads))
    return SuiteResult("bulk", seeds, [
        check_below("semicircle_ks_max", float(rows[:, 0].max()), 0.05),
        check_below("top_vector_deloc_max", float(rows[:, 1].max()), 0.2),
        check_below("resolvent_cross_block_max", float(rows[:, 2].max()), 0.1),
    ])


def suite_wishart(seeds: int = 10, seed: int | None = 0, threads: int = 1, l: int = 500,
                  m: int = 2000) -> SuiteResult:
    """Marchenko-Pastur convergence plus the block rate, spike and free-energy identities."""
    spec = make_spec(EnsembleKind.BLOCK1, laws.rademacher(), l=l, m=m)
    alpha = spec.alpha
    mp = marchenko_pastur(alpha)

    def replica(rng: np.random.Generator) -> float:
        return distances(wishart_spectrum_direct(sample_rectangular(spec, rng)), mp).ks

    ks = run_replicas(replica, spawn_generators(seed, seeds), threads)

    edge_law = marchenko_pastur(4.0)
    edges = abs(edge_law.a - 1.0) + abs(edge_law.b - 9.0)
    block = block_law(alpha)
    at_edge = rate_block(block.right_edge, 1, alpha).value
    round_trip = 0.0
    for x in (1.05 * block.right_edge, 1.5 * block.right_edge):
        theta = theta_x_wishart(x, 1, alpha)
        round_trip = max(round_trip, abs(spike_location_wishart(theta, 1, alpha).location - x))
    square_case = max(abs(f_wishart(t, 1, 1.0).value - 0.5 * t * t) for t in (0.25, 1.0, 2.0))
    return SuiteResult("wishart", seeds, [
        check_below("mp_ks_max", float(max(ks)), 0.05),
        check_below("mp_edges_alpha_4", edges, 1e-15),
        check_below("block_rate_at_edge", at_edge, 1e-12),
        check_below("spike_theta_round_trip", round_trip, 1e-8),
        check_below("free_energy_alpha_1", square_case, 1e-10),
    ])


def suite_spike(seeds: int = 20, seed: int | None = 0, threads: int = 1, n: int = 600,
                theta: float = 1.0) -> SuiteResult:
    """Mean top eigenvalue of the tilted Wigner matrix against rho_theta."""
    spec = make_spec(EnsembleKind.WIGNER1, laws.rademacher(), n=n)

    def replica(rng: np.random.Generator) -> tuple[float, float]:
        plan = make_plan(spec, theta, rng)
        x, _ = sample_tilted(spec, plan, rng)
        return eigenvalues(x).lambda_max, plan.predicted_spike.location

    rows = np.array(run_replicas(replica, spawn_generators(seed, seeds), threads))
    predicted = float(rows[0, 1])
    return SuiteResult("spike", seeds, [
        check_below("mean_lambda_max_minus_rho", abs(float(rows[:, 0].mean()) - predicted), 0.1),
    ])


# ---------------------------------------------------------------------------
# Deterministic suites
# ---------------------------------------------------------------------------

def suite_transforms(seeds: int = 0, seed: int | None = None, threads: int = 1) -> SuiteResult:
    """Closed-form transforms against quadrature, inverse round trips, envelope derivatives."""
    stieltjes_gap = 0.0
    round_trip = 0.0
    for law in (semicircle(), marchenko_pastur(4.0), block_law(1.0), block_law(4.0)):
        edge = law.right_edge
        for z in (edge + 0.1, edge + 1.0, 2.0 * edge + 5.0):
            stieltjes_gap = max(stieltjes_gap, abs(float(stieltjes(law, z)) - stieltjes_quadrature(law, z)))
        top = h_max(law, edge)
        for frac in (0.1, 0.5, 0.9):
            u = frac * top
            round_trip = max(round_trip, abs(float(stieltjes(law, inverse_stieltjes(law, u))) - u))
    r_gap = max(abs(r_transform(semicircle(), u) - u) for u in (0.1, 0.5, 0.9))

    envelope = 0.0
    for theta, i, alpha in ((0.5, 1, 1.0), (1.0, 1, 4.0), (2.0, 2, 3.0)):
        fd = (f_wishart(theta + _FD_STEP, i, alpha).value - f_wishart(theta - _FD_STEP, i, alpha).value) / (
            2.0 * _FD_STEP
        )
        envelope = max(envelope, abs(fd - d_theta_f_wishart(theta, i, alpha)))
    return SuiteResult("transforms", seeds, [
        check_below("stieltjes_vs_quadrature", stieltjes_gap, 1e-7),
        check_below("inverse_round_trip", round_trip, 1e-9),
        check_below("semicircle_r_transform", r_gap, 1e-15),
        check_below("free_energy_envelope", envelope, 1e-6),
    ])


def suite_rates(seeds: int = 0, seed: int | None = None, threads: int = 1) -> SuiteResult:
    """Variational formula against the closed forms, and closed form against quadrature."""
    gap = 0.0
    for beta, kind in ((1, EnsembleKind.WIGNER1), (2, EnsembleKind.WIGNER2)):
        for x in _RATE_GRID:
            gap = max(gap, abs(rate_variational(x, kind).value - rate_wigner(x, beta).value))
    quad_gap = abs(rate_wigner(2.5, 1).value - rate_wigner_quadrature(2.5, 1))
    block_gap = abs(rate_variational(2.0, EnsembleKind.BLOCK1, 1.0).value - rate_block(2.0, 1, 1.0).value)
    return SuiteResult("rates", seeds, [
        check_below("variational_vs_closed_form", gap, 1e-6),
        check_below("closed_form_vs_quadrature", quad_gap, 1e-10),
        check_below("block_variational_vs_composition", block_gap, 1e-4),
    ])


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "bulk": suite_bulk,
    "wishart": suite_wishart,
    "spike": suite_spike,
    "transforms": suite_transforms,
    "rates": suite_rates,
}


def run_suite(name: str, seeds: int | None = None, seed: int | None = 0, threads: int = 1,
              **sizes) -> SuiteResult:
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    kwargs = dict(sizes)
    if seeds is not None:
        kwargs["seeds"] = seeds
    return SUITES[name](seed=seed, threads=threads, **kwargs)
