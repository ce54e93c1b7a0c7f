"""Exponential tilting as an importance sampler for large deviations of lambda_max."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import laws
from .ensembles import EnsembleSpec, diagonal_law, eigenvalues, sample_matrix
from .errors import ConvergenceError, DomainError
from .free_energy import f_wishart
from .laws import EntryLaw
from .montecarlo import chunk_sizes, jackknife_log_mean_exp, run_replicas, spawn_generators
from .spectral import block_law, companion_stieltjes, mp_stieltjes, stieltjes
from .spherical import (
    SphereVector,
    deloc_check,
    inner_log_annealed,
    j_n_contour,
    norm_split,
    quadratic_form,
    sample_sphere,
    sample_split_sphere,
)

logger = logging.getLogger(__name__)

_ROOT_XTOL = 1e-13
_MAX_DELOC_ATTEMPTS = 1000
# replicas per seeded stream in estimate_tail / estimate_tail_naive
_IS_CHUNK = 16
_NAIVE_CHUNK = 2000
_NAIVE_BATCH = 500


@dataclass
class Spike:
    location: float
    supercritical: bool


# ---------------------------------------------------------------------------
# Spike maps
# ---------------------------------------------------------------------------

def rho_theta_wigner(theta: float, beta: int) -> Spike:
    """rho = 2 theta / beta + beta / (2 theta) above criticality, else the edge 2."""
    if theta <= 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    u = 2.0 * theta / beta
    if u <= 1.0:
        return Spike(2.0, False)
    return Spike(u + 1.0 / u, True)


def theta_x_wigner(x: float, beta: int) -> float:
    """The tilt whose spike sits at x: (beta/4)(x + sqrt(x^2 - 4))."""
    if x <= 2.0:
        raise DomainError(f"x must exceed the bulk edge 2, got {x}")
    return 0.25 * beta * (x + math.sqrt(x * x - 4.0))


def theta_x_wishart(x: float, i: int, alpha: float) -> float:
    """The tilt whose block spike sits at x.

    2 theta / i is the larger root of the quadratic whose roots sum to 2x;
    the smaller one is G_block(x), so 2 theta / i = 2x - G_block(x).
    """
    law = block_law(alpha)
    if x <= law.right_edge:
        raise DomainError(f"x must exceed the block edge {law.right_edge:.12g}, got {x}")
    return 0.5 * i * (2.0 * x - stieltjes(law, x))


def spike_lhs(z: float, alpha: float) -> float:
    """(1+a)^2 z^2 G_MP(u) G_companion(u) at u = (1+a) z^2; decreasing in z."""
    u = (1.0 + alpha) * z * z
    return (1.0 + alpha) ** 2 * z * z * mp_stieltjes(alpha, u) * float(companion_stieltjes(alpha, u))


def _spike_rhs(theta: float, i: int, alpha: float) -> float:
    s = f_wishart(theta, i, alpha).x_star
    return i * i / (4.0 * theta * theta * s * (1.0 - s))


def spike_location_wishart(theta: float, i: int, alpha: float) -> Spike:
    """Solution z >= edge of spike_lhs(z) = i^2 / (4 theta^2 x*(1 - x*))."""
    if theta <= 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    edge = block_law(alpha).right_edge
    rhs = _spike_rhs(theta, i, alpha)
    if rhs >= spike_lhs(edge, alpha):
        return Spike(edge, False)
    hi = 2.0 * edge
    while spike_lhs(hi, alpha) > rhs:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError(f"spike equation has no bracket for theta={theta}")
    z = brentq(lambda z: spike_lhs(z, alpha) - rhs, edge, hi, xtol=_ROOT_XTOL)
    return Spike(z, True)


def critical_theta_wishart(i: int, alpha: float) -> float:
    """Smallest tilt whose spike leaves the block edge, by bracketing the spike equation there."""
    lhs = spike_lhs(block_law(alpha).right_edge, alpha)

    def excess(theta: float) -> float:
        s = f_wishart(theta, i, alpha).x_star
        return 4.0 * theta * theta * s * (1.0 - s) * lhs - i * i

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
        if hi > 1e8:
            raise ConvergenceError("critical tilt bracket did not close")
    return brentq(excess, 1e-8, hi, xtol=1e-15, rtol=1e-15)


def predicted_spike(spec: EnsembleSpec, theta: float) -> Spike:
    edge = spec.spectral_law.right_edge
    if theta == 0:
        return Spike(edge, False)
    if spec.kind.is_block:
        return spike_location_wishart(theta, spec.beta, spec.alpha)
    return rho_theta_wigner(theta, spec.beta)


def theta_x(spec: EnsembleSpec, x: float) -> float:
    if spec.kind.is_block:
        return theta_x_wishart(x, spec.beta, spec.alpha)
    return theta_x_wigner(x, spec.beta)


# ---------------------------------------------------------------------------
# Tilted sampling
# ---------------------------------------------------------------------------

@dataclass
class TiltPlan:
    """A direction e, a strength theta, and the per-slot tilt arguments.

    Wigner kinds: t is N x N with t_ij = 2 theta sqrt(N) e_i conj(e_j) off the
    diagonal and theta sqrt(N) |e_i|^2 on it. Block kinds: t is l x m with
    t_ij = 2 theta sqrt(N) e_i conj(e_{l+j}).
    """

    spec: EnsembleSpec
    e: SphereVector
    theta: float
    t: np.ndarray
    predicted_spike: Spike
    deloc_eps: float | None
    delocalized: bool | None
    log_normalizer: float
    log_proposal_ratio: float = 0.0


def _tilt_arguments(spec: EnsembleSpec, e: np.ndarray, theta: float) -> np.ndarray:
    n = spec.size
    root = math.sqrt(n)
    if spec.kind.is_block:
        return 2.0 * theta * root * np.outer(e[: spec.l], np.conj(e[spec.l:]))
    t = 2.0 * theta * root * np.outer(e, np.conj(e))
    idx = np.arange(n)
    t[idx, idx] = theta * root * np.abs(e) ** 2
    return t


def make_plan(spec: EnsembleSpec, theta: float, rng: np.random.Generator, deloc_eps: float | None = None,
              split_norm: bool = False) -> TiltPlan:
    """Draw e and precompute the tilt.

    With deloc_eps, e is redrawn until it lies in the delocalized set; after
    _MAX_DELOC_ATTEMPTS misses this raises ConvergenceError rather than
    hand back a direction outside the set. With split_norm (block kinds), |e1|^2
    comes from a Beta proposal and the plan carries log p/q.
    """
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    n = spec.size
    log_ratio = 0.0
    if split_norm:
        if not spec.kind.is_block:
            raise DomainError("norm splitting applies to block kinds")
        rows, ratios = sample_split_sphere(spec, norm_split(spec, theta), rng, 1)
        e = SphereVector(rows[0] / np.linalg.norm(rows[0]))
        log_ratio = float(ratios[0])
    else:
        e = sample_sphere(n, spec.kind.field, rng)
        if deloc_eps is not None:
            attempts = 1
            while not deloc_check(e, deloc_eps) and attempts < _MAX_DELOC_ATTEMPTS:
                e = sample_sphere(n, spec.kind.field, rng)
                attempts += 1
            if attempts > 1:
                logger.debug("delocalization rejection took %d draws", attempts)
            if not deloc_check(e, deloc_eps):
                raise ConvergenceError(f"no delocalized direction after {attempts} draws at eps={deloc_eps}")

    delocalized = deloc_check(e, deloc_eps) if deloc_eps is not None else None
    t = _tilt_arguments(spec, e.components, theta)
    log_norm = float(inner_log_annealed(e.components, theta, spec.law, spec.kind, spec.l)) if theta > 0 else 0.0
    return TiltPlan(
        spec=spec,
        e=e,
        theta=theta,
        t=t,
        predicted_spike=predicted_spike(spec, theta),
        deloc_eps=deloc_eps,
        delocalized=delocalized,
        log_normalizer=log_norm,
        log_proposal_ratio=log_ratio,
    )


def _assemble(spec: EnsembleSpec, off: np.ndarray, diag: np.ndarray | None) -> np.ndarray:
    """Self-adjoint N x N matrix from unnormalized slot values."""
    n = spec.size
    if spec.kind.is_block:
        x = np.zeros((n, n), dtype=off.dtype)
        x[: spec.l, spec.l:] = off
        x[spec.l:, : spec.l] = np.conj(off.T)
    else:
        upper = np.triu(off, 1)
        x = upper + np.conj(upper.T)
        idx = np.arange(n)
        x[idx, idx] = diag
    return x / math.sqrt(n)


def tilted_mean_matrix(plan: TiltPlan, law: EntryLaw | None = None) -> tuple[np.ndarray, float]:
    """Entrywise L'(t_ij) / sqrt(N), and a bound on its distance to (2 theta / beta) e e*.

    |L'(t) - var t| <= C |t|^3 entrywise, so the deviation is dominated by
    the rank-one matrix 8 C theta^3 N |e|^3 (|e|^3)^T and the returned bound
    is its norm, 8 C theta^3 N sum |e_i|^6. On the delocalized set
    (max |e_i|^2 <= N^-1/2) this is at most 8 C theta^3 sqrt(N) sum e_i^4.
    """
    spec = plan.spec
    law = spec.law if law is None else law
    if plan.theta == 0:
        n = spec.size
        return np.zeros((n, n), dtype=plan.t.dtype), 0.0
    if spec.kind.is_block:
        mean = _assemble(spec, np.asarray(laws.tilted_mean(law, plan.t)), None)
        c = laws.cubic_constant(law)
    else:
        off = np.asarray(laws.tilted_mean(law, plan.t))
        diag_law = diagonal_law(spec)
        diag = np.asarray(laws.tilted_mean(diag_law, np.real(np.diag(plan.t))))
        mean = _assemble(spec, off, diag)
        c = max(laws.cubic_constant(law), laws.cubic_constant(diag_law))
    e = np.abs(plan.e.components)
    bound = 8.0 * c * plan.theta**3 * spec.size * float(np.sum(e**6))
    return mean, bound


def sample_tilted(spec: EnsembleSpec, plan: TiltPlan, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """X under the tilt, with log(dP/dP_tilt)(X) = -theta N <e, X e> + sum of L(t_ij)."""
    if plan.spec != spec:
        raise DomainError("plan was built for a different ensemble")
    if spec.kind.is_block:
        off = laws.sample_tilted(spec.law, plan.t, rng)
        x = _assemble(spec, off, None)
    else:
        off = laws.sample_tilted(spec.law, plan.t, rng)
        diag = laws.sample_tilted(diagonal_law(spec), np.real(np.diag(plan.t)), rng)
        x = _assemble(spec, off, diag)
    n = spec.size
    log_weight = -plan.theta * n * float(quadratic_form(x, plan.e.components)) + plan.log_normalizer
    return x, log_weight


# ---------------------------------------------------------------------------
# Tail estimation
# ---------------------------------------------------------------------------

@dataclass
class TailEstimate:
    x: float
    delta: float
    log_prob_per_N: float
    std_err: float
    hit_rate: float
    n_samples: int
    N: int
    one_sided_log_prob_per_N: float
    one_sided_std_err: float
    degenerate: bool
    theta: float
    weighting: str
    seed: int | None = None
    wishart_x: float | None = None


def _summarize(spec: EnsembleSpec, x: float, delta: float, lam_max: np.ndarray, log_w: np.ndarray,
               theta: float, weighting: str, seed: int | None) -> TailEstimate:
    n = spec.size
    window = np.abs(lam_max - x) < delta
    above = lam_max >= x
    value, se = jackknife_log_mean_exp(np.where(window, log_w, -np.inf))
    one, one_se = jackknife_log_mean_exp(np.where(above, log_w, -np.inf))
    degenerate = not bool(window.any())
    if degenerate:
        logger.warning("no replica landed within %g of x=%g; increase delta or n_samples", delta, x)
    return TailEstimate(
        x=x,
        delta=delta,
        log_prob_per_N=value / n,
        std_err=se / n,
        hit_rate=float(window.mean()),
        n_samples=int(lam_max.size),
        N=n,
        one_sided_log_prob_per_N=one / n,
        one_sided_std_err=one_se / n,
        degenerate=degenerate,
        theta=theta,
        weighting=weighting,
        seed=seed,
        wishart_x=n / spec.l * x * x if spec.kind.is_block else None,
    )


def estimate_tail(spec: EnsembleSpec, x: float, delta: float, n_samples: int, seed: int | None = None,
                  threads: int = 1, weighting: str = "spherical", deloc_eps: float | None = None,
                  split_norm: bool = False) -> TailEstimate:
    """Importance-sampling estimate of (1/N) ln P(|lambda_max - x| < delta).

    Each replica draws e, then X from the tilt at theta_x(x). The
    "spherical" weighting averages the tilt over e,
    log w = sum L(t_ij) - N J_N(X, theta), which is exact for uniform e.
    "direction" uses the likelihood ratio at the drawn e alone. Block kinds
    work on the block scale; the Wishart-scale point is (N/l) x^2.
    """
    if weighting not in ("spherical", "direction"):
        raise DomainError(f"unknown weighting {weighting!r}")
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    edge = spec.spectral_law.right_edge
    if x <= edge:
        raise DomainError(f"x must exceed the bulk edge {edge:.12g}, got {x}")
    theta = theta_x(spec, x)

    def replica_chunk(task: tuple[np.random.Generator, int]) -> tuple[np.ndarray, np.ndarray]:
        rng, size = task
        tops = np.empty(size)
        logs = np.empty(size)
        for k in range(size):
            plan = make_plan(spec, theta, rng, deloc_eps=deloc_eps, split_norm=split_norm)
            mat, log_dir = sample_tilted(spec, plan, rng)
            spectrum = eigenvalues(mat)
            tops[k] = spectrum.lambda_max
            if weighting == "spherical":
                logs[k] = plan.log_normalizer - spec.size * j_n_contour(spectrum, theta, spec.beta)
            else:
                logs[k] = log_dir
            logs[k] += plan.log_proposal_ratio
        return tops, logs

    sizes = chunk_sizes(n_samples, _IS_CHUNK)
    tasks = list(zip(spawn_generators(seed, len(sizes)), sizes))
    parts = run_replicas(replica_chunk, tasks, threads)
    lam_max = np.concatenate([p[0] for p in parts])
    log_w = np.concatenate([p[1] for p in parts])
    return _summarize(spec, x, delta, lam_max, log_w, theta, weighting, seed)


def estimate_tail_naive(spec: EnsembleSpec, x: float, delta: float, n_samples: int, seed: int | None = None,
                        threads: int = 1) -> TailEstimate:
    """Plain Monte Carlo estimate; standard errors by the delta method."""
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")

    def chunk(task: tuple[np.random.Generator, int]) -> np.ndarray:
        rng, size = task
        tops = []
        for b in chunk_sizes(size, _NAIVE_BATCH):
            mats = sample_matrix(spec, rng, batch=b)
            tops.append(np.linalg.eigvalsh(mats)[:, -1])
        return np.concatenate(tops)

    sizes = chunk_sizes(n_samples, _NAIVE_CHUNK)
    tasks = list(zip(spawn_generators(seed, len(sizes)), sizes))
    lam_max = np.concatenate(run_replicas(chunk, tasks, threads))
    n = spec.size

    def log_p(hits: np.ndarray) -> tuple[float, float]:
        p = float(hits.mean())
        if p == 0.0:
            return -math.inf, math.nan
        return math.log(p) / n, math.sqrt(p * (1.0 - p) / hits.size) / (p * n)

    window = np.abs(lam_max - x) < delta
    value, se = log_p(window)
    one, one_se = log_p(lam_max >= x)
    degenerate = not bool(window.any())
    if degenerate:
        logger.warning("no naive sample landed within %g of x=%g", delta, x)
    return TailEstimate(
        x=x,
        delta=delta,
        log_prob_per_N=value,
        std_err=se,
        hit_rate=float(window.mean()),
        n_samples=n_samples,
        N=n,
        one_sided_log_prob_per_N=one,
        one_sided_std_err=one_se,
        degenerate=degenerate,
        theta=0.0,
        weighting="naive",
        seed=seed,
        wishart_x=n / spec.l * x * x if spec.kind.is_block else None,
    )
