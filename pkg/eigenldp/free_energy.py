"""Limiting annealed free energies of the Wigner and block ensembles."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .ensembles import EnsembleKind
from .errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

_X_CLIP = 1e-12
_MAX_ITER = 200
_X_TOL = 1e-15


@dataclass
class WishartFreeEnergyResult:
    value: float
    x_star: float
    c_alpha: float
    theta: float
    i: int
    alpha: float


def f_wigner(theta: float, beta: int) -> float:
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if beta not in (1, 2):
        raise DomainError(f"beta must be 1 or 2, got {beta}")
    return theta * theta / beta


def c_alpha(alpha: float) -> float:
    p = 1.0 / (1.0 + alpha)
    q = alpha / (1.0 + alpha)
    return 0.5 * p * math.log(p) + 0.5 * q * math.log(q)


def _check(theta: float, i: int, alpha: float) -> None:
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if i not in (1, 2):
        raise DomainError(f"i must be 1 or 2, got {i}")
    if not alpha >= 1.0:
        raise DomainError(f"alpha must be >= 1, got {alpha}")


def _coefficients(i: int, alpha: float, swap_logs: bool) -> tuple[float, float, float, float]:
    """(weight of ln x, weight of ln(1-x), and their reference points)."""
    p = 1.0 / (1.0 + alpha)
    q = alpha / (1.0 + alpha)
    cx, c1x = 0.5 * i * p, 0.5 * i * q
    if swap_logs:
        return c1x, cx, q, p
    return cx, c1x, p, q


def _maximize(theta: float, i: int, alpha: float, swap_logs: bool) -> float:
    """Root of g'(x) = (2 theta^2 / i)(1 - 2x) + cx / x - c1x / (1 - x); g' falls from +inf to -inf on (0, 1)."""
    cx, c1x, _, _ = _coefficients(i, alpha, swap_logs)
    k = 2.0 * theta * theta / i

    def grad(x: float) -> float:
        return k * (1.0 - 2.0 * x) + cx / x - c1x / (1.0 - x)

    try:
        return brentq(grad, _X_CLIP, 1.0 - _X_CLIP, xtol=_X_TOL, maxiter=_MAX_ITER)
    except (ValueError, RuntimeError) as exc:
        raise ConvergenceError(
            f"free-energy maximizer did not converge (theta={theta}, i={i}, alpha={alpha}): {exc}"
        ) from exc


def f_wishart(theta: float, i: int, alpha: float, swap_logs: bool = False) -> WishartFreeEnergyResult:
    """sup_x {(2 theta^2/i) x(1-x) + (i/(2(1+a))) ln x + (i a/(2(1+a))) ln(1-x)} - i C_a.

    swap_logs exchanges the two log weights; x_star moves to 1 - x_star
    and the value is unchanged.
    """
    _check(theta, i, alpha)
    x = _maximize(theta, i, alpha, swap_logs)
    cx, c1x, px, p1x = _coefficients(i, alpha, swap_logs)
    value = (2.0 * theta * theta / i) * x * (1.0 - x) + cx * math.log(x / px) + c1x * math.log((1.0 - x) / p1x)
    return WishartFreeEnergyResult(
        value=value,
        x_star=x,
        c_alpha=c_alpha(alpha),
        theta=theta,
        i=i,
        alpha=alpha,
    )


def x_critical_residual(x: float, theta: float, i: int, alpha: float) -> float:
    """(2/i) g'(x) = (4 theta^2 / i^2)(1 - 2x) + 1/((1+a)x) - a/((1+a)(1-x))."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    return (4.0 * theta * theta / (i * i)) * (1.0 - 2.0 * x) + 1.0 / ((1.0 + alpha) * x) - alpha / (
        (1.0 + alpha) * (1.0 - x)
    )


def d_theta_f_wishart(theta: float, i: int, alpha: float) -> float:
    """dF/dtheta = (4 theta / i) x*(1 - x*); x* is critical so it drops out."""
    res = f_wishart(theta, i, alpha)
    return 4.0 * theta / i * res.x_star * (1.0 - res.x_star)


def f_annealed(kind: EnsembleKind, theta: float, alpha: float | None = None) -> float:
    if kind.is_block:
        if alpha is None:
            raise DomainError("block free energy needs alpha")
        return f_wishart(theta, kind.beta, alpha).value
    return f_wigner(theta, kind.beta)
