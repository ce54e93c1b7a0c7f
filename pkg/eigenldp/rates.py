"""Rate functions for lambda_max: closed forms, quadrature, and the variational formula."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .ensembles import EnsembleKind
from .errors import ConvergenceError, DomainError
from .free_energy import f_annealed
from .rare_event import theta_x_wigner, theta_x_wishart
from .spectral import SpectralLaw, block_law, h_max, semicircle
from .spherical import JLimitInput, j_limit

logger = logging.getLogger(__name__)

_QUAD_EPSABS = 1e-13
_QUAD_EPSREL = 1e-12
_EDGE_TOL = 1e-14
# the variational search runs over [theta_c, _THETA_MAX_FACTOR * theta_x]
_THETA_MAX_FACTOR = 10.0
_XATOL = 1e-10
_MAX_EVAL = 500


class RateMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    VARIATIONAL = "variational"
    QUADRATURE = "quadrature"


@dataclass
class RateResult:
    x: float
    value: float
    theta_star: float
    method: RateMethod
    infinite: bool = False


def _infinite(x: float, method: RateMethod) -> RateResult:
    return RateResult(x=x, value=math.inf, theta_star=math.nan, method=method, infinite=True)


def _integrate(f, lo: float, hi: float) -> float:
    value, err = quad(f, lo, hi, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=200)
    if err > 1e-9 * max(1.0, abs(value)):
        logger.debug("rate quadrature error estimate %.3e", err)
    return value


def law_for(kind: EnsembleKind, alpha: float | None = None) -> SpectralLaw:
    if kind.is_block:
        if alpha is None:
            raise DomainError("block kinds need alpha")
        return block_law(alpha)
    return semicircle()


# ---------------------------------------------------------------------------
# Wigner
# ---------------------------------------------------------------------------

def rate_wigner(x: float, beta: int) -> RateResult:
    """(beta/2) * integral from 2 to x of sqrt(t^2 - 4), in closed form."""
    if x < 2.0:
        return _infinite(x, RateMethod.CLOSED_FORM)
    if x == 2.0:
        return RateResult(x=x, value=0.0, theta_star=0.5 * beta, method=RateMethod.CLOSED_FORM)
    root = math.sqrt(x * x - 4.0)
    value = 0.5 * beta * (0.5 * x * root - 2.0 * math.log(0.5 * (x + root)))
    return RateResult(x=x, value=value, theta_star=theta_x_wigner(x, beta), method=RateMethod.CLOSED_FORM)


def rate_wigner_quadrature(x: float, beta: int) -> float:
    """Same integral by quadrature, with t = 2 + u^2."""
    if x < 2.0:
        return math.inf
    return _integrate(lambda u: beta * u * u * math.sqrt(4.0 + u * u), 0.0, math.sqrt(x - 2.0))


# ---------------------------------------------------------------------------
# Wishart and block
# ---------------------------------------------------------------------------

def _wishart_integral(y: float, alpha: float) -> float:
    """integral from b to y of sqrt((t - b)(t - a)) / t dt, with t = b + u^2."""
    law = block_law(alpha)
    a, b = law.a, law.b
    if y <= b:
        return 0.0
    return _integrate(lambda u: 2.0 * u * u * math.sqrt(b - a + u * u) / (b + u * u), 0.0, math.sqrt(y - b))


def rate_wishart(x: float, beta: int, alpha: float) -> RateResult:
    """J(x) = (beta / (2(1+a))) * integral from b to x of sqrt((y - b)(y - a)) / y dy."""
    law = block_law(alpha)
    if x < law.b:
        return _infinite(x, RateMethod.QUADRATURE)
    value = beta / (2.0 * (1.0 + alpha)) * _wishart_integral(x, alpha)
    block_x = math.sqrt(x / (1.0 + alpha))
    theta = theta_x_wishart(block_x, beta, alpha) if block_x > law.right_edge else 0.5 * beta * law.right_edge
    return RateResult(x=x, value=value, theta_star=theta, method=RateMethod.QUADRATURE)


def rate_block(x: float, beta: int, alpha: float) -> RateResult:
    """rate_wishart((1+a) x^2): the block spike at x is the Wishart spike at (1+a) x^2."""
    law = block_law(alpha)
    edge = law.right_edge
    if x < edge:
        return _infinite(x, RateMethod.QUADRATURE)
    y = max((1.0 + alpha) * x * x, law.b)
    value = beta / (2.0 * (1.0 + alpha)) * _wishart_integral(y, alpha)
    theta = theta_x_wishart(x, beta, alpha) if x > edge else 0.5 * beta * edge
    return RateResult(x=x, value=value, theta_star=theta, method=RateMethod.QUADRATURE)


def _block_discriminant(x: float, alpha: float) -> float:
    return ((1.0 + alpha) * x * x - 1.0 - alpha) ** 2 - 4.0 * alpha


def rate_block_display(x: float, beta: int, alpha: float) -> float:
    """(beta/(1+a)) * integral from the edge to x of sqrt((1+a)^2 (y^2 - 1)^2 - 4a) / y dy."""
    edge = block_law(alpha).right_edge
    if x < edge:
        return math.inf
    s = 1.0 + alpha

    def integrand(u: float) -> float:
        y = edge + u * u
        arg = s * s * (y * y - 1.0) ** 2 - 4.0 * alpha
        return 2.0 * u * math.sqrt(max(arg, 0.0)) / y

    return beta / s * _integrate(integrand, 0.0, math.sqrt(x - edge))


def rate_block_derivative(x: float, beta: int, alpha: float) -> float:
    """d/dx rate_block = beta sqrt(((1+a) x^2 - 1 - a)^2 - 4a) / ((1+a) x)."""
    edge = block_law(alpha).right_edge
    if x < edge:
        raise DomainError(f"x must be at least the block edge {edge:.12g}")
    return beta * math.sqrt(max(_block_discriminant(x, alpha), 0.0)) / ((1.0 + alpha) * x)


def rate_for(kind: EnsembleKind, x: float, alpha: float | None = None) -> RateResult:
    if kind.is_block:
        if alpha is None:
            raise DomainError("block kinds need alpha")
        return rate_block(x, kind.beta, alpha)
    return rate_wigner(x, kind.beta)


def rate_lambda_min(y: float, kind: EnsembleKind, alpha: float | None = None) -> RateResult:
    """Rate of lambda_min near y: the spectrum of -X has the same law for symmetric entries."""
    return rate_for(kind, -y, alpha)


# ---------------------------------------------------------------------------
# Variational formula
# ---------------------------------------------------------------------------

def rate_variational(x: float, kind: EnsembleKind, alpha: float | None = None) -> RateResult:
    """sup over theta of J(law, theta, x) - F(theta), searched on [theta_c, 10 theta_x].

    Below theta_c = (beta/2) H_max(law, x) the spherical integral is in its
    quadratic regime and the objective does not exceed its value at theta_c.
    """
    law = law_for(kind, alpha)
    beta = kind.beta
    edge = law.right_edge
    if x < edge - _EDGE_TOL:
        raise DomainError(f"x = {x} lies inside the bulk (edge {edge:.12g})")
    if x <= edge + _EDGE_TOL:
        return RateResult(x=x, value=0.0, theta_star=0.5 * beta * h_max(law, edge), method=RateMethod.VARIATIONAL)

    seed = theta_x_wishart(x, beta, alpha) if kind.is_block else theta_x_wigner(x, beta)
    theta_c = 0.5 * beta * h_max(law, x)

    def objective(theta: float) -> float:
        return -(j_limit(JLimitInput(law, theta, x, beta)) - f_annealed(kind, theta, alpha))

    try:
        res = minimize_scalar(
            objective,
            bounds=(theta_c, _THETA_MAX_FACTOR * seed),
            method="bounded",
            options={"xatol": _XATOL, "maxiter": _MAX_EVAL},
        )
    except (ValueError, ArithmeticError) as exc:
        raise ConvergenceError(f"variational rate failed at x={x}: {exc}") from exc
    if not res.success:
        raise ConvergenceError(f"variational rate did not converge at x={x}: {res.message}")
    return RateResult(x=x, value=max(-float(res.fun), 0.0), theta_star=float(res.x), method=RateMethod.VARIATIONAL)


def rate_scan(kind: EnsembleKind, start: float, stop: float, step: float,
              alpha: float | None = None) -> pd.DataFrame:
    """Table of closed-form and variational rates on start, start + step, ..., stop."""
    if step <= 0 or stop < start:
        raise DomainError("scan needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    xs = np.round(start + step * np.arange(count), 12)
    edge = law_for(kind, alpha).right_edge
    rows = []
    for x in xs:
        closed = rate_for(kind, float(x), alpha)
        if x < edge:
            rows.append({"x": float(x), "closed_form": math.inf, "variational": math.nan, "theta_star": math.nan})
            continue
        var = rate_variational(float(x), kind, alpha)
        rows.append({"x": float(x), "closed_form": closed.value, "variational": var.value, "theta_star": var.theta_star})
    return pd.DataFrame(rows, columns=["x", "closed_form", "variational", "theta_star"])
