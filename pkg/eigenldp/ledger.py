"""Machine-readable record of printed formulas that disagree with the computed ones.

Each entry carries the printed form, the form the toolkit uses, numbers measured
live from the toolkit, and how the disagreement was resolved.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

from .ensembles import EnsembleKind
from .free_energy import f_wishart, x_critical_residual
from .rare_event import rho_theta_wigner, theta_x_wigner, theta_x_wishart
from .rates import rate_block, rate_block_derivative, rate_block_display, rate_variational
from .spectral import block_law, marchenko_pastur, mp_quadratic_residual, mp_stieltjes, stieltjes_quadrature

logger = logging.getLogger(__name__)

_FD_STEP = 1e-5


@dataclass
class LedgerEntry:
    key: str
    printed: str
    derived: str
    measured: dict[str, float] = field(default_factory=dict)
    resolution: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def _printed_block_argument(x: float, alpha: float) -> float:
    return (x * x - 1.0 - alpha) ** 2 - 4.0 * alpha


def _corrected_block_argument(x: float, alpha: float) -> float:
    return ((1.0 + alpha) * x * x - 1.0 - alpha) ** 2 - 4.0 * alpha


def _block_rate_prefactor() -> LedgerEntry:
    x, beta, alpha = 2.0, 1, 1.0
    composition = rate_block(x, beta, alpha).value
    display = rate_block_display(x, beta, alpha)
    return LedgerEntry(
        key="block-rate-prefactor",
        printed="(beta/(1+a)) int_{edge}^x (1/y) sqrt((1+a)^2 (y^2-1)^2 - 4a) dy",
        derived="J((1+a) x^2) with J(y) = (beta/(2(1+a))) int_b^y sqrt((t-b)(t-a))/t dt",
        measured={
            "x": x,
            "alpha": alpha,
            "display": display,
            "composition": composition,
            "display_over_composition": display / composition,
            "display_over_printed_composition": display / (0.5 * composition),
        },
        resolution="composition is authoritative; the display matches it once J carries beta/(2(1+a))",
    )


def _block_theta_branch_argument() -> LedgerEntry:
    x, alpha = 2.0, 4.0
    edge = block_law(alpha).right_edge
    numeric = 2.0 * theta_x_wishart(x, 1, alpha)
    corrected = x + math.sqrt(_corrected_block_argument(x, alpha)) / ((1.0 + alpha) * x)

    # derivative of the rate against the printed derivative, both at x = 4
    x_d = 4.0
    printed_derivative = alpha / (1.0 + alpha) * math.sqrt(_printed_block_argument(x_d, alpha)) / (x_d * x_d)
    derivative = rate_block_derivative(x_d, 1, alpha)
    finite_diff = (rate_block(x_d + _FD_STEP, 1, alpha).value - rate_block(x_d - _FD_STEP, 1, alpha).value) / (
        2.0 * _FD_STEP
    )
    return LedgerEntry(
        key="block-theta-branch-argument",
        printed="sqrt((x^2 - 1 - a)^2 - 4a) in the theta_x branch and the rate derivative",
        derived="sqrt(((1+a) x^2 - 1 - a)^2 - 4a)",
        measured={
            "alpha": alpha,
            "printed_argument_at_edge": _printed_block_argument(edge, alpha),
            "printed_argument_at_edge_alpha_1": _printed_block_argument(math.sqrt(2.0), 1.0),
            "corrected_argument_at_edge": _corrected_block_argument(edge, alpha),
            "corrected_branch_over_numeric_root": corrected / numeric,
            "printed_derivative_over_finite_difference": printed_derivative / finite_diff,
            "derivative_over_finite_difference": derivative / finite_diff,
        },
        resolution="the printed argument is negative at the edge; the corrected argument is used",
    )


def _wigner_theta_factor() -> LedgerEntry:
    x, beta = 2.5, 1
    derived = theta_x_wigner(x, beta)
    printed = 0.5 * beta * (x + math.sqrt(x * x - 4.0))
    return LedgerEntry(
        key="wigner-theta-factor",
        printed="theta_x = (beta/2)(x + sqrt(x^2 - 4))",
        derived="theta_x = (beta/4)(x + sqrt(x^2 - 4))",
        measured={
            "x": x,
            "printed_over_derived": printed / derived,
            "spike_at_printed_theta": rho_theta_wigner(printed, beta).location,
            "spike_at_derived_theta": rho_theta_wigner(derived, beta).location,
        },
        resolution="the derived tilt inverts the spike map; the printed one overshoots",
    )


def _mp_quadratic() -> LedgerEntry:
    z, alpha = 12.0, 4.0
    g = mp_stieltjes(alpha, z)
    printed = (2.0 * z) ** 2 * g * g - 4.0 * z * (z + 1.0 - alpha) * g + 4.0 * z - 8.0 * alpha
    return LedgerEntry(
        key="mp-quadratic",
        printed="(2z)^2 G^2 - 4z(z + 1 - a) G + 4z - 8a = 0",
        derived="z G^2 - (z + 1 - a) G + 1 = 0, G(z) = (z + 1 - a - sqrt((z-a)(z-b)))/(2z)",
        measured={
            "z": z,
            "alpha": alpha,
            "printed_residual": printed,
            "derived_residual": mp_quadratic_residual(alpha, z, g),
            "closed_form_minus_quadrature": g - stieltjes_quadrature(marchenko_pastur(alpha), z),
        },
        resolution="the transform is taken from the density; the printed quadratic is not used",
    )


def _wishart_rate_prefactor() -> LedgerEntry:
    x, alpha = 2.0, 1.0
    composition = rate_block(x, 1, alpha).value
    variational = rate_variational(x, EnsembleKind.BLOCK1, alpha).value
    return LedgerEntry(
        key="wishart-rate-prefactor",
        printed="J(x) = (beta/(4(1+a))) int_b^x sqrt((y-b)(y-a))/y dy",
        derived="J(x) = (beta/(2(1+a))) int_b^x sqrt((y-b)(y-a))/y dy",
        measured={
            "x": x,
            "alpha": alpha,
            "variational_over_composition": variational / composition,
            "printed_over_derived": 0.5,
        },
        resolution="beta/(2(1+a)) agrees with the variational formula",
    )


def _free_energy_log_order() -> LedgerEntry:
    theta, i, alpha = 1.0, 1, 4.0
    stated = f_wishart(theta, i, alpha)
    swapped = f_wishart(theta, i, alpha, swap_logs=True)
    return LedgerEntry(
        key="free-energy-log-order",
        printed="ln x and ln(1 - x) weights exchanged between the two statements",
        derived="(i/(2(1+a))) ln x + (i a/(2(1+a))) ln(1 - x)",
        measured={
            "x_star": stated.x_star,
            "x_star_swapped": swapped.x_star,
            "x_star_sum": stated.x_star + swapped.x_star,
            "value_difference": stated.value - swapped.value,
        },
        resolution="the orders are mirror images under x -> 1 - x; the value is the same",
    )


def _critical_residual_coefficient() -> LedgerEntry:
    theta, i, alpha = 1.0, 1, 4.0
    x = f_wishart(theta, i, alpha).x_star
    derived = x_critical_residual(x, theta, i, alpha)
    printed = (theta * theta / (i * i)) * (1.0 - 2.0 * x) + 1.0 / ((1.0 + alpha) * x) - alpha / (
        (1.0 + alpha) * (1.0 - x)
    )
    return LedgerEntry(
        key="critical-residual-coefficient",
        printed="(theta^2/beta^2)(1 - 2x) + ...",
        derived="(4 theta^2/i^2)(1 - 2x) + ...",
        measured={
            "x_star": x,
            "derived_residual": derived,
            "printed_residual": printed,
            "coefficient_ratio": 4.0,
        },
        resolution="the derived coefficient vanishes at the maximizer",
    )


def build_ledger() -> list[LedgerEntry]:
    entries = [
        _block_rate_prefactor(),
        _block_theta_branch_argument(),
        _wigner_theta_factor(),
        _mp_quadratic(),
        _wishart_rate_prefactor(),
        _free_energy_log_order(),
        _critical_residual_coefficient(),
    ]
    logger.debug("ledger built with %d entries", len(entries))
    return entries
