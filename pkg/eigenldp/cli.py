"""Command-line front end: one subcommand per toolkit operation, JSON or CSV on stdout."""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import logging
import math
import sys
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from . import laws
from .config import VERSION, default_threads
from .diagnostics import distances
from .ensembles import (
    EnsembleKind,
    EnsembleSpec,
    kind_from_name,
    make_spec,
    sample_spectra,
    wishart_eigs_from_block,
)
from .errors import LdpError
from .free_energy import c_alpha, d_theta_f_wishart, f_wishart, f_wigner
from .ledger import build_ledger
from .montecarlo import spawn_generators
from .rare_event import (
    critical_theta_wishart,
    estimate_tail,
    estimate_tail_naive,
    predicted_spike,
    rho_theta_wigner,
    spike_location_wishart,
)
from .rates import (
    rate_block_display,
    rate_for,
    rate_scan,
    rate_variational,
    rate_wigner_quadrature,
)
from .spectral import SpectralLaw, spectral_from_name
from .spherical import JLimitInput, f_n_estimate, j_limit, j_n_contour, j_n_monte_carlo
from .validate import SUITES, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2

# flags that never reach the output, so the JSON does not depend on them
_UNECHOED = {"threads", "output", "verbose", "csv", "json", "handler"}
_CSV_COMMANDS = {"sample-spectrum", "rate"}


class UsageError(Exception):
    """A flag combination that parses but cannot run."""


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _plain(obj, path: str, non_finite: list[str]):
    """JSON-ready copy of obj; non-finite floats become None and are listed by path."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _plain(v, f"{path}.{k}" if path else str(k), non_finite) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v, f"{path}[{i}]", non_finite) for i, v in enumerate(obj)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": _plain(obj.real, f"{path}.re", non_finite), "im": _plain(obj.imag, f"{path}.im", non_finite)}
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            non_finite.append(path)
            return None
        return value
    return obj


def render_json(command: str, result, config: dict) -> str:
    non_finite: list[str] = []
    payload = {"command": command, "config": config, "result": _plain(result, "result", non_finite)}
    if non_finite:
        payload["non_finite"] = non_finite
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_csv(frame: pd.DataFrame) -> str:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format="%.17g")
    return buf.getvalue()


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Flag parsing
# ---------------------------------------------------------------------------

def _parse_scan(text: str) -> tuple[float, float, float]:
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("scan needs step > 0 and stop >= start")
    return start, stop, step


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


# ---------------------------------------------------------------------------
# Run configuration: every name and flag combination is resolved here,
# before any compute
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class RunConfig:
    args: argparse.Namespace
    kind: EnsembleKind | None = None
    alpha: float | None = None
    spec: EnsembleSpec | None = None
    spectral_law: SpectralLaw | None = None


def _spec_from_flags(args, kind: EnsembleKind) -> EnsembleSpec:
    law = laws.law_from_name(args.law)
    if kind.is_block:
        if args.l is None or args.m is None:
            raise UsageError(f"{kind.value} needs --l and --m")
        return make_spec(kind, law, l=args.l, m=args.m)
    if args.n is None:
        raise UsageError(f"{kind.value} needs --n")
    return make_spec(kind, law, n=args.n)


def build_config(args) -> RunConfig:
    """Resolve names and check flag combinations; raises UsageError or LdpError."""
    cfg = RunConfig(args)
    if args.json and args.csv:
        raise UsageError("--json and --csv are exclusive")
    if args.command == "sample-spectrum" and not args.json and args.output and Path(args.output).suffix == ".csv":
        args.csv = True
    if args.csv and args.command not in _CSV_COMMANDS:
        raise UsageError(f"--csv is not available for {args.command}")
    if getattr(args, "kind", None) is not None:
        cfg.kind = kind_from_name(args.kind)
        # free-energy only samples matrices' entry laws when asked for a finite-N estimate
        if hasattr(args, "law") and (args.command != "free-energy" or args.samples > 0):
            cfg.spec = _spec_from_flags(args, cfg.kind)
            cfg.alpha = cfg.spec.alpha
        elif cfg.kind.is_block:
            if args.alpha is None:
                raise UsageError(f"{cfg.kind.value} needs --alpha")
            cfg.alpha = args.alpha

    if args.command == "rate":
        if args.scan is None and args.x is None:
            raise UsageError("rate needs --x or --scan")
        if args.csv and args.scan is None:
            raise UsageError("--csv needs --scan")
    elif args.command == "spherical-j":
        if args.lam is None and cfg.spec is None:
            raise UsageError("spherical-j needs --lam or --kind")
        if args.lam is not None:
            cfg.spectral_law = spectral_from_name(args.spectral_law, args.alpha or 1.0)
    elif args.command == "check-subgaussian":
        laws.law_from_name(args.law, args.field)
    return cfg


# ---------------------------------------------------------------------------
# Commands: each returns (result object, optional CSV table)
# ---------------------------------------------------------------------------

def cmd_sample_spectrum(cfg: RunConfig):
    args, spec = cfg.args, cfg.spec
    spectra = sample_spectra(spec, args.replicas, args.seed, args.threads)
    limit = spec.spectral_law
    rows = []
    for k, s in enumerate(spectra):
        report = distances(s, limit)
        row = {"replica": k, "lambda_max": s.lambda_max, "lambda_min": s.lambda_min,
               "ks": report.ks, "w1": report.w1, "bl_lower": report.bl_lower, "eigenvalues": s.eigenvalues}
        if spec.kind.is_block:
            row["wishart_lambda_max"] = wishart_eigs_from_block(s, spec.l, spec.m).lambda_max
        rows.append(row)
    # one eigenvalue per line, one column per replica
    table = pd.DataFrame({f"replica_{k}": s.eigenvalues for k, s in enumerate(spectra)})
    return {"ensemble": spec.kind, "size": spec.size, "limit_law": limit.kind, "replicas": rows}, table


def cmd_check_subgaussian(cfg: RunConfig):
    args = cfg.args
    law = laws.law_from_name(args.law, args.field)
    report = laws.check_sharp_subgaussian(law, t_max=args.t_max, n_grid=args.grid)
    result = {"law": laws.law_to_json(law), "report": report}
    if law.field is laws.Field.REAL:
        moments = laws.even_moments(law, args.moments)
        result["even_moments"] = moments
        result["moment_criterion"] = laws.moment_criterion(moments)
    return result, None


def cmd_rate(cfg: RunConfig):
    args, kind, alpha = cfg.args, cfg.kind, cfg.alpha
    if args.scan is not None:
        frame = rate_scan(kind, *args.scan, alpha=alpha)
        return {"ensemble": kind, "alpha": alpha, "rows": frame.to_dict(orient="records")}, frame
    closed = rate_for(kind, args.x, alpha)
    variational = None if closed.infinite else rate_variational(args.x, kind, alpha)
    if kind.is_block:
        display = rate_block_display(args.x, kind.beta, alpha)
        ratio = display / closed.value if closed.value > 0 else math.nan
        discrepancy = {"display": display, "display_over_composition": ratio}
    else:
        discrepancy = {"closed_form_minus_quadrature": closed.value - rate_wigner_quadrature(args.x, kind.beta)}
    return {
        "ensemble": kind,
        "alpha": alpha,
        "x": args.x,
        "closed_form": closed.value,
        "variational": variational.value if variational else math.inf,
        "theta_star": variational.theta_star if variational else math.nan,
        "discrepancy": discrepancy,
    }, None


def cmd_free_energy(cfg: RunConfig):
    args, kind, alpha = cfg.args, cfg.kind, cfg.alpha
    if not kind.is_block:
        result = {"ensemble": kind, "theta": args.theta, "value": f_wigner(args.theta, kind.beta)}
    else:
        res = f_wishart(args.theta, kind.beta, alpha, swap_logs=args.swap_logs)
        result = {
            "ensemble": kind,
            "theta": args.theta,
            "alpha": alpha,
            "value": res.value,
            "x_star": res.x_star,
            "c_alpha": c_alpha(alpha),
            "d_theta": d_theta_f_wishart(args.theta, kind.beta, alpha),
            "swap_logs": args.swap_logs,
        }
    if cfg.spec is not None:
        rng = spawn_generators(args.seed, 1)[0]
        est = f_n_estimate(cfg.spec, args.theta, args.samples, rng, split_norm=args.split_norm, seed=args.seed)
        result["size"] = cfg.spec.size
        result["law"] = laws.law_to_json(cfg.spec.law)
        result["f_n_estimate"] = est
    return result, None


def cmd_spherical_j(cfg: RunConfig):
    args = cfg.args
    result: dict = {"theta": args.theta, "beta": args.beta}
    if cfg.spectral_law is not None:
        law = cfg.spectral_law
        result["spectral_law"] = {"kind": law.kind, "alpha": law.alpha}
        result["lam"] = args.lam
        result["j_limit"] = j_limit(JLimitInput(law, args.theta, args.lam, args.beta))
    if cfg.spec is not None:
        spec = cfg.spec
        spectrum = sample_spectra(spec, 1, args.seed, 1)[0]
        result["ensemble"] = spec.kind
        result["lambda_max"] = spectrum.lambda_max
        result["j_n_contour"] = j_n_contour(spectrum, args.theta, spec.beta)
        if args.samples:
            x = np.diag(spectrum.eigenvalues)
            rng = spawn_generators(args.seed, 2)[1]
            result["j_n_monte_carlo"] = j_n_monte_carlo(x, args.theta, args.samples, rng, seed=args.seed)
    return result, None


def cmd_spike(cfg: RunConfig):
    args, kind, alpha = cfg.args, cfg.kind, cfg.alpha
    if kind.is_block:
        spike = spike_location_wishart(args.theta, kind.beta, alpha)
        critical = critical_theta_wishart(kind.beta, alpha)
    else:
        spike = rho_theta_wigner(args.theta, kind.beta)
        critical = 0.5 * kind.beta
    return {
        "ensemble": kind,
        "theta": args.theta,
        "alpha": alpha,
        "rho": spike.location,
        "supercritical": spike.supercritical,
        "theta_critical": critical,
    }, None


def cmd_estimate_tail(cfg: RunConfig):
    args, spec = cfg.args, cfg.spec
    if args.naive:
        est = estimate_tail_naive(spec, args.x, args.delta, args.samples, args.seed, args.threads)
    else:
        est = estimate_tail(
            spec, args.x, args.delta, args.samples, args.seed, args.threads,
            weighting=args.weighting, deloc_eps=args.deloc_eps, split_norm=args.split_norm,
        )
    rate = rate_for(spec.kind, args.x, spec.alpha)
    result = {f.name: getattr(est, f.name) for f in dataclasses.fields(est)}
    result["predicted_log_prob_per_N"] = -rate.value
    result["predicted_spike"] = predicted_spike(spec, est.theta).location if est.theta > 0 else None
    return result, None


def cmd_validate(cfg: RunConfig):
    args = cfg.args
    sizes = {} if args.n is None else {"n": args.n}
    result = run_suite(args.suite, seeds=args.seeds, seed=args.seed, threads=args.threads, **sizes)
    return result.to_json(), None


def cmd_ledger(cfg: RunConfig):
    return [entry.to_json() for entry in build_ledger()], None


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(threads_default: int) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--threads", type=_positive_int, default=threads_default,
                        help="worker cap (default: LDP_EIGEN_THREADS or the core count)")
    common.add_argument("--json", action="store_true", help="JSON output (the default)")
    common.add_argument("--csv", action="store_true", help="write a CSV table instead of JSON")
    common.add_argument("--out", "--output", dest="output",
                        help="write to this file instead of stdout; a .csv name implies --csv for spectra")
    common.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    return common


def _kind_flag(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--kind", "--ensemble", dest="kind", required=required,
                   help="wigner1, wigner2, block1 or block2")


def _ensemble_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    _kind_flag(p, required)
    p.add_argument("--law", default="rademacher", help=f"entry law ({', '.join(laws.law_names())})")
    p.add_argument("--n", type=_positive_int, help="matrix size for Wigner kinds")
    p.add_argument("--l", type=_positive_int, help="rows of the rectangular block")
    p.add_argument("--m", type=_positive_int, help="columns of the rectangular block")


def build_parser() -> argparse.ArgumentParser:
    common = _common(default_threads())
    parser = argparse.ArgumentParser(prog="eigenldp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-spectrum", parents=[common], help="sample spectra and distances to the limit")
    _ensemble_flags(p)
    p.add_argument("--replicas", type=_positive_int, default=1)
    p.set_defaults(handler=cmd_sample_spectrum)

    p = sub.add_parser("check-subgaussian", parents=[common], help="sharp sub-Gaussian check of an entry law")
    p.add_argument("--law", required=True)
    p.add_argument("--field", choices=["real", "complex"], default="real")
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--grid", type=_positive_int, default=4001)
    p.add_argument("--moments", type=_positive_int, default=8)
    p.set_defaults(handler=cmd_check_subgaussian)

    p = sub.add_parser("rate", parents=[common], help="rate function of lambda_max")
    _kind_flag(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--scan", type=_parse_scan, help="start:stop:step")
    p.set_defaults(handler=cmd_rate)

    p = sub.add_parser("free-energy", parents=[common], help="annealed free energy, limit and finite-N")
    _ensemble_flags(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--swap-logs", action="store_true")
    p.add_argument("--samples", type=int, default=0, help="sphere samples for the finite-N estimate")
    p.add_argument("--split-norm", action="store_true")
    p.set_defaults(handler=cmd_free_energy)

    p = sub.add_parser("spherical-j", parents=[common], help="limiting and finite-N spherical integrals")
    _ensemble_flags(p, required=False)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--beta", type=int, choices=[1, 2], default=1)
    p.add_argument("--spectral-law", default="semicircle")
    p.add_argument("--alpha", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--samples", type=int, default=0, help="also run the Monte Carlo estimate")
    p.set_defaults(handler=cmd_spherical_j)

    p = sub.add_parser("spike", parents=[common], help="top eigenvalue under a rank-one tilt")
    _kind_flag(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--alpha", type=float)
    p.set_defaults(handler=cmd_spike)

    p = sub.add_parser("estimate-tail", parents=[common], help="importance-sampling tail estimate")
    _ensemble_flags(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--samples", type=_positive_int, default=2000)
    p.add_argument("--weighting", choices=["spherical", "direction"], default="spherical")
    p.add_argument("--deloc-eps", type=float)
    p.add_argument("--split-norm", action="store_true")
    p.add_argument("--naive", action="store_true", help="plain Monte Carlo instead")
    p.set_defaults(handler=cmd_estimate_tail)

    p = sub.add_parser("validate", parents=[common], help="run a numerical check suite")
    p.add_argument("--suite", choices=sorted(SUITES), required=True)
    p.add_argument("--seeds", type=_positive_int)
    p.add_argument("--n", type=_positive_int, help="matrix size override")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("ledger", parents=[common], help="printed-versus-derived formula ledger")
    p.set_defaults(handler=cmd_ledger)
    return parser


def _config(args) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _UNECHOED}
    config["version"] = VERSION
    return _plain(config, "config", [])


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        cfg = build_config(args)
    except (UsageError, LdpError) as exc:
        print(f"eigenldp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logger.debug("running %s with seed %s", args.command, args.seed)

    try:
        result, table = args.handler(cfg)
    except LdpError as exc:
        print(f"eigenldp: {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    if args.csv:
        _emit(render_csv(table), args.output)
    else:
        _emit(render_json(args.command, result, _config(args)), args.output)

    if args.command == "validate" and not result["passed"]:
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
