"""
Command-line front end.

Every subcommand resolves a RunConfig (config file, then flags), runs one
operation and writes CSV or JSON to --output (stdout by default).

Exit status: 0 success, 2 domain error, 3 numerical failure, 64 usage error,
65 malformed input.
"""
import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy.interpolate import CubicSpline

from .bochner import CandidateH, certify, krein_fit, pd_check, recover_measure
from .config import Config
from .exceptions import DrspherError, MalformedInputError, ParameterDomainError
from .heat import gamma_mass, gamma_term, heat_kernel, heat_mass, heat_radius
from .hypergroup import kernel_K, kernel_tensor, odot
from .kernel_store import KernelStore
from .models import GridSpec, RadialProfile, RunConfig, SpaceParams, SpectralFunction
from .params import derive_params, parse_config_text
from .plancherel import (calibrated_params, evaluator_for, gaussian_spectrum, plancherel_for,
                         round_trip_factor)
from .quadrature import GaussGrid, spectral_grid
from .transform import inverse_transform, spherical_transform

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors raised instead of exiting with status 2"""

    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------------
# CSV / JSON

def read_csv(path: str, columns: Sequence[str]) -> List[np.ndarray]:
    """Read the named float columns; header row required"""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise MalformedInputError(f"cannot read {path}: {e}")
    reader = csv.reader(io.StringIO(text))
    try:
        header = [name.strip() for name in next(reader)]
    except StopIteration:
        raise MalformedInputError("empty CSV file", {"path": path})
    missing = [c for c in columns if c not in header]
    if missing:
        raise MalformedInputError("CSV header lacks required columns",
                                  {"path": path, "missing": missing, "header": header})
    index = [header.index(c) for c in columns]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            rows.append([float(row[i]) for i in index])
        except (ValueError, IndexError):
            raise MalformedInputError("non-numeric CSV row", {"path": path, "line": lineno})
    if len(rows) < 2:
        raise MalformedInputError("CSV needs at least two data rows", {"path": path})
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        raise MalformedInputError("CSV contains non-finite values", {"path": path})
    return [data[:, j] for j in range(len(columns))]


def format_csv(header: Sequence[str], columns: Sequence[np.ndarray]) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(v if isinstance(v, str) else "%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


def format_json(payload: Dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _emit(args, text: str):
    if args.output:
        Path(args.output).write_text(text)
        logger.info(f"Wrote {args.output}")
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------
# inputs

def spectrum_from_csv(path: str, upper: Optional[float] = None) -> SpectralFunction:
    """
    Even spectral function from `lambda,value` samples at lambda >= 0, interpolated
    by a cubic spline onto the default spectral grid (cut to the sampled range).
    """
    lams, values = read_csv(path, ["lambda", "value"])
    keep = lams >= 0
    lams, values = lams[keep], values[keep]
    order = np.argsort(lams)
    lams, values = lams[order], values[order]
    if lams.size < 2 or np.any(np.diff(lams) <= 0):
        raise MalformedInputError("lambda column must hold distinct nonnegative values",
                                  {"path": path})
    base = spectral_grid()
    top = min(upper or base.upper, float(lams[-1]))
    n_panels = int(np.floor(top / base.panel_width + 1e-9))
    if n_panels < 1:
        raise ParameterDomainError("spectrum does not cover one spectral panel",
                                   {"lambda_max": float(lams[-1])})
    grid = GaussGrid(upper=n_panels * base.panel_width, panel_width=base.panel_width,
                     order=base.order)
    spline = CubicSpline(lams, values)
    return SpectralFunction.from_rule(lambda lam: spline(np.clip(np.abs(lam), lams[0], lams[-1])),
                                      grid)


def profile_from_csv(path: str, decay_class: str) -> RadialProfile:
    rs, values = read_csv(path, ["r", "value"])
    support = float(rs[-1]) if decay_class == "compact" else None
    try:
        return RadialProfile(rs=rs, values=values, decay_class=decay_class, support=support)
    except ValidationError as e:
        raise MalformedInputError(f"invalid profile: {e.errors()[0]['msg']}", {"path": path})


# ----------------------------------------------------------------------
# configuration

CONFIG_KEYS = {
    "m": ("m", int),
    "k": ("k", int),
    "density_scale": ("density_scale", float),
    "tolerance": ("tolerance", float),
    "cache_dir": ("cache_dir", str),
    "output_format": ("output_format", str),
}


def resolve_config(args) -> RunConfig:
    """Config file values, then command-line overrides"""
    values: Dict = {}
    grids: Dict[str, Dict] = {"lambda_grid": {}, "r_grid": {}, "t_grid": {}}
    if args.config:
        try:
            entries = parse_config_text(Path(args.config).read_text())
        except OSError as e:
            raise MalformedInputError(f"cannot read config {args.config}: {e}")
        for key, raw in entries.items():
            try:
                if key in CONFIG_KEYS:
                    name, cast = CONFIG_KEYS[key]
                    values[name] = cast(raw)
                elif key.rsplit("_", 1)[0] in ("lambda", "r", "t") and \
                        key.rsplit("_", 1)[1] in ("min", "max", "count"):
                    prefix, field = key.rsplit("_", 1)
                    grids[f"{prefix}_grid"][field] = int(raw) if field == "count" else float(raw)
                else:
                    logger.warning(f"Ignoring unknown config key '{key}'")
            except ValueError:
                raise MalformedInputError("bad config value", {"key": key, "value": raw})

    for name in ("m", "k", "density_scale", "tolerance", "cache_dir"):
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    if args.format is not None:
        values["output_format"] = args.format
    if args.no_cache:
        values["use_cache"] = False
    if getattr(args, "rmax", None) is not None:
        grids["r_grid"]["max"] = args.rmax
    if getattr(args, "points", None) is not None:
        grids["r_grid"]["count"] = args.points

    defaults = RunConfig()
    try:
        for name, fields in grids.items():
            if fields:
                values[name] = GridSpec(**{**getattr(defaults, name).model_dump(), **fields})
        return RunConfig(**values)
    except ValidationError as e:
        raise ParameterDomainError(f"invalid configuration: {e.errors()[0]['msg']}")


def resolve_params(cfg: RunConfig) -> SpaceParams:
    if cfg.density_scale is not None:
        return derive_params(cfg.m, cfg.k, density_scale=cfg.density_scale)
    derive_params(cfg.m, cfg.k)
    return calibrated_params(cfg.m, cfg.k)


def open_store(cfg: RunConfig) -> KernelStore:
    if not cfg.cache_dir:
        Config.ensure_cache_dir()
        return KernelStore(Config.cache_db_path())
    cache_dir = Path(cfg.cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    return KernelStore(cache_dir / Config.CACHE_DB_NAME)


def _tensor(cfg: RunConfig, params: SpaceParams):
    store = open_store(cfg)
    try:
        return kernel_tensor(params, store=store, use_cache=cfg.use_cache)
    finally:
        store.close()


# ----------------------------------------------------------------------
# subcommands

def cmd_eval_phi(args, cfg: RunConfig) -> str:
    params = derive_params(cfg.m, cfg.k)
    rs = np.linspace(0.0, cfg.r_grid.max, cfg.r_grid.count)
    values = evaluator_for(params.m, params.k).phi_profile([args.lam], rs)[0]
    if cfg.output_format == "json":
        return format_json({"lambda_re": args.lam.real, "lambda_im": args.lam.imag, "r": rs,
                            "phi_re": values.real, "phi_im": values.imag})
    lam_re = np.full(rs.size, args.lam.real)
    lam_im = np.full(rs.size, args.lam.imag)
    return format_csv(["lambda_re", "lambda_im", "r", "phi_re", "phi_im"],
                      [lam_re, lam_im, rs, values.real, values.imag])


def _spectrum_output(cfg: RunConfig, F: SpectralFunction, extra: Optional[Dict] = None) -> str:
    lams, values = F.grid.nodes, np.real(F.half_values())
    if cfg.output_format == "json":
        return format_json({"lambda": lams, "value": values, **(extra or {})})
    return format_csv(["lambda", "value"], [lams, values])


def _profile_output(cfg: RunConfig, rs, values, name: str = "value") -> str:
    if cfg.output_format == "json":
        return format_json({"r": rs, name: values})
    return format_csv(["r", name], [rs, values])


def cmd_transform(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    f = profile_from_csv(args.input, args.decay)
    result = spherical_transform(params, f)
    return _spectrum_output(cfg, result.spectrum, {"error_estimate": result.error_estimate})


def cmd_inverse(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    F = spectrum_from_csv(args.input)
    rs = cfg.r_grid.points()
    profile = inverse_transform(params, F, rs)
    return _profile_output(cfg, rs, profile.values)


def cmd_heat(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    if args.t is None or not args.t > 0:
        raise ParameterDomainError("heat kernel time must be positive", {"t": args.t})
    rs = cfg.r_grid.points()
    profile = inverse_transform(params, gaussian_spectrum(params, args.t, spectral_grid()), rs)
    return _profile_output(cfg, rs, profile.values, name="p_t")


def cmd_kernel(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    if args.grid is None:
        tensor = _tensor(cfg, params)
        return format_json({"m": tensor.m, "k": tensor.k,
                            "density_scale": tensor.density_scale, "grid": tensor.grid.spec(),
                            "radial_grid": tensor.r_grid_spec, "size": tensor.size,
                            "max_quadrature_error": float(np.max(tensor.quadrature_error))})
    try:
        points = np.array([float(x) for x in args.grid.split(",") if x.strip()])
    except ValueError:
        raise ParameterDomainError("--grid takes comma-separated numbers", {"grid": args.grid})
    lam, mu, nu = np.meshgrid(points, points, points, indexing="ij")
    values = kernel_K(params, lam, mu, nu)
    columns = [lam.ravel(), mu.ravel(), nu.ravel(), values.ravel()]
    if cfg.output_format == "json":
        return format_json(dict(zip(["lambda", "mu", "nu", "K"], columns)))
    return format_csv(["lambda", "mu", "nu", "K"], columns)


def cmd_odot(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    A = spectrum_from_csv(args.a)
    B = spectrum_from_csv(args.b)
    tensor = _tensor(cfg, params)
    return _spectrum_output(cfg, odot(params, A, B, tensor))


def cmd_certify(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    h = CandidateH(h=spectrum_from_csv(args.h))
    report = certify(params, h, _tensor(cfg, params), tolerance=cfg.tolerance)
    return format_json(report.model_dump())


def cmd_recover(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    h = CandidateH(h=spectrum_from_csv(args.h))
    recovery = recover_measure(params, h, cfg.r_grid.points(), tensor=_tensor(cfg, params))
    theta = recovery.measure
    if cfg.output_format == "json":
        return format_json({"r": theta.rs, "weight": theta.weights,
                            "residual": recovery.residual, "phi0_mass": recovery.phi0_mass,
                            "h_at_zero": recovery.h_at_zero,
                            "representable": recovery.representable,
                            "projected": recovery.projected,
                            "certification": recovery.certification})
    return format_csv(["r", "weight"], [theta.rs, theta.weights])


def cmd_krein_fit(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    f = profile_from_csv(args.f, "gaussian")
    fit = krein_fit(params, f)
    if cfg.output_format == "csv":
        axis = ["real"] * fit.real_lambdas.size + ["imaginary"] * fit.imag_lambdas.size
        return format_csv(["axis", "lambda", "weight"],
                          [axis, np.concatenate([fit.real_lambdas, fit.imag_lambdas]),
                           np.concatenate([fit.mu1, fit.mu2])])
    return format_json({"real_lambdas": fit.real_lambdas, "mu1": fit.mu1,
                        "imag_lambdas": fit.imag_lambdas, "mu2": fit.mu2,
                        "residual": fit.residual, "relative_residual": fit.relative_residual,
                        "f_at_zero": fit.f_at_zero, "mu1_bound": fit.mu1_bound,
                        "positive_definite": fit.positive_definite})


def cmd_pd_check(args, cfg: RunConfig) -> str:
    params = resolve_params(cfg)
    h = CandidateH(h=spectrum_from_csv(args.h))
    result = pd_check(params, h, spacing=args.spacing, size=args.size)
    return format_json(result.model_dump())


def selftest_report(m: int = 2, k: int = 1, store: Optional[KernelStore] = None,
                    use_cache: bool = True) -> Dict:
    """Reduced acceptance run; every entry is a pure function of (m, k) and the seed"""
    params = calibrated_params(m, k)
    ev = evaluator_for(m, k)
    pd = plancherel_for(m, k)
    checks: Dict[str, Dict] = {}

    rs = np.linspace(0.1, 20.0, 16)
    residual = max(ev.eigen_residual(lam, r) for lam in (0.0, 1.0, 3.0, 1j * params.rho_value)
                   for r in rs)
    checks["eigen_residual"] = {"value": residual, "pass": residual <= 1e-6}

    one = float(np.max(np.abs(ev.phi_profile([1j * params.rho_value], np.linspace(0, 10, 21)) - 1)))
    checks["phi_i_rho_constant"] = {"value": one, "pass": one <= 1e-9}

    gate = pd.gate(ev)
    checks["c_function_gate"] = {"value": gate, "pass": gate <= 1e-4}

    _, spread = round_trip_factor(params, 1.0)
    checks["gaussian_round_trip"] = {"value": spread, "pass": spread <= 1e-7}

    hk = heat_kernel(params, 1.0)
    mass = heat_mass(params, hk)
    checks["heat_mass"] = {"value": mass, "pass": abs(mass - 1.0) <= 1e-6,
                           "radius": heat_radius(1.0)}

    worst = max(abs(gamma_mass(params, gamma_term(params, n)) - 1.0) for n in (5, 10, 20, 40))
    checks["gamma_mass"] = {"value": worst, "pass": worst <= 1e-8}

    tensor = kernel_tensor(params, store=store, use_cache=use_cache)
    rho2 = params.rho_value ** 2
    gaussian = CandidateH.from_rule(lambda lam: np.exp(-(lam ** 2 + rho2)))
    negative = CandidateH.from_rule(lambda lam: -np.ones_like(lam))
    good = certify(params, gaussian, tensor)
    bad = certify(params, negative, tensor)
    checks["certify_gaussian"] = {"value": good.min_value, "pass": good.verdict == "pass"}
    checks["certify_negative"] = {"value": bad.min_value, "pass": bad.verdict == "fail"}

    pd_result = pd_check(params, gaussian, spacing=0.5, size=12)
    checks["toeplitz_gaussian"] = {"value": pd_result.min_eigenvalue, "pass": pd_result.psd}

    return {
        "version": Config.APP_VERSION,
        "space": {"m": m, "k": k, "density_scale": params.density_scale},
        "seed": Config.SEED,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks.values()),
    }


def cmd_selftest(args, cfg: RunConfig) -> str:
    store = open_store(cfg)
    try:
        report = selftest_report(cfg.m, cfg.k, store=store, use_cache=cfg.use_cache)
    finally:
        store.close()
    return format_json(report)


# ----------------------------------------------------------------------
# parser

def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--m", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--density-scale", dest="density_scale", type=float,
                        help="pinned density scale (skips calibration)")
    common.add_argument("--tolerance", type=float)
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--no-cache", dest="no_cache", action="store_true",
                        help="rebuild the kernel tensor even when cached")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--output", help="output file (stdout when omitted)")
    common.add_argument("--rmax", type=float)
    common.add_argument("--points", type=int)

    parser = ArgumentParser(prog=Config.APP_NAME,
                            description="Spherical analysis on Damek-Ricci spaces")
    parser.add_argument("--version", action="version", version=Config.APP_VERSION)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("eval-phi", parents=[common], help="phi_lambda on a radius grid")
    p.add_argument("--lambda", dest="lam", type=complex, required=True)
    p.set_defaults(handler=cmd_eval_phi)

    p = sub.add_parser("transform", parents=[common], help="spherical transform of r,value")
    p.add_argument("--input", required=True)
    p.add_argument("--decay", choices=["compact", "gaussian", "schwartz-p2"], default="gaussian")
    p.set_defaults(handler=cmd_transform)

    p = sub.add_parser("inverse", parents=[common], help="inverse transform of lambda,value")
    p.add_argument("--input", required=True)
    p.set_defaults(handler=cmd_inverse)

    p = sub.add_parser("heat", parents=[common], help="heat kernel p_t")
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(handler=cmd_heat)

    p = sub.add_parser("kernel", parents=[common], help="K(lambda, mu, nu) or the cached tensor")
    p.add_argument("--grid", help="comma-separated lambda values")
    p.set_defaults(handler=cmd_kernel)

    p = sub.add_parser("odot", parents=[common], help="dual product of two spectra")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(handler=cmd_odot)

    for name, handler, flag in (("certify", cmd_certify, "--h"), ("recover", cmd_recover, "--h"),
                                ("krein-fit", cmd_krein_fit, "--f")):
        p = sub.add_parser(name, parents=[common])
        p.add_argument(flag, required=True)
        p.set_defaults(handler=handler)

    p = sub.add_parser("pd-check", parents=[common], help="Toeplitz check of h on R")
    p.add_argument("--h", required=True)
    p.add_argument("--spacing", type=float, default=0.5)
    p.add_argument("--size", type=int, default=12)
    p.set_defaults(handler=cmd_pd_check)

    p = sub.add_parser("selftest", parents=[common], help="reduced acceptance run (JSON)")
    p.set_defaults(handler=cmd_selftest)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, execute and map failures to exit codes"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{parser.prog}: {e}\n")
        return EXIT_USAGE

    try:
        cfg = resolve_config(args)
        _emit(args, args.handler(args, cfg))
    except DrspherError as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(f"{parser.prog} {args.command}: {e}\n")
        return e.exit_code
    return EXIT_OK
