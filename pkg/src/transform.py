"""
Spherical transform of radial functions and measures, its inversion, the Abel
transform and the Euclidean Fourier helpers.

Conventions:
    forward   f^(lambda) = int_0^inf f(r) phi_lambda(r) A(r) dr        (no constant)
    inverse   f(r) = c0 int_R F(lambda) phi_lambda(r) |c(lambda)|^-2 dlambda
    Fourier   F(lambda) = int_R e^(-i lambda t) g(t) dt
"""
import logging
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import nnls

from .exceptions import (DecayError, DeconvolutionError, ParameterDomainError,
                         QuadratureError, TruncationError)
from .models import (AbelMeasure, RadialMeasure, RadialProfile, SpaceParams,
                     SpectralFunction, TransformResult)
from .params import density
from .plancherel import evaluator_for, plancherel_for
from .quadrature import GaussGrid, radial_grid, spectral_grid

logger = logging.getLogger(__name__)

# edge-to-peak ratio of |f| phi_0 A; profiles from inverse transforms sit at a
# roundoff floor of 1e-14 to 1e-12 there
DECAY_RATIO = 1e-10
TAIL_FRACTION = 1e-10


def profile_from_rule(rule: Callable[[np.ndarray], np.ndarray], grid: GaussGrid,
                      decay_class: str = "gaussian") -> RadialProfile:
    """Sample a radial rule on the nodes of a radial grid"""
    support = grid.upper if decay_class == "compact" else None
    return RadialProfile(rs=grid.nodes, values=rule(grid.nodes), decay_class=decay_class,
                         support=support, grid=grid)


def _on_gauss_grid(f: RadialProfile):
    """Samples of f on a Gauss grid: the profile's own, or a spline resampling"""
    if f.grid is not None:
        return f.grid, f.values
    base = radial_grid()
    upper = f.support if f.decay_class == "compact" else float(f.rs[-1])
    n_panels = max(1, int(np.ceil(upper / base.panel_width - 1e-9)))
    grid = GaussGrid(upper=n_panels * base.panel_width, panel_width=base.panel_width,
                     order=base.order)
    spline = CubicSpline(f.rs, f.values, extrapolate=False)
    values = np.nan_to_num(spline(grid.nodes), nan=0.0)
    logger.debug(f"Resampled profile of {f.rs.size} points onto {grid.spec()}")
    return grid, values


def _check_decay(params: SpaceParams, grid: GaussGrid, values: np.ndarray, decay_class: str):
    if decay_class == "compact":
        return
    ev = evaluator_for(params.m, params.k)
    mass = np.abs(values) * ev.phi0(grid.nodes) * density(params, grid.nodes)
    peak = float(np.max(mass, initial=0.0))
    edge = float(np.max(mass[grid.last_panel()], initial=0.0))
    if peak > 0 and edge > DECAY_RATIO * peak:
        raise DecayError(
            "profile does not decay within the radial grid",
            {"edge_ratio": edge / peak, "r_max": grid.upper, "decay_class": decay_class},
        )


def spherical_transform(params: SpaceParams, f: RadialProfile,
                        lam_grid: Optional[GaussGrid] = None) -> TransformResult:
    """
    Spherical transform of a radial profile on a spectral grid.

    Returns:
        TransformResult with the even transform and an error estimate equal to the
        largest contribution of the outermost radial panel
    """
    lam_grid = lam_grid or spectral_grid()
    grid, values = _on_gauss_grid(f)
    _check_decay(params, grid, values, f.decay_class)

    ev = evaluator_for(params.m, params.k)
    phi = ev.real_phi(lam_grid.nodes, grid.nodes)
    integrand = grid.weights * density(params, grid.nodes) * values
    half = phi @ integrand
    tail = phi[:, grid.last_panel()] @ integrand[grid.last_panel()]
    error = float(np.max(np.abs(tail), initial=0.0))
    if not np.all(np.isfinite(half)):
        raise QuadratureError("non-finite transform values", {"grid": grid.spec()})

    spectrum = SpectralFunction(grid=lam_grid, values=np.concatenate([half[::-1], half]))
    return TransformResult(spectrum=spectrum, error_estimate=error)


def transform_at(params: SpaceParams, f: RadialProfile, lambdas) -> np.ndarray:
    """Spherical transform at arbitrary (possibly complex) spectral parameters"""
    grid, values = _on_gauss_grid(f)
    _check_decay(params, grid, values, f.decay_class)
    ev = evaluator_for(params.m, params.k)
    phi = ev.phi_profile(np.atleast_1d(lambdas), grid.nodes)
    return phi @ (grid.weights * density(params, grid.nodes) * values)


def radial_integral(params: SpaceParams, f: RadialProfile) -> float:
    """int_0^inf f(r) A(r) dr, i.e. the integral of f over the space"""
    grid, values = _on_gauss_grid(f)
    return float(grid.integrate(values * density(params, grid.nodes)))


def _check_tail(F: SpectralFunction, dens: np.ndarray):
    mass = np.abs(F.half_values()) * F.grid.weights * dens
    total = float(np.sum(mass))
    tail = float(np.sum(mass[F.grid.last_panel()]))
    if total > 0 and tail > TAIL_FRACTION * total:
        raise TruncationError(
            "spectral mass beyond the grid exceeds the allowed fraction",
            {"tail_fraction": tail / total, "lambda_max": F.grid.upper},
        )


def inverse_transform(params: SpaceParams, F: SpectralFunction,
                      rs: Union[GaussGrid, np.ndarray]) -> RadialProfile:
    """
    Inverse spherical transform c0 int F phi_lambda(r) |c|^-2 dlambda.

    Args:
        params: Geometry
        F: Even spectral function decaying within its grid
        rs: A radial Gauss grid, or an ascending array of radii

    Returns:
        RadialProfile on the requested radii
    """
    if not F.even:
        raise ParameterDomainError("inverse transform needs an even spectral function")
    values = F.half_values()
    if np.iscomplexobj(values):
        if np.max(np.abs(values.imag), initial=0.0) > 1e-12 * max(1.0, F.sup):
            raise ParameterDomainError("inverse transform needs a real spectral function")
        values = values.real

    pd = plancherel_for(params.m, params.k)
    dens = pd.density(F.grid.nodes)
    _check_tail(F, dens)

    grid = rs if isinstance(rs, GaussGrid) else None
    radii = grid.nodes if grid is not None else np.asarray(rs, dtype=float)
    ev = evaluator_for(params.m, params.k)
    phi = ev.real_phi(F.grid.nodes, radii)
    out = 2.0 * pd.c0 * ((values * F.grid.weights * dens) @ phi)
    return RadialProfile(rs=radii, values=out, decay_class="gaussian", grid=grid)


def transform_measure(params: SpaceParams, theta: RadialMeasure,
                      lam_grid: Optional[GaussGrid] = None) -> SpectralFunction:
    """theta^(lambda) = sum_i w_i phi_lambda(r_i) on a spectral grid"""
    lam_grid = lam_grid or spectral_grid()
    half = measure_transform_at(params, theta, lam_grid.nodes)
    return SpectralFunction(grid=lam_grid, values=np.concatenate([half[::-1], half]))


def measure_transform_at(params: SpaceParams, theta: RadialMeasure, lambdas) -> np.ndarray:
    """theta^ at arbitrary real spectral parameters"""
    if theta.rs.size == 0:
        return np.zeros(np.atleast_1d(lambdas).shape)
    ev = evaluator_for(params.m, params.k)
    return (ev.phi_profile(np.atleast_1d(lambdas), theta.rs) @ theta.weights).real


def phi0_mass(params: SpaceParams, theta: RadialMeasure) -> float:
    """sum_i w_i phi_0(r_i), the bound of |theta^| on the real line"""
    if theta.rs.size == 0:
        return 0.0
    return float(evaluator_for(params.m, params.k).phi0(theta.rs) @ theta.weights)


# ----------------------------------------------------------------------
# Euclidean side

def _uniform_spacing(ts: np.ndarray) -> float:
    steps = np.diff(ts)
    if ts.size < 2 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
        raise ParameterDomainError("t-grid must be uniform and ascending")
    return float(steps[0])


def euclidean_fourier(g: np.ndarray, ts: np.ndarray,
                      lam_grid: Optional[GaussGrid] = None) -> SpectralFunction:
    """
    F(lambda) = int e^(-i lambda t) g(t) dt for even samples g, on a spectral grid.

    ts is either symmetric about 0 or the half grid starting at 0; the
    trapezoid rule is used (spectrally accurate for smooth decaying g).
    """
    lam_grid = lam_grid or spectral_grid()
    ts = np.asarray(ts, dtype=float)
    g = np.asarray(g, dtype=float)
    dt = _uniform_spacing(ts)
    if lam_grid.upper * dt > np.pi:
        raise ParameterDomainError("t-grid too coarse for requested frequencies (aliasing)",
                                   {"dt": dt, "lambda_max": lam_grid.upper})
    w = np.full(ts.size, dt)
    w[0] = w[-1] = dt / 2
    if abs(ts[0]) < 1e-12:
        # half grid: mirror everything except t = 0
        w = 2 * w
        w[0] = dt
    half = np.cos(np.outer(lam_grid.nodes, ts)) @ (w * g)
    return SpectralFunction(grid=lam_grid, values=np.concatenate([half[::-1], half]))


def euclidean_fourier_measure(ts: np.ndarray, masses: np.ndarray, lambdas) -> np.ndarray:
    """Fourier transform of the even point-mass measure stored on a half grid"""
    ts = np.asarray(ts, dtype=float)
    mult = np.where(ts == 0.0, 1.0, 2.0)
    return np.cos(np.outer(np.atleast_1d(lambdas), ts)) @ (mult * masses)


def euclidean_inverse(F: SpectralFunction, ts) -> np.ndarray:
    """(1/2pi) int e^(i lambda s) F(lambda) dlambda for even F"""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    values = F.values.real if np.iscomplexobj(F.values) else F.values
    w = F.grid.symmetric_weights() * values
    return np.cos(np.outer(ts, F.lambdas)) @ w / (2 * np.pi)


def abel_transform(params: SpaceParams, f: RadialProfile, ts,
                   lam_grid: Optional[GaussGrid] = None) -> np.ndarray:
    """Abel transform, computed as the inverse Euclidean Fourier transform of f^"""
    spectrum = spherical_transform(params, f, lam_grid).spectrum
    return euclidean_inverse(spectrum, ts)


def abel_of_measure(params: SpaceParams, theta: RadialMeasure, ts,
                    lam_grid: Optional[GaussGrid] = None,
                    tolerance: float = 1e-6) -> AbelMeasure:
    """
    Nonnegative even point masses on the half t-grid whose Fourier transform
    matches theta^ on the spectral grid (plus lambda = 0).
    """
    ts = np.asarray(ts, dtype=float)
    if ts.size == 0 or ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
        raise ParameterDomainError("abel t-grid must start at 0 and ascend")
    lam_grid = lam_grid or spectral_grid()
    lambdas = np.concatenate([[0.0], lam_grid.nodes])
    target = measure_transform_at(params, theta, lambdas)

    mult = np.where(ts == 0.0, 1.0, 2.0)
    design = np.cos(np.outer(lambdas, ts)) * mult[None, :]
    masses, _ = nnls(design, target, maxiter=50 * ts.size)
    residual = float(np.max(np.abs(design @ masses - target)))
    if residual > tolerance:
        raise DeconvolutionError("nonnegative deconvolution residual above tolerance",
                                 {"residual": residual, "tolerance": tolerance,
                                  "dt": float(ts[1] - ts[0]) if ts.size > 1 else 0.0})
    logger.debug(f"Abel measure fitted with residual {residual:.2e}")
    return AbelMeasure(ts=ts, masses=masses, residual=residual)
