"""
c-function, Plancherel density |c(lambda)|^-2, inversion constant c0 and
calibration of the radial density normalization.
"""
import logging
from functools import lru_cache
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaln, loggamma

from .exceptions import CalibrationError, ParameterDomainError
from .models import SpaceParams, SpectralFunction
from .params import derive_params
from .quadrature import GaussGrid, radial_grid, spectral_grid
from .spherical import SphericalEvaluator

logger = logging.getLogger(__name__)

POLE_GUARD = 1e-8
FIT_RADIUS = 25.0
# the fit window never starts below this radius; the e^(-r) corrections are ~3e-7 there
FIT_START = 15.0
GATE_TOLERANCE = 1e-4


def c0_constant(params: SpaceParams) -> float:
    """c0 = 2^(k-2) pi^(-n/2-1) Gamma(n/2), evaluated in extended precision"""
    with mpmath.workdps(40):
        n = params.n
        value = mpmath.mpf(2) ** (params.k - 2) * mpmath.pi ** (-mpmath.mpf(n) / 2 - 1) \
            * mpmath.gamma(mpmath.mpf(n) / 2)
        return float(value)


def closed_form_scale(params: SpaceParams) -> float:
    """Density scale that makes c0 the exact inversion constant: 2^(m+2k) / (4 pi c0)"""
    return 2.0 ** (params.m + 2 * params.k) / (4 * np.pi * c0_constant(params))


class PlancherelData:
    """
    Plancherel data of a space.

    The c-function is the Jacobi c-function at spectral parameter 2 lambda with
    indices alpha = (m+k-1)/2, beta = (k-1)/2:
        c(lambda) = 2^(Q - 2i lambda) Gamma(alpha+1) Gamma(2i lambda)
                    / (Gamma(rho + i lambda) Gamma(m/4 + 1/2 + i lambda))
    """

    def __init__(self, params: SpaceParams):
        self.params = params
        self.c0 = c0_constant(params)
        self._fallback: Optional[CubicSpline] = None
        self._fallback_max = 0.0

    @property
    def using_fallback(self) -> bool:
        return self._fallback is not None

    def _log_c(self, lam: np.ndarray) -> np.ndarray:
        p = self.params
        Q = float(p.Q)
        rho = p.rho_value
        return ((Q - 2j * lam) * np.log(2.0)
                + gammaln(float(p.alpha) + 1)
                + loggamma(2j * lam)
                - loggamma(rho + 1j * lam)
                - loggamma(p.m / 4 + 0.5 + 1j * lam))

    def c_function(self, lam):
        """c(lambda) for real lambda away from the pole at 0"""
        lam_arr = np.asarray(lam, dtype=float)
        if np.any(np.abs(lam_arr) < POLE_GUARD):
            raise ParameterDomainError("c-function evaluated at its pole",
                                       {"lambda": float(np.min(np.abs(lam_arr)))})
        value = np.exp(self._log_c(lam_arr))
        return complex(value) if value.ndim == 0 else value

    def density(self, lam) -> np.ndarray:
        """|c(lambda)|^-2, even and nonnegative, with the limit 0 at lambda = 0"""
        lam_arr = np.abs(np.asarray(lam, dtype=float))
        out = np.zeros_like(lam_arr)
        safe = lam_arr >= POLE_GUARD
        if self._fallback is not None:
            inside = safe & (lam_arr <= self._fallback_max)
            out[inside] = self._fallback(lam_arr[inside])
            safe = safe & ~inside
        out[safe] = np.exp(-2.0 * self._log_c(lam_arr[safe]).real)
        return out if out.ndim else float(out)

    def density_on(self, grid: GaussGrid) -> np.ndarray:
        """Density on the symmetric node set of a spectral grid"""
        return self.density(grid.symmetric_nodes())

    def weighted_measure(self, grid: GaussGrid) -> np.ndarray:
        """Quadrature weights times |c|^-2 on the symmetric node set"""
        return grid.symmetric_weights() * self.density_on(grid)

    # ------------------------------------------------------------------
    # asymptotic oracle

    def asymptotic_fit(self, evaluator: SphericalEvaluator, lam: float,
                       radius: float = FIT_RADIUS) -> complex:
        """
        Fit e^(rho r) phi_lambda(r) ~ c e^(i lam r) + conj(c) e^(-i lam r) over one
        period ending at radius; returns the fitted c(lambda).

        For long periods the window is pushed out so it starts at FIT_START.
        """
        period = 2 * np.pi / abs(lam)
        radius = max(radius, FIT_START + period)
        rs = np.linspace(radius - period, radius, 64)
        w = evaluator.phi_profile([lam], rs)[0].real * np.exp(self.params.rho_value * rs)
        design = np.column_stack([2 * np.cos(lam * rs), -2 * np.sin(lam * rs)])
        (re, im), *_ = np.linalg.lstsq(design, w, rcond=None)
        return complex(re, im)

    def gate(self, evaluator: SphericalEvaluator, lambdas: Sequence[float] = (1.0, 2.0, 4.0),
             tolerance: float = GATE_TOLERANCE) -> float:
        """
        Compare the Gamma formula with the asymptotic fit; switch the density to
        fitted values when the worst relative mismatch exceeds tolerance.

        Returns:
            Worst relative mismatch
        """
        worst = 0.0
        for lam in lambdas:
            fitted = self.asymptotic_fit(evaluator, lam)
            formula = self.c_function(lam)
            worst = max(worst, abs(fitted - formula) / abs(formula))
        if worst > tolerance:
            logger.warning(f"c-function gate failed (mismatch {worst:.3e}); using fitted density")
            self.install_fitted_density(evaluator)
        else:
            logger.info(f"c-function gate passed (mismatch {worst:.3e})")
        return worst

    def install_fitted_density(self, evaluator: SphericalEvaluator,
                               lambdas: Optional[np.ndarray] = None):
        """Replace the formula by |c_fit|^-2 interpolated over lambdas"""
        if lambdas is None:
            lambdas = np.linspace(0.05, 16.0, 320)
        fitted = np.array([abs(self.asymptotic_fit(evaluator, lam)) ** -2 for lam in lambdas])
        self._fallback = CubicSpline(lambdas, fitted)
        self._fallback_max = float(lambdas[-1])


def gaussian_spectrum(params: SpaceParams, t: float, grid: GaussGrid) -> SpectralFunction:
    """e^(-t (lambda^2 + rho^2)) on a spectral grid"""
    rho2 = params.rho_value ** 2
    return SpectralFunction.from_rule(lambda lam: np.exp(-t * (lam ** 2 + rho2)), grid)


def round_trip_factor(params: SpaceParams, t: float = 1.0,
                      lam_grid: Optional[GaussGrid] = None) -> tuple:
    """
    Ratio forward(inverse(G)) / G for the Gaussian G = e^(-t(lambda^2+rho^2)).

    Returns:
        (mean ratio, relative spread of the ratio over the grid)
    """
    from .heat import heat_radius
    from .transform import inverse_transform, spherical_transform

    lam_grid = lam_grid or spectral_grid()
    G = gaussian_spectrum(params, t, lam_grid)
    rgrid = radial_grid(upper=heat_radius(t))
    profile = inverse_transform(params, G, rgrid)
    back = spherical_transform(params, profile, lam_grid).spectrum
    keep = np.abs(G.values) > 1e-300
    ratio = back.values[keep] / G.values[keep]
    weights = np.abs(G.values[keep])
    mean = float(np.sum(ratio * weights) / np.sum(weights))
    spread = float(np.max(np.abs(back.values - mean * G.values)) / np.max(np.abs(G.values)))
    return mean, spread


def calibrate(pd: PlancherelData, params: SpaceParams, t: float = 1.0,
              lam_grid: Optional[GaussGrid] = None, tolerance: float = 1e-8) -> SpaceParams:
    """
    Solve for the density scale that makes forward(inverse(G)) = G.

    The forward transform is linear in the scale, so the factor is 1 / mean ratio.
    """
    mean, _ = round_trip_factor(params, t, lam_grid)
    if not np.isfinite(mean) or mean <= 0:
        raise CalibrationError("round trip ratio is not positive", {"ratio": mean})

    factor = 1.0 / mean
    calibrated = params.with_scale(params.density_scale * factor)
    _, spread = round_trip_factor(calibrated, t, lam_grid)
    if spread > tolerance:
        raise CalibrationError(
            "round trip error above tolerance after calibration",
            {"error": spread, "tolerance": tolerance, "scale": calibrated.density_scale},
        )

    closed = closed_form_scale(params)
    logger.info(
        f"Calibrated density scale m={params.m} k={params.k}: {calibrated.density_scale!r} "
        f"(closed form {closed!r}, relative gap {abs(calibrated.density_scale / closed - 1):.2e}, "
        f"provisional 2^(m+k)={2 ** (params.m + params.k)}, round trip error {spread:.2e})"
    )
    return calibrated


@lru_cache(maxsize=8)
def plancherel_for(m: int, k: int) -> PlancherelData:
    """Shared Plancherel data per (m, k); the density does not depend on the scale"""
    return PlancherelData(derive_params(m, k))


@lru_cache(maxsize=8)
def evaluator_for(m: int, k: int) -> SphericalEvaluator:
    """Shared evaluator per (m, k), so phi grids are cached across modules"""
    return SphericalEvaluator(derive_params(m, k))


@lru_cache(maxsize=8)
def calibrated_params(m: int, k: int) -> SpaceParams:
    """Run the c-function gate and the calibration once per space"""
    params = derive_params(m, k)
    pd = plancherel_for(m, k)
    pd.gate(evaluator_for(m, k))
    return calibrate(pd, params)
