"""
Heat kernel p_t, the normalized delta-sequence gamma_n and the concentration
estimates around them.
"""
import logging
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import Config
from .exceptions import ParameterDomainError
from .models import RadialProfile, SpaceParams, SpectralFunction
from .plancherel import evaluator_for, gaussian_spectrum, plancherel_for
from .quadrature import GaussGrid, radial_grid, spectral_grid
from .transform import inverse_transform, radial_integral, spherical_transform

logger = logging.getLogger(__name__)

MAX_DELTA_INDEX = 500
TAIL_ALPHA = 0.5
TAIL_BETA = 1.0
HEAT_EXPONENT = 40.0
# covers the polynomial prefactor of p_t phi_0 A up to dimension n = 8
HEAT_POLY_DEGREE = 6.0


class HeatKernel(BaseModel):
    """Heat kernel at time t, sampled on a radial Gauss grid"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: float = Field(..., gt=0)
    profile: RadialProfile


class DeltaSequenceTerm(BaseModel):
    """
    gamma_n(lambda) = e^(-n(lambda^2+rho^2)) / p_n(e).

    peak is p_n(e) with the e^(-n rho^2) factor split off: p_n(e) = e^(-n rho^2) * peak.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int = Field(..., ge=1)
    gamma: SpectralFunction
    peak: float
    log_pn_e: float


class LimitCheck(BaseModel):
    """Deviation of p_n / p_n(e) from phi_0 along a sequence of n"""
    ns: List[int]
    deviations: List[float]
    final: float
    monotone: bool


def heat_radius(t: float) -> float:
    """
    Smallest whole-panel radius (at least 8 panels) beyond which
    p_t(r) phi_0(r) A(r) ~ (1+r)^6 e^(-r^2/4t) is below e^-40.
    """
    panel = Config.R_PANEL
    r = 8 * panel
    while r * r / (4.0 * t) < HEAT_EXPONENT + HEAT_POLY_DEGREE * np.log1p(r):
        r += panel
    return r


def heat_kernel(params: SpaceParams, t: float, rs: Optional[GaussGrid] = None,
                lam_grid: Optional[GaussGrid] = None) -> HeatKernel:
    """
    p_t = inverse transform of e^(-t(lambda^2 + rho^2)).

    Args:
        params: Calibrated geometry
        t: Time, > 0
        rs: Radial grid; by default one reaching heat_radius(t)
    """
    if not t > 0:
        raise ParameterDomainError("heat kernel time must be positive", {"t": t})
    if rs is None and lam_grid is None:
        return _cached_heat_kernel(params, float(t))
    grid = rs or radial_grid(upper=heat_radius(t))
    spectrum = gaussian_spectrum(params, t, lam_grid or spectral_grid())
    profile = inverse_transform(params, spectrum, grid)
    return HeatKernel(t=t, profile=profile)


@lru_cache(maxsize=32)
def _cached_heat_kernel(params: SpaceParams, t: float) -> HeatKernel:
    grid = radial_grid(upper=heat_radius(t))
    profile = inverse_transform(params, gaussian_spectrum(params, t, spectral_grid()), grid)
    logger.debug(f"Heat kernel t={t} built on {grid.spec()}")
    return HeatKernel(t=t, profile=profile)


def heat_mass(params: SpaceParams, hk: HeatKernel) -> float:
    """int p_t A dr, which is 1 for the heat kernel"""
    return radial_integral(params, hk.profile)


def semigroup_defect(params: SpaceParams, t: float, s: float,
                     lam_grid: Optional[GaussGrid] = None) -> float:
    """max |p_t^ p_s^ - p_{t+s}^| over the spectral grid, transforms computed numerically"""
    lam_grid = lam_grid or spectral_grid()
    pt = spherical_transform(params, heat_kernel(params, t).profile, lam_grid).spectrum
    ps = spherical_transform(params, heat_kernel(params, s).profile, lam_grid).spectrum
    pts = spherical_transform(params, heat_kernel(params, t + s).profile, lam_grid).spectrum
    return float(np.max(np.abs(pt.values * ps.values - pts.values)))


def gamma_term(params: SpaceParams, n: int, lam_grid: Optional[GaussGrid] = None) -> DeltaSequenceTerm:
    """
    Normalized delta-sequence term with int gamma_n |c|^-2 dlambda = 1.

    p_n(e) e^(n rho^2) is the lambda-integral of e^(-n lambda^2)|c|^-2.
    """
    if int(n) != n or n < 1:
        raise ParameterDomainError("delta-sequence index must be a positive integer", {"n": n})
    if n > MAX_DELTA_INDEX:
        raise ParameterDomainError("delta-sequence index too large (underflow)",
                                   {"n": n, "max": MAX_DELTA_INDEX})
    lam_grid = lam_grid or spectral_grid()
    pd = plancherel_for(params.m, params.k)
    rho2 = params.rho_value ** 2

    shape = SpectralFunction.from_rule(lambda lam: np.exp(-n * lam ** 2), lam_grid)
    peak = float(np.sum(pd.weighted_measure(lam_grid) * shape.values))
    gamma = shape.scaled(1.0 / peak)
    return DeltaSequenceTerm(n=int(n), gamma=gamma, peak=peak,
                             log_pn_e=float(np.log(peak) - n * rho2))


def gamma_mass(params: SpaceParams, term: DeltaSequenceTerm) -> float:
    """int gamma_n |c|^-2 dlambda"""
    pd = plancherel_for(params.m, params.k)
    return float(np.sum(pd.weighted_measure(term.gamma.grid) * term.gamma.values))


def gamma_tail(params: SpaceParams, term: DeltaSequenceTerm, beta: float = TAIL_BETA) -> float:
    """int_{|lambda| >= beta} gamma_n |c|^-2 dlambda, summed over nodes beyond beta"""
    pd = plancherel_for(params.m, params.k)
    grid = term.gamma.grid
    mask = grid.beyond(beta)
    half = grid.weights * pd.density(grid.nodes) * term.gamma.half_values()
    return float(2.0 * np.sum(half[mask]))


def tail_table(params: SpaceParams, ns: Sequence[int], beta: float = TAIL_BETA,
               alpha: float = TAIL_ALPHA) -> List[Dict[str, float]]:
    """
    Tail masses with the envelope A e^(-n(beta^2 - alpha^2)), A fitted at the first n.
    """
    if not beta > alpha > 0:
        raise ParameterDomainError("need beta > alpha > 0", {"alpha": alpha, "beta": beta})
    rows = []
    rate = beta ** 2 - alpha ** 2
    amplitude = None
    for n in ns:
        mass = gamma_tail(params, gamma_term(params, n), beta)
        if amplitude is None:
            amplitude = mass * np.exp(n * rate)
        rows.append({"n": int(n), "beta": beta, "mass": mass,
                     "envelope": float(amplitude * np.exp(-n * rate))})
    return rows


def phi0_limit_check(params: SpaceParams, n_list: Sequence[int], rs,
                     lam_grid: Optional[GaussGrid] = None) -> LimitCheck:
    """
    max_r |p_n(r)/p_n(e) - phi_0(r)| for each n in n_list.
    """
    ns = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ParameterDomainError("n_list must be increasing", {"n_list": ns})
    lam_grid = lam_grid or spectral_grid()
    rs = np.asarray(rs, dtype=float)
    radii = np.concatenate([[0.0], rs])
    phi0 = evaluator_for(params.m, params.k).phi0(rs)

    deviations = []
    for n in ns:
        shape = SpectralFunction.from_rule(lambda lam, n=n: np.exp(-n * lam ** 2), lam_grid)
        values = inverse_transform(params, shape, radii).values
        deviations.append(float(np.max(np.abs(values[1:] / values[0] - phi0))))
    monotone = all(b <= a + 1e-6 for a, b in zip(deviations, deviations[1:]))
    logger.info(f"phi_0 limit deviations {dict(zip(ns, deviations))}")
    return LimitCheck(ns=ns, deviations=deviations, final=deviations[-1], monotone=monotone)
