"""
Geometry of the space: derived constants and the radial volume density.
"""
import logging
from fractions import Fraction
from typing import Dict, Optional

import numpy as np

from .exceptions import MalformedInputError, ParameterDomainError
from .models import SpaceParams

logger = logging.getLogger(__name__)


def derive_params(m: int, k: int, density_scale: Optional[float] = None) -> SpaceParams:
    """
    Build SpaceParams for the H-type dimensions (m, k).

    Args:
        m: Dimension of the first layer (even, >= 2)
        k: Dimension of the centre (>= 1)
        density_scale: Pinned calibrated scale; provisional 2^(m+k) when omitted

    Returns:
        SpaceParams with Q = m/2 + k, rho = Q/2, n = m + k + 1
    """
    if not isinstance(m, (int, np.integer)) or not isinstance(k, (int, np.integer)):
        raise ParameterDomainError("m and k must be integers", {"m": m, "k": k})
    if m < 2 or m % 2:
        raise ParameterDomainError("m must be an even integer >= 2", {"m": m})
    if k < 1:
        raise ParameterDomainError("k must be a positive integer", {"k": k})
    if density_scale is not None and not density_scale > 0:
        raise ParameterDomainError("density_scale must be positive",
                                   {"density_scale": density_scale})

    calibrated = density_scale is not None
    scale = float(density_scale) if calibrated else float(2 ** (m + k))
    params = SpaceParams(m=int(m), k=int(k), density_scale=scale, calibrated=calibrated)
    logger.debug(f"Derived params m={m} k={k} Q={params.Q} rho={params.rho} n={params.n}")
    return params


def density(params: SpaceParams, r) -> np.ndarray:
    """
    Radial volume density A(r) = s * sinh(r/2)^(m+k) * cosh(r/2)^k.

    Accepts scalars or arrays; negative radii are rejected.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterDomainError("radius must be nonnegative", {"min_r": float(np.min(r))})
    return params.density_scale * np.sinh(r / 2) ** (params.m + params.k) \
        * np.cosh(r / 2) ** params.k


def log_density_derivative(params: SpaceParams, r) -> np.ndarray:
    """A'(r)/A(r) = (m+k)/2 coth(r/2) + k/2 tanh(r/2), for r > 0"""
    r = np.asarray(r)
    half = r / 2
    return 0.5 * (params.m + params.k) / np.tanh(half) + 0.5 * params.k * np.tanh(half)


def density_growth_constant(params: SpaceParams, r: float) -> float:
    """A(r) e^(-2 rho r); tends to s 2^-(m+2k) as r grows"""
    # sinh(r/2) = e^(r/2)(1 - e^-r)/2 and 2 rho = (m + 2k)/2, so the exponentials cancel
    sh = (1.0 - np.exp(-r)) / 2
    ch = (1.0 + np.exp(-r)) / 2
    return float(params.density_scale * sh ** (params.m + params.k) * ch ** params.k)


def strip_width(params: SpaceParams, p: float) -> Fraction:
    """Half-width (2/p - 1) rho of the strip on which L^p transforms live"""
    if not 0 < p <= 2:
        raise ParameterDomainError("p must lie in (0, 2]", {"p": p})
    return (Fraction(2) / Fraction(p).limit_denominator(10**6) - 1) * params.rho


def parse_config_text(text: str) -> Dict[str, str]:
    """
    Parse key=value lines. Blank lines and lines starting with '#' are skipped.
    """
    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MalformedInputError("config line without '='", {"line": lineno})
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise MalformedInputError("empty config key", {"line": lineno})
        entries[key] = value
    return entries
