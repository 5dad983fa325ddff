"""
Test geometry parameters, the radial density and config parsing.
"""
import pytest
from fractions import Fraction

import numpy as np

from src.exceptions import MalformedInputError, ParameterDomainError
from src.params import (density, density_growth_constant, derive_params,
                        log_density_derivative, parse_config_text,
                        strip_width)
from src.quadrature import GaussGrid, spectral_grid


@pytest.mark.parametrize("m,k,Q,rho,n", [
    (2, 1, Fraction(2), Fraction(1), 4),
    (4, 3, Fraction(5), Fraction(5, 2), 8),
    (6, 1, Fraction(4), Fraction(2), 8),
])
def test_derived_constants(m, k, Q, rho, n):
    """Test Q, rho and n for several spaces"""
    params = derive_params(m, k)
    assert params.Q == Q
    assert params.rho == rho
    assert params.n == n
    assert params.density_scale == 2.0 ** (m + k)
    assert params.calibrated is False


@pytest.mark.parametrize("m,k", [(3, 1), (0, 1), (2, 0), (-2, 1)])
def test_invalid_dimensions_rejected(m, k):
    """Test odd or non-positive dimensions raise a domain error"""
    with pytest.raises(ParameterDomainError):
        derive_params(m, k)


def test_non_integer_dimension_rejected():
    with pytest.raises(ParameterDomainError):
        derive_params(2.0, 1)


def test_pinned_scale_is_calibrated():
    params = derive_params(2, 1, density_scale=3.5)
    assert params.density_scale == 3.5
    assert params.calibrated is True
    with pytest.raises(ParameterDomainError):
        derive_params(2, 1, density_scale=-1.0)


def test_density_values():
    """Test A(r) against its closed form"""
    params = derive_params(2, 1)
    rs = np.array([0.0, 0.5, 1.0, 4.0])
    expected = 8.0 * np.sinh(rs / 2) ** 3 * np.cosh(rs / 2)
    assert np.allclose(density(params, rs), expected, rtol=1e-14, atol=0)
    assert density(params, 0.0) == 0.0


def test_density_rejects_negative_radius():
    with pytest.raises(ParameterDomainError):
        density(derive_params(2, 1), [-0.1, 1.0])


def test_log_derivative_matches_finite_difference():
    params = derive_params(4, 3)
    r, h = 1.7, 1e-5
    numeric = (np.log(density(params, r + h)) - np.log(density(params, r - h))) / (2 * h)
    assert abs(log_density_derivative(params, r) - numeric) < 1e-8


def test_growth_constant_limit():
    """Test A(r) e^(-2 rho r) -> s 2^-(m+2k)"""
    params = derive_params(2, 1)
    r = 30.0
    direct = density(params, r) * np.exp(-2 * params.rho_value * r)
    assert abs(density_growth_constant(params, r) / direct - 1) < 1e-12
    assert abs(density_growth_constant(params, 60.0) - 8.0 / 16) < 1e-12


def test_strip_width():
    params = derive_params(2, 1)
    assert strip_width(params, 1) == Fraction(1)
    assert strip_width(params, 2) == 0
    with pytest.raises(ParameterDomainError):
        strip_width(params, 3)


def test_parse_config_text():
    text = "# space\nm = 4\n\nk=3\ndensity_scale = 2.5\n"
    entries = parse_config_text(text)
    assert entries == {"m": "4", "k": "3", "density_scale": "2.5"}


@pytest.mark.parametrize("text", ["m 4\n", "=3\n"])
def test_malformed_config(text):
    with pytest.raises(MalformedInputError):
        parse_config_text(text)


def test_gauss_grid_integrates_polynomials():
    """Test the composite rule on a polynomial and its layout"""
    grid = spectral_grid()
    assert grid.size == 32 * 12
    assert abs(grid.integrate(grid.nodes ** 5) - 8.0 ** 6 / 6) < 1e-8
    assert np.all(np.diff(grid.symmetric_nodes()) > 0)
    assert grid.last_panel() == slice(grid.size - 12, grid.size)


def test_gauss_grid_rejects_uneven_panels():
    with pytest.raises(ValueError):
        GaussGrid(upper=1.0, panel_width=0.3, order=4)


@pytest.mark.parametrize("m,k", [(2, 1), (4, 3)])
def test_log_derivative_far_out(m, k):
    """Test A'/A at r = 30 is 2 rho up to e^-30 terms and matches a finite difference"""
    params = derive_params(m, k)
    r, h = 30.0, 1e-4
    value = log_density_derivative(params, r)
    assert abs(value - 2 * params.rho_value) < 1e-11
    numeric = (np.log(density(params, r + h)) - np.log(density(params, r - h))) / (2 * h)
    assert abs(value - numeric) < 1e-6
