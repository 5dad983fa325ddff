"""
Test the c-function, the Plancherel density and the density calibration.
"""
import pytest

import numpy as np

from src.exceptions import ParameterDomainError
from src.params import derive_params
from src.heat import heat_kernel, heat_mass, semigroup_defect
from src.plancherel import (PlancherelData, c0_constant, calibrate, calibrated_params,
                            closed_form_scale, evaluator_for, gaussian_spectrum,
                            plancherel_for)
from src.quadrature import spectral_grid
from src.transform import spherical_transform


@pytest.fixture(scope="module")
def plancherel():
    return plancherel_for(2, 1)


def test_c0_constant():
    """Test c0 = 2^(k-2) pi^(-n/2-1) Gamma(n/2) for (2, 1): n = 4"""
    assert abs(c0_constant(derive_params(2, 1)) - 0.5 * np.pi ** -3) < 1e-16
    assert abs(closed_form_scale(derive_params(2, 1)) / (8 * np.pi ** 2) - 1) < 1e-13


def test_c_function_conjugate_symmetry(plancherel):
    """Test c(-lambda) = conj(c(lambda)) for real lambda"""
    lam = np.array([1.0, 2.0, 4.0])
    c = plancherel.c_function(lam)
    assert np.all(np.isfinite(c))
    assert np.allclose(plancherel.c_function(-lam), np.conj(c), rtol=1e-13)


def test_c_function_pole_guard(plancherel):
    with pytest.raises(ParameterDomainError):
        plancherel.c_function(0.0)


def test_density_is_even_and_vanishes_at_zero(plancherel):
    lam = np.linspace(0.01, 8.0, 50)
    assert np.allclose(plancherel.density(lam), plancherel.density(-lam), rtol=1e-14)
    assert plancherel.density(0.0) == 0.0
    assert np.all(plancherel.density(lam) > 0)


def test_density_closed_form(plancherel):
    """Test |c(lambda)|^-2 = (pi/4) lambda^3 coth(pi lambda) on (2, 1)"""
    lam = np.array([0.05, 0.5, 1.0, 3.0, 7.5])
    expected = 0.25 * np.pi * lam ** 3 / np.tanh(np.pi * lam)
    assert np.allclose(plancherel.density(lam), expected, rtol=1e-12)


@pytest.mark.parametrize("lam", [1.0, 2.0, 4.0])
def test_asymptotic_fit_gate(plancherel, lam):
    """Test the two-exponential fit at r = 25 reproduces c(lambda)"""
    fitted = plancherel.asymptotic_fit(evaluator_for(2, 1), lam)
    formula = plancherel.c_function(lam)
    assert abs(fitted - formula) / abs(formula) <= 1e-4


def test_gate_keeps_formula():
    pd = PlancherelData(derive_params(2, 1))
    worst = pd.gate(evaluator_for(2, 1))
    assert worst <= 1e-4
    assert pd.using_fallback is False


def test_weighted_measure_layout(plancherel):
    grid = spectral_grid()
    measure = plancherel.weighted_measure(grid)
    assert measure.shape == (2 * grid.size,)
    assert np.allclose(measure, measure[::-1])


@pytest.mark.slow
def test_calibrated_scale_matches_closed_form():
    """Test calibration solves for 2^(m+2k) / (4 pi c0)"""
    params = calibrated_params(2, 1)
    assert params.calibrated is True
    assert abs(params.density_scale / closed_form_scale(params) - 1) < 1e-7


@pytest.mark.parametrize("lam", [0.05, 0.2])
def test_asymptotic_fit_small_lambda(plancherel, lam):
    """Test the fit window stays at positive radii when the period exceeds the fit radius"""
    fitted = plancherel.asymptotic_fit(evaluator_for(2, 1), lam)
    formula = plancherel.c_function(lam)
    assert abs(fitted - formula) / abs(formula) <= 1e-3


@pytest.mark.slow
def test_fitted_density_fallback():
    """Test the installed fallback reproduces (pi/4) lambda^3 coth(pi lambda)"""
    pd = PlancherelData(derive_params(2, 1))
    pd.install_fitted_density(evaluator_for(2, 1))
    assert pd.using_fallback is True
    lam = np.array([0.1, 0.5, 1.0, 3.0, 7.5])
    expected = 0.25 * np.pi * lam ** 3 / np.tanh(np.pi * lam)
    assert np.allclose(pd.density(lam), expected, rtol=1e-3)


@pytest.mark.slow
def test_calibration_is_idempotent():
    params = calibrated_params(2, 1)
    again = calibrate(plancherel_for(2, 1), params)
    assert abs(again.density_scale / params.density_scale - 1) < 1e-10


@pytest.mark.slow
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_calibration_does_not_depend_on_width(t):
    reference = calibrated_params(2, 1).density_scale
    params = calibrate(plancherel_for(2, 1), derive_params(2, 1), t=t)
    assert abs(params.density_scale / reference - 1) < 1e-8


@pytest.mark.slow
def test_other_space_criteria():
    """Test calibration, heat mass, the forward Gaussian and the semigroup on (4, 3)"""
    params = calibrated_params(4, 3)
    assert abs(params.density_scale / closed_form_scale(params) - 1) < 1e-7
    assert plancherel_for(4, 3).using_fallback is False

    hk = heat_kernel(params, 1.0)
    assert abs(heat_mass(params, hk) - 1.0) <= 1e-6
    grid = spectral_grid()
    result = spherical_transform(params, hk.profile, grid)
    expected = gaussian_spectrum(params, 1.0, grid)
    assert np.max(np.abs(result.spectrum.values - expected.values)) <= 1e-7
    assert semigroup_defect(params, 1.0, 1.0) <= 1e-7
