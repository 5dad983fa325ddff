"""
Test the spherical transform, its inverse, measures and the Abel transform.
"""
import pytest

import numpy as np

from src.exceptions import DecayError, ParameterDomainError, TruncationError
from src.heat import heat_kernel
from src.models import RadialMeasure, RadialProfile, SpectralFunction
from src.plancherel import calibrated_params, evaluator_for, gaussian_spectrum
from src.quadrature import radial_grid, spectral_grid
from src.transform import (abel_of_measure, abel_transform, euclidean_fourier,
                           euclidean_fourier_measure, euclidean_inverse, inverse_transform,
                           measure_transform_at, phi0_mass, profile_from_rule,
                           radial_integral, spherical_transform, transform_at,
                           transform_measure)


@pytest.fixture(scope="module")
def space():
    """Calibrated default space (m, k) = (2, 1)"""
    return calibrated_params(2, 1)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_forward_heat_kernel_is_gaussian(space, t):
    """Test forward(p_t) = e^(-t(lambda^2 + rho^2)) on |lambda| <= 8"""
    grid = spectral_grid()
    result = spherical_transform(space, heat_kernel(space, t).profile, grid)
    expected = gaussian_spectrum(space, t, grid)
    assert np.max(np.abs(result.spectrum.values - expected.values)) <= 1e-7
    assert result.error_estimate <= 1e-10


def test_round_trip_heat_kernel(space):
    """Test inverse(forward(p_1)) = p_1"""
    p1 = heat_kernel(space, 1.0).profile
    spectrum = spherical_transform(space, p1).spectrum
    back = inverse_transform(space, spectrum, p1.grid)
    assert np.max(np.abs(back.values - p1.values)) / np.max(np.abs(p1.values)) <= 1e-6


def test_transform_at_complex_parameter(space):
    """Test f^(i rho) is the integral of f"""
    p1 = heat_kernel(space, 1.0).profile
    value = transform_at(space, p1, [1j * space.rho_value])[0]
    assert abs(value - radial_integral(space, p1)) <= 1e-10
    assert abs(value.real - 1.0) <= 1e-6


def test_inverse_on_arbitrary_radii(space):
    rs = np.array([0.0, 0.7, 2.5])
    on_grid = heat_kernel(space, 1.0).profile
    profile = inverse_transform(space, gaussian_spectrum(space, 1.0, spectral_grid()), rs)
    assert profile.grid is None
    assert np.all(profile.values > 0)
    assert np.all(np.diff(profile.values) < 0)
    assert profile.values[0] > on_grid.values[0]


def test_slowly_decaying_profile_rejected(space):
    f = profile_from_rule(lambda r: np.exp(-r), radial_grid())
    with pytest.raises(DecayError):
        spherical_transform(space, f)


def test_compact_profile_skips_decay_check(space):
    grid = radial_grid(upper=2.0)
    f = profile_from_rule(lambda r: (4.0 - r ** 2) ** 2, grid, decay_class="compact")
    result = spherical_transform(space, f)
    assert np.all(np.isfinite(result.spectrum.values))


def test_off_grid_profile_is_resampled(space):
    rs = np.linspace(0.0, 14.0, 561)
    values = inverse_transform(space, gaussian_spectrum(space, 1.0, spectral_grid()), rs).values
    f = RadialProfile(rs=rs, values=values)
    spectrum = spherical_transform(space, f).spectrum
    expected = gaussian_spectrum(space, 1.0, spectral_grid())
    assert np.max(np.abs(spectrum.values - expected.values)) <= 1e-4


def test_wide_spectrum_truncation(space):
    F = SpectralFunction.from_rule(lambda lam: np.exp(-0.01 * lam ** 2), spectral_grid())
    with pytest.raises(TruncationError):
        inverse_transform(space, F, np.array([0.0, 1.0]))


def test_transform_of_point_mass(space):
    """Test delta_r0 transforms to phi_lambda(r0)"""
    theta = RadialMeasure.atoms([(2.0, 1.0)])
    grid = spectral_grid()
    spectrum = transform_measure(space, theta, grid)
    expected = evaluator_for(2, 1).real_phi(grid.nodes, [2.0])[:, 0]
    assert np.allclose(spectrum.half_values(), expected, atol=1e-14)
    assert abs(phi0_mass(space, theta) - evaluator_for(2, 1).phi0([2.0])[0]) <= 1e-14


def test_euclidean_fourier_of_gaussian():
    """Test the even Fourier transform of (4 pi)^(-1/2) e^(-s^2/4) is e^(-lambda^2)"""
    ts = np.linspace(0.0, 12.0, 601)
    g = (4 * np.pi) ** -0.5 * np.exp(-ts ** 2 / 4)
    F = euclidean_fourier(g, ts)
    assert isinstance(F, SpectralFunction) and F.even
    assert np.max(np.abs(F.half_values() - np.exp(-F.grid.nodes ** 2))) <= 1e-10


def test_euclidean_fourier_aliasing_guard():
    ts = np.linspace(0.0, 10.0, 11)
    with pytest.raises(ParameterDomainError):
        euclidean_fourier(np.exp(-ts ** 2), ts, spectral_grid())


def test_euclidean_inverse_of_gaussian():
    F = SpectralFunction.from_rule(lambda lam: np.exp(-lam ** 2), spectral_grid())
    s = np.linspace(-4.0, 4.0, 17)
    expected = (4 * np.pi) ** -0.5 * np.exp(-s ** 2 / 4)
    assert np.max(np.abs(euclidean_inverse(F, s) - expected)) <= 1e-12


def test_abel_factorization(space):
    """Test A p_1(s) = e^(-rho^2) (4 pi)^(-1/2) e^(-s^2/4) on |s| <= 8"""
    s = np.linspace(-8.0, 8.0, 65)
    abel = abel_transform(space, heat_kernel(space, 1.0).profile, s)
    expected = np.exp(-space.rho_value ** 2) * (4 * np.pi) ** -0.5 * np.exp(-s ** 2 / 4)
    assert np.max(np.abs(abel - expected)) <= 1e-6


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_fourier_of_abel_is_spherical_transform(space, t):
    """Test transform(p_t) = Euclidean Fourier of its Abel transform"""
    profile = heat_kernel(space, t).profile
    ts = np.linspace(0.0, 12.0, 601)
    F = euclidean_fourier(abel_transform(space, profile, ts), ts)
    expected = spherical_transform(space, profile).spectrum
    assert np.max(np.abs(F.values - expected.values)) <= 1e-7


def test_abel_of_origin_mass(space):
    """Test delta_0 maps to the unit mass at t = 0"""
    ts = np.linspace(0.0, 1.0, 21)
    abel = abel_of_measure(space, RadialMeasure.atoms([(0.0, 1.0)]), ts)
    assert abs(abel.masses[0] - 1.0) <= 1e-8
    assert abs(abel.total - 1.0) <= 1e-8


def test_abel_of_point_mass(space):
    """Test the Abel measure of delta_1 reproduces phi_lambda(1) and has mass phi_0(1)"""
    ts = np.arange(0.0, 1.06, 0.02)
    theta = RadialMeasure.atoms([(1.0, 1.0)])
    abel = abel_of_measure(space, theta, ts, tolerance=1e-4)
    assert abel.residual <= 1e-4
    assert abs(abel.total - evaluator_for(2, 1).phi0([1.0])[0]) <= 1e-4
    lambdas = np.array([0.5, 2.0, 5.0])
    fourier = euclidean_fourier_measure(abel.ts, abel.masses, lambdas)
    assert np.max(np.abs(fourier - measure_transform_at(space, theta, lambdas))) <= 1e-4


def test_abel_grid_must_start_at_zero(space):
    with pytest.raises(ParameterDomainError):
        abel_of_measure(space, RadialMeasure.atoms([(1.0, 1.0)]), np.linspace(0.1, 1.0, 10))
