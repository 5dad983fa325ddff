"""
Test the positive-definiteness layer: certification, measure recovery,
Krein fits and Toeplitz checks.
"""
import pytest

import numpy as np

from pydantic import ValidationError

from src.bochner import (CandidateH, CertificationFamily, certification_form, certify,
                         krein_fit, krein_grids, p0_closure_check, pd_check,
                         recover_measure)
from src.exceptions import NotCertifiedError
from src.hypergroup import kernel_tensor
from src.models import KreinFit, RadialMeasure, RadialProfile, SpectralFunction
from src.plancherel import calibrated_params, evaluator_for, gaussian_spectrum
from src.quadrature import spectral_grid
from src.transform import (abel_of_measure, euclidean_fourier_measure, inverse_transform,
                           measure_transform_at, transform_measure)


@pytest.fixture(scope="module")
def space():
    return calibrated_params(2, 1)


@pytest.fixture(scope="module")
def tensor(space):
    return kernel_tensor(space)


def gaussian_candidate(space, t):
    rho2 = space.rho_value ** 2
    return CandidateH.from_rule(lambda lam: np.exp(-t * (lam ** 2 + rho2)))


def phi_candidate(space, r0):
    ev = evaluator_for(space.m, space.k)
    return CandidateH.from_rule(lambda lam: ev.phi_profile(lam, np.array([r0]))[:, 0].real)


def constant_candidate(value):
    return CandidateH.from_rule(lambda lam: np.full(np.shape(lam), value))


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_certify_gaussian_passes(space, tensor, t):
    report = certify(space, gaussian_candidate(space, t), tensor)
    assert report.verdict == "pass"
    assert report.witnesses == []
    assert report.family_size == 64


@pytest.mark.parametrize("r0", [1.0, 2.0])
def test_certify_spherical_function_passes(space, tensor, r0):
    report = certify(space, phi_candidate(space, r0), tensor)
    assert report.verdict == "pass"


def test_certify_positive_constant_passes(space, tensor):
    assert certify(space, constant_candidate(2.5), tensor).verdict == "pass"


def test_certify_negative_constant_fails_with_witness(space, tensor):
    report = certify(space, constant_candidate(-1.0), tensor)
    assert report.verdict == "fail"
    assert report.min_value < -report.tolerance
    assert len(report.witnesses) >= 1
    assert all(w["value"] < 0 for w in report.witnesses)
    assert "kind" in report.witnesses[0]


def test_form_eigenvalue_reported(space, tensor):
    """Negative candidate has a negative form eigenvalue"""
    h = constant_candidate(-1.0)
    form = certification_form(space, h, tensor)
    assert form.shape == (tensor.size, tensor.size)
    assert np.allclose(form, form.T, rtol=0.0, atol=1e-12 * np.max(np.abs(form)))
    assert certify(space, h, tensor).form_min_eigenvalue < 0


def test_certification_family_is_seeded(space, tensor):
    first = CertificationFamily(space, tensor.grid, seed=7)
    second = CertificationFamily(space, tensor.grid, seed=7)
    other = CertificationFamily(space, tensor.grid, seed=8)
    assert len(first) == 64
    assert np.array_equal(first.half_values, second.half_values)
    assert not np.array_equal(first.half_values, other.half_values)
    assert "seed 7" in first.description


def test_candidate_must_be_even():
    grid = spectral_grid()
    values = np.concatenate([np.zeros(grid.size), np.ones(grid.size)])
    with pytest.raises(ValueError):
        CandidateH(h=SpectralFunction(grid=grid, values=values))


def test_closure_of_certified_candidates(space, tensor):
    report = p0_closure_check(space, gaussian_candidate(space, 1.0), phi_candidate(space, 1.0),
                              tensor=tensor)
    assert report.sum.verdict == "pass"
    assert report.product.verdict == "pass"
    assert report.multiple.verdict == "pass"
    assert report.all_pass


@pytest.mark.parametrize("atoms", [
    [(2.0, 1.0)],
    [(1.0, 0.3), (3.0, 0.7)],
    [(0.5, 0.2), (2.0, 0.5), (4.5, 0.3)],
])
def test_recover_atomic_measure(space, tensor, atoms):
    """Test the transform of a measure certifies and recovery returns the measure"""
    theta = RadialMeasure.atoms(atoms)
    h = CandidateH(h=transform_measure(space, theta))
    report = certify(space, h, tensor)
    assert report.verdict == "pass"
    rs = np.arange(0.5, 6.01, 0.5)
    result = recover_measure(space, h, rs, certification=report)

    expected = np.zeros(rs.size)
    for r, w in atoms:
        expected[np.argmin(np.abs(rs - r))] = w
    assert np.max(np.abs(result.measure.weights - expected)) <= 1e-4
    assert result.representable
    assert result.certification == "pass"


def test_recovered_mass_bounded_by_h_at_zero(space, tensor):
    h = gaussian_candidate(space, 1.0)
    result = recover_measure(space, h, np.arange(0.25, 8.01, 0.25), tensor=tensor)
    assert np.all(result.measure.weights >= 0)
    assert result.phi0_mass <= result.h_at_zero + 1e-6



def test_recover_requires_certified_candidate(space, tensor):
    with pytest.raises(NotCertifiedError):
        recover_measure(space, constant_candidate(-1.0), np.arange(0.5, 4.01, 0.5), tensor=tensor)


def test_abel_measure_of_recovered_measure(space, tensor):
    """Test the Abel measure of a recovered measure keeps its phi_0 mass and its transform"""
    theta = RadialMeasure.atoms([(1.0, 0.3), (2.0, 0.7)])
    h = CandidateH(h=transform_measure(space, theta))
    result = recover_measure(space, h, np.arange(0.5, 3.01, 0.5), tensor=tensor)
    recovered = result.measure
    ts = 0.02 * np.arange(int(np.ceil(3.02 / 0.02)) + 1)
    abel = abel_of_measure(space, recovered, ts, tolerance=1e-4)
    assert abs(abel.total - result.phi0_mass) <= 1e-4
    lambdas = np.array([0.5, 2.0, 5.0])
    fourier = euclidean_fourier_measure(abel.ts, abel.masses, lambdas)
    assert np.max(np.abs(fourier - measure_transform_at(space, recovered, lambdas))) <= 1e-4

@pytest.fixture(scope="module")
def profile_radii():
    return np.linspace(0.0, 10.0, 41)


def test_krein_grids(space):
    real, imag = krein_grids(space)
    assert real[0] == 0.0 and real[-1] == 8.0
    assert imag[0] > 0.0
    assert imag[-1] == pytest.approx(space.rho_value)


def test_krein_fit_phi0(space, profile_radii):
    ev = evaluator_for(space.m, space.k)
    f = RadialProfile(rs=profile_radii, values=ev.phi0(profile_radii))
    fit = krein_fit(space, f)
    assert fit.mu1[0] == pytest.approx(1.0, abs=1e-4)
    assert fit.residual <= 1e-5
    assert fit.mu2_mass <= 1e-4
    assert fit.positive_definite


def test_krein_fit_constant(space, profile_radii):
    """The constant function is phi at i rho"""
    f = RadialProfile(rs=profile_radii, values=np.ones(profile_radii.size))
    fit = krein_fit(space, f)
    assert fit.mu2[-1] == pytest.approx(1.0, abs=1e-4)
    assert fit.mu1_mass <= 1e-4
    assert fit.positive_definite



def test_krein_fit_heat_kernel(space, profile_radii):
    """Test p_1 is fitted by real-axis weights alone"""
    p1 = inverse_transform(space, gaussian_spectrum(space, 1.0, spectral_grid()), profile_radii)
    fit = krein_fit(space, p1)
    assert fit.positive_definite
    assert fit.relative_residual <= 1e-3
    assert fit.mu1_mass <= fit.mu1_bound
    assert fit.mu1_mass == pytest.approx(fit.f_at_zero, rel=5e-2)


def test_krein_real_mass_bounded_by_f_at_zero(space, profile_radii):
    """Test sum mu1 <= f(0) + tol holds when the best fit would exceed it"""
    ev = evaluator_for(space.m, space.k)
    values = ev.real_phi([1.0], profile_radii)[0].copy()
    values[0] = 0.5
    fit = krein_fit(space, RadialProfile(rs=profile_radii, values=values))
    assert fit.f_at_zero == 0.5
    assert fit.mu1_bound == pytest.approx(0.5005)
    assert fit.mu1_mass <= fit.mu1_bound
    assert not fit.positive_definite


def test_krein_fit_validates_real_mass():
    with pytest.raises(ValidationError):
        KreinFit(real_lambdas=np.array([0.0, 1.0]), mu1=np.array([0.6, 0.6]),
                 imag_lambdas=np.array([1.0]), mu2=np.array([0.0]), residual=0.0,
                 relative_residual=0.0, f_at_zero=1.0, mu1_bound=1.001, positive_definite=True)

def closure_candidate(space, kind):
    left = gaussian_candidate(space, 1.0).h
    right = phi_candidate(space, 1.0).h
    if kind == "sum":
        return CandidateH(h=left.combine(right, np.add))
    if kind == "product":
        return CandidateH(h=left.combine(right, np.multiply))
    return CandidateH(h=left.scaled(2.5))


@pytest.mark.parametrize("make", [
    lambda space: gaussian_candidate(space, 1.0),
    lambda space: phi_candidate(space, 2.0),
    lambda space: constant_candidate(2.5),
    lambda space: closure_candidate(space, "sum"),
    lambda space: closure_candidate(space, "product"),
    lambda space: closure_candidate(space, "multiple"),
])
def test_toeplitz_psd_for_certified(space, tensor, make):
    """Test every certified candidate gives a PSD Toeplitz matrix on R"""
    h = make(space)
    assert certify(space, h, tensor).verdict == "pass"
    result = pd_check(space, h, spacing=0.5, size=12)
    assert result.route == "direct"
    assert result.psd


def test_toeplitz_detects_non_positive_definite(space):
    h = CandidateH.from_rule(lambda lam: lam ** 2)
    result = pd_check(space, h, spacing=0.5, size=12)
    assert not result.psd
    assert result.min_eigenvalue < result.threshold


def test_toeplitz_from_samples(space):
    theta = RadialMeasure.atoms([(0.5, 0.4), (1.0, 0.6)])
    h = CandidateH(h=transform_measure(space, theta))
    result = pd_check(space, h)
    assert result.psd
    assert result.interpolation_error <= 1e-6


def test_toeplitz_fourier_route(space):
    theta = RadialMeasure.atoms([(1.0, 0.3), (2.0, 0.7)])
    h = CandidateH(h=transform_measure(space, theta))
    result = pd_check(space, h, measure=theta, abel_step=0.02)
    assert result.route == "fourier"
    assert result.psd
