"""
Test spherical functions: eigen-equation, special values, estimates and oracles.
"""
import pytest

import numpy as np

from src.exceptions import ParameterDomainError, StripViolationError
from src.params import derive_params, strip_width
from src.spherical import SphericalEvaluator


@pytest.fixture(scope="module")
def evaluator():
    """Evaluator on the default space (m, k) = (2, 1), rho = 1"""
    return SphericalEvaluator(derive_params(2, 1))


@pytest.fixture(scope="module")
def evaluator_43():
    return SphericalEvaluator(derive_params(4, 3))


@pytest.mark.parametrize("lam", [0.0, 1.0, 3.0, 0.5j, 1j])
def test_eigen_equation(evaluator, lam):
    """Test phi_lambda solves the radial eigen-equation on [0.1, 20]"""
    worst = max(evaluator.eigen_residual(lam, r) for r in np.linspace(0.1, 20.0, 32))
    assert worst <= 1e-6


@pytest.mark.parametrize("lam", [0.0, 2.0, 2.5j])
def test_eigen_equation_other_space(evaluator_43, lam):
    worst = max(evaluator_43.eigen_residual(lam, r) for r in np.linspace(0.1, 20.0, 16))
    assert worst <= 1e-6


def test_value_at_origin_is_exactly_one(evaluator):
    for lam in (0.0, 1.0, 7.5, 0.3j):
        assert evaluator.eval_phi(lam, 0.0) == 1.0


def test_phi_i_rho_is_constant(evaluator):
    """Test phi_{i rho} = 1 on [0, 10]"""
    rs = np.linspace(0.0, 10.0, 41)
    values = evaluator.phi_profile([1j * evaluator.rho], rs)[0]
    assert np.max(np.abs(values - 1.0)) <= 1e-9


def test_even_in_lambda(evaluator):
    rs = np.linspace(0.0, 12.0, 25)
    values = evaluator.phi_profile([1.3, -1.3, 0.4 + 0.2j, -0.4 - 0.2j], rs)
    assert np.max(np.abs(values[0] - values[1])) <= 1e-10
    assert np.max(np.abs(values[2] - values[3])) <= 1e-10


def test_ground_state_bracket(evaluator):
    """Test phi_0(r) e^(rho r) / (1 + r) stays within a fixed bracket"""
    rs = np.linspace(0.5, 25.0, 50)
    ratio = evaluator.phi0(rs) * np.exp(evaluator.rho * rs) / (1 + rs)
    assert np.all(ratio > 0)
    assert ratio.max() / ratio.min() < 50


def test_bounded_by_ground_state(evaluator):
    """Test |phi_lambda| <= phi_0 for random real lambda"""
    rng = np.random.default_rng(7)
    lambdas = np.sort(rng.uniform(0.0, 10.0, 20))
    rs = np.linspace(0.5, 25.0, 50)
    values = evaluator.phi_grid(lambdas, rs)
    phi0 = evaluator.phi0(rs)
    assert np.all(np.abs(values) <= phi0[None, :] + 1e-10)


def test_real_lambda_gives_real_values(evaluator):
    values = evaluator.phi_grid([0.5, 2.0], np.linspace(0.0, 5.0, 11))
    assert np.max(np.abs(values.imag)) <= 1e-12


def test_phi_grid_is_cached(evaluator):
    rs = np.linspace(0.0, 3.0, 7)
    first = evaluator.phi_grid([1.0, 2.0], rs)
    second = evaluator.phi_grid([1.0, 2.0], rs)
    assert first is second


def test_hypergeometric_oracle(evaluator):
    """Test the ODE route against 2F1 evaluated in extended precision"""
    deviation = evaluator.cross_check([0.5, 2.0, 0.5j], [0.3, 1.0, 3.0])
    assert deviation <= 1e-8


def test_stiff_solver_oracle():
    params = derive_params(2, 1)
    default = SphericalEvaluator(params)
    oracle = SphericalEvaluator(params, method="ode")
    rs = np.linspace(0.5, 10.0, 12)
    lambdas = [0.0, 1.5, 4.0, 0.5j, 1.0 + 0.5j]
    diff = np.abs(default.phi_profile(lambdas, rs) - oracle.phi_profile(lambdas, rs))
    assert np.max(diff) <= 1e-8


def test_strip_violation(evaluator):
    with pytest.raises(StripViolationError):
        evaluator.phi_profile([5j * evaluator.rho], [1.0])


def test_strip_edge_is_accepted(evaluator):
    """Test the strip half-width is the L^p width at p = 0.4, i.e. 4 rho"""
    assert evaluator.strip == float(strip_width(evaluator.params, 0.4)) == 4 * evaluator.rho
    values = evaluator.phi_profile([4j * evaluator.rho], [0.5, 1.0])
    assert np.all(np.isfinite(values))
    with pytest.raises(StripViolationError):
        evaluator.phi_profile([4.001j * evaluator.rho], [1.0])


def test_negative_radius_rejected(evaluator):
    with pytest.raises(ParameterDomainError):
        evaluator.eval_phi(1.0, -0.5)


def test_unknown_method_rejected():
    with pytest.raises(ParameterDomainError):
        SphericalEvaluator(derive_params(2, 1), method="euler")
