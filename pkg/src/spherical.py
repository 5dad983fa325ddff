"""
Spherical functions phi_lambda(r).

phi_lambda is the even solution of u'' + (A'/A) u' + (lambda^2 + rho^2) u = 0 with u(0) = 1.
Near the regular singular point r = 0 it is summed as a power series in
z = -sinh(r/2)^2; further out the ODE is integrated for w = e^(rho r) u, which
stays of size (1 + r) on the real axis and keeps the integration relative.
"""
import logging
from collections import OrderedDict
from typing import Literal, Tuple

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .config import Config
from .exceptions import ConvergenceError, DrspherError, ParameterDomainError, StripViolationError
from .models import SpaceParams
from .params import log_density_derivative, strip_width

logger = logging.getLogger(__name__)

SERIES_MAX_TERMS = 400
ORACLE_START = 1e-2
# L^p exponent of the widest supported strip, |Im lambda| <= (2/p - 1) rho = 4 rho
STRIP_EXPONENT = 0.4


class SphericalEvaluator:
    """
    Evaluator for phi_lambda on a fixed space.

    Attributes:
        params: Geometry of the space
        method: 'series-ode' (series, then DOP853) or 'ode' (short series start, then Radau)
        tolerance: Target accuracy of the returned values
        series_radius: Largest radius handled by the power series
    """

    def __init__(
        self,
        params: SpaceParams,
        method: Literal["series-ode", "ode"] = "series-ode",
        tolerance: float = 1e-10,
        series_radius: float = 0.5,
        cache_size: int = 32,
    ):
        if method not in ("series-ode", "ode"):
            raise ParameterDomainError("unknown evaluation method", {"method": method})
        self.params = params
        self.method = method
        self.tolerance = tolerance
        self.series_radius = series_radius
        self.rho = params.rho_value
        self.strip = float(strip_width(params, STRIP_EXPONENT))
        self._cache: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
        self._cache_size = cache_size

    # ------------------------------------------------------------------
    # validation

    def _check_lambdas(self, lambdas: np.ndarray):
        bad = np.abs(lambdas.imag) > self.strip + 1e-12
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise StripViolationError(
                "spectral parameter outside the supported strip",
                {"index": idx, "lambda": complex(lambdas[idx]), "strip": self.strip},
            )

    @staticmethod
    def _check_radii(rs: np.ndarray):
        if np.any(rs < 0):
            raise ParameterDomainError("radius must be nonnegative", {"min_r": float(np.min(rs))})

    # ------------------------------------------------------------------
    # series near r = 0

    def _series(self, lambdas: np.ndarray, rs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """phi and d phi/dr from the hypergeometric series in z = -sinh(r/2)^2"""
        a = self.rho + 1j * lambdas
        b = self.rho - 1j * lambdas
        c = 0.5 * (self.params.m + self.params.k + 1)
        z = -np.sinh(rs / 2) ** 2
        dz = -0.5 * np.sinh(rs)

        coef = np.ones(lambdas.shape, dtype=complex)
        u = np.ones((lambdas.size, rs.size), dtype=complex)
        du = np.zeros_like(u)
        zpow = np.ones_like(z)  # z^j
        for j in range(SERIES_MAX_TERMS):
            coef = coef * (a + j) * (b + j) / ((c + j) * (j + 1))
            du += coef[:, None] * ((j + 1) * zpow * dz)[None, :]
            zpow = zpow * z
            term = coef[:, None] * zpow[None, :]
            u += term
            if np.max(np.abs(term), initial=0.0) <= 1e-17 * max(1.0, np.max(np.abs(u))):
                return u, du
        raise ConvergenceError(
            "power series did not converge",
            {"terms": SERIES_MAX_TERMS, "r_max": float(np.max(rs)),
             "lambda_max": float(np.max(np.abs(lambdas)))},
        )

    # ------------------------------------------------------------------
    # ODE continuation

    def _rhs(self, lambdas: np.ndarray):
        rho = self.rho
        lam2 = lambdas ** 2
        n = lambdas.size

        def fun(r, y):
            p = log_density_derivative(self.params, r)
            w, v = y[:n], y[n:]
            return np.concatenate([v, -(p - 2 * rho) * v - (lam2 + 2 * rho ** 2 - p * rho) * w])

        def jac(r, y):
            p = log_density_derivative(self.params, r)
            top = np.hstack([np.zeros((n, n)), np.eye(n)])
            bottom = np.hstack([np.diag(-(lam2 + 2 * rho ** 2 - p * rho)),
                                np.eye(n) * -(p - 2 * rho)])
            return np.vstack([top, bottom]).astype(complex)

        return fun, jac

    def _check_solution(self, sol, r0: float, rs: np.ndarray):
        if sol.status != 0 or sol.y.shape[1] != rs.size:
            raise ConvergenceError(
                "ODE continuation failed",
                {"message": sol.message, "r_reached": float(sol.t[-1]) if sol.t.size else r0,
                 "method": self.method},
            )

    def _continue(self, lambdas: np.ndarray, r0: float, u0: np.ndarray, du0: np.ndarray,
                  rs: np.ndarray) -> np.ndarray:
        """Integrate from r0 and return phi at rs (all > r0)"""
        rho = self.rho
        e0 = np.exp(rho * r0)
        y0 = np.concatenate([e0 * u0, e0 * (du0 + rho * u0)]).astype(complex)
        fun, jac = self._rhs(lambdas)
        if self.method == "ode":
            return self._continue_stiff(fun, jac, lambdas.size, r0, y0, rs)
        sol = solve_ivp(fun, (r0, float(rs[-1])), y0, method="DOP853",
                        t_eval=rs, rtol=Config.ODE_RTOL, atol=Config.ODE_ATOL)
        self._check_solution(sol, r0, rs)
        w = sol.y[: lambdas.size]
        return w * np.exp(-rho * rs)[None, :]

    def _continue_stiff(self, fun, jac, n: int, r0: float, y0: np.ndarray,
                        rs: np.ndarray) -> np.ndarray:
        """
        Radau on the real form [Re y, Im y] of the complex system; the implicit
        solvers in scipy only integrate real states.
        """
        size = y0.size

        def real_fun(r, x):
            f = fun(r, x[:size] + 1j * x[size:])
            return np.concatenate([f.real, f.imag])

        def real_jac(r, x):
            J = jac(r, x[:size] + 1j * x[size:])
            return np.block([[J.real, -J.imag], [J.imag, J.real]])

        x0 = np.concatenate([y0.real, y0.imag])
        sol = solve_ivp(real_fun, (r0, float(rs[-1])), x0, method="Radau", jac=real_jac,
                        t_eval=rs, rtol=Config.ODE_RTOL * 0.1, atol=Config.ODE_ATOL * 0.1)
        self._check_solution(sol, r0, rs)
        w = sol.y[:n] + 1j * sol.y[size:size + n]
        return w * np.exp(-self.rho * rs)[None, :]

    # ------------------------------------------------------------------
    # public evaluation

    def phi_profile(self, lambdas, rs) -> np.ndarray:
        """
        phi_lambda(r) for every pair, shape (len(lambdas), len(rs)).

        Args:
            lambdas: Spectral parameters, |Im lambda| <= 4 rho
            rs: Nonnegative radii in any order

        Returns:
            Complex matrix of values
        """
        lambdas = np.atleast_1d(np.asarray(lambdas, dtype=complex))
        rs = np.atleast_1d(np.asarray(rs, dtype=float))
        self._check_lambdas(lambdas)
        self._check_radii(rs)

        out = np.empty((lambdas.size, rs.size), dtype=complex)
        trivial = np.abs(lambdas ** 2 + self.rho ** 2) < 1e-15
        out[trivial] = 1.0  # phi_{i rho} is constant
        active = ~trivial
        if not np.any(active):
            return out

        lam = lambdas[active]
        order = np.argsort(rs, kind="stable")
        sorted_rs = rs[order]
        lam_scale = max(1.0, float(np.max(np.abs(lam))))
        r0 = min(self.series_radius, 1.5 / lam_scale)
        if self.method == "ode":
            r0 = min(r0, ORACLE_START)

        values = np.empty((lam.size, rs.size), dtype=complex)
        inside = sorted_rs <= r0
        if np.any(inside):
            values[:, inside], _ = self._series(lam, sorted_rs[inside])
        if np.any(~inside):
            u0, du0 = self._series(lam, np.array([r0]))
            values[:, ~inside] = self._continue(lam, r0, u0[:, 0], du0[:, 0], sorted_rs[~inside])

        unsorted = np.empty_like(values)
        unsorted[:, order] = values
        out[active] = unsorted
        return out

    def eval_phi(self, lam: complex, r: float) -> complex:
        """phi_lambda(r) for a single pair"""
        if r < 0:
            raise ParameterDomainError("radius must be nonnegative", {"r": r})
        if r == 0:
            self._check_lambdas(np.array([lam], dtype=complex))
            return 1.0 + 0.0j
        return complex(self.phi_profile([lam], [r])[0, 0])

    def phi_grid(self, lambdas, rs) -> np.ndarray:
        """
        phi on a product grid. Real lambdas run as one vectorized ODE solve;
        each non-real lambda runs on its own so error control stays per-parameter.
        """
        lambdas = np.asarray(lambdas, dtype=complex)
        rs = np.asarray(rs, dtype=float)
        if np.any(np.diff(rs) < 0) or np.any(np.diff(lambdas.real) < 0):
            raise ParameterDomainError("grids must be sorted ascending")

        key = (lambdas.tobytes(), rs.tobytes())
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]

        out = np.empty((lambdas.size, rs.size), dtype=complex)
        real = np.abs(lambdas.imag) == 0
        try:
            if np.any(real):
                out[real] = self.phi_profile(lambdas[real], rs)
            for i in np.flatnonzero(~real):
                try:
                    out[i] = self.phi_profile(lambdas[i:i + 1], rs)[0]
                except DrspherError as e:
                    e.details.setdefault("lambda_index", int(i))
                    raise
        except DrspherError as e:
            e.details.setdefault("grid", f"{lambdas.size}x{rs.size}")
            raise

        out.setflags(write=False)
        self._cache[key] = out
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return out

    def real_phi(self, lambdas, rs) -> np.ndarray:
        """Real part of phi_grid for real lambdas (phi is real there)"""
        return self.phi_grid(np.asarray(lambdas, dtype=float), rs).real

    def phi0(self, rs) -> np.ndarray:
        """Ground state phi_0 on a radius grid"""
        return self.phi_profile([0.0], rs)[0].real

    # ------------------------------------------------------------------
    # checks

    def eigen_residual(self, lam: complex, r: float) -> float:
        """
        |u'' + (A'/A) u' + (lambda^2 + rho^2) u| at r, by fourth-order
        central differences of the computed solution.
        """
        if r <= 0:
            raise ParameterDomainError("eigen residual needs r > 0", {"r": r})
        h = min(0.01, 0.02 / (1.0 + abs(lam)), r / 4)
        stencil = r + h * np.arange(-2, 3)
        u = self.phi_profile([lam], stencil)[0]
        d1 = (-u[4] + 8 * u[3] - 8 * u[1] + u[0]) / (12 * h)
        d2 = (-u[4] + 16 * u[3] - 30 * u[2] + 16 * u[1] - u[0]) / (12 * h ** 2)
        p = log_density_derivative(self.params, r)
        return float(abs(d2 + p * d1 + (lam ** 2 + self.rho ** 2) * u[2]))

    def hypergeometric_phi(self, lam: complex, r: float) -> complex:
        """
        Independent value from 2F1(rho + i lam, rho - i lam; (m+k+1)/2; -sinh(r/2)^2),
        evaluated with mpmath in extended precision.
        """
        with mpmath.workdps(30):
            a = mpmath.mpf(self.rho) + 1j * mpmath.mpmathify(lam)
            b = mpmath.mpf(self.rho) - 1j * mpmath.mpmathify(lam)
            c = mpmath.mpf(self.params.m + self.params.k + 1) / 2
            z = -mpmath.sinh(mpmath.mpf(r) / 2) ** 2
            return complex(mpmath.hyp2f1(a, b, c, z))

    def cross_check(self, lambdas, rs, threshold: float = 1e-7) -> float:
        """Max deviation between the ODE route and the hypergeometric oracle"""
        values = self.phi_profile(lambdas, rs)
        worst = 0.0
        for i, lam in enumerate(np.atleast_1d(lambdas)):
            for j, r in enumerate(np.atleast_1d(rs)):
                worst = max(worst, abs(values[i, j] - self.hypergeometric_phi(lam, r)))
        if worst > threshold:
            logger.warning(f"Hypergeometric oracle disagrees by {worst:.3e}; keeping ODE values")
        else:
            logger.debug(f"Hypergeometric cross-check deviation {worst:.3e}")
        return worst
