"""
Positive-definiteness layer: screening of candidate spectral functions h
against the dual product, recovery of representing radial measures, Krein-type
fits of radial profiles, and Toeplitz checks of h as a function on R.
"""
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.interpolate import CubicSpline
from scipy.linalg import eigvalsh, toeplitz
from scipy.optimize import linprog, nnls

from .config import Config
from .exceptions import (ConvergenceError, NotCertifiedError, ParameterDomainError,
                         QuadratureError)
from .hypergroup import kernel_tensor, pairing_form
from .kernel_store import KernelTensor
from .models import (CertificationReport, ClosureReport, KreinFit, MeasureRecovery,
                     PdCheckResult, RadialMeasure, RadialProfile, SpaceParams,
                     SpectralFunction)
from .plancherel import evaluator_for, plancherel_for
from .quadrature import spectral_grid
from .transform import abel_of_measure, euclidean_fourier_measure, phi0_mass

logger = logging.getLogger(__name__)

CERTIFY_TOLERANCE = 1e-7
DAMPING = 1e-10
RECOVERY_TOLERANCE = 1e-4
KREIN_TOLERANCE = 1e-3
CLOSURE_CONSTANT = 2.5
INTERPOLATION_TOLERANCE = 1e-6
FAMILY_SIZE = 64


class CandidateH(BaseModel):
    """Even bounded candidate on a spectral grid"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    h: SpectralFunction

    @field_validator("h")
    @classmethod
    def check_candidate(cls, h: SpectralFunction) -> SpectralFunction:
        if not h.even:
            raise ValueError("candidate must be even")
        if np.iscomplexobj(h.values) and np.max(np.abs(h.values.imag)) > 1e-12 * max(1.0, h.sup):
            raise ValueError("candidate must be real")
        return h

    @property
    def bound(self) -> float:
        return self.h.sup

    @property
    def at_zero(self) -> float:
        return float(np.real(self.h(np.array([0.0]))[0]))

    @classmethod
    def from_rule(cls, rule, grid=None) -> "CandidateH":
        return cls(h=SpectralFunction.from_rule(rule, grid or spectral_grid()))


# ----------------------------------------------------------------------
# test family

class CertificationFamily:
    """
    Real even test functions g on the kernel grid, described by parameter dicts.

    Default members: Gaussians e^(-a(lambda^2+rho^2)) for a on a log grid,
    differences of shifted Gaussians, and seeded random cosine polynomials
    under a Gaussian window.
    """

    def __init__(self, params: SpaceParams, grid, size: int = FAMILY_SIZE,
                 seed: Optional[int] = None):
        if size < 3:
            raise ParameterDomainError("test family needs at least 3 members", {"size": size})
        self.params = params
        self.grid = grid
        self.seed = Config.SEED if seed is None else seed
        self.members: List[Dict[str, Any]] = []
        rows = []
        lam = grid.nodes
        rho2 = params.rho_value ** 2

        n_gauss = (3 * size) // 8
        n_shift = (size - n_gauss) // 2
        n_random = size - n_gauss - n_shift

        for a in np.geomspace(1.0, 4.0, n_gauss):
            self.members.append({"kind": "gaussian", "a": float(a)})
            rows.append(np.exp(-a * (lam ** 2 + rho2)))

        for s in np.linspace(0.25, 1.5, n_shift):
            self.members.append({"kind": "shifted-difference", "a": 3.0, "shift": float(s)})
            rows.append(np.exp(-3.0 * (lam - s) ** 2) + np.exp(-3.0 * (lam + s) ** 2)
                        - 2.0 * np.exp(-3.0 * s ** 2) * np.exp(-3.0 * lam ** 2))

        rng = np.random.default_rng(self.seed)
        freqs = 0.5 * np.arange(6)
        for index in range(n_random):
            coeffs = rng.standard_normal(freqs.size)
            self.members.append({"kind": "random-cosine", "seed": self.seed, "index": index,
                                 "coefficients": [float(c) for c in coeffs]})
            rows.append(np.exp(-lam ** 2) * (np.cos(np.outer(lam, freqs)) @ coeffs))

        self.half_values = np.array(rows)

    @property
    def description(self) -> str:
        counts: Dict[str, int] = {}
        for member in self.members:
            counts[member["kind"]] = counts.get(member["kind"], 0) + 1
        parts = ", ".join(f"{n} {kind}" for kind, n in counts.items())
        return f"{len(self.members)} functions ({parts}), seed {self.seed}"

    def __len__(self) -> int:
        return len(self.members)


def certification_form(params: SpaceParams, h: CandidateH,
                       tensor: Optional[KernelTensor] = None) -> np.ndarray:
    """Matrix M with int h (g . g*) |c|^-2 = g^T M g for real even g on the kernel grid"""
    tensor = tensor or kernel_tensor(params)
    return pairing_form(params, h.h, tensor)


def _abs_form(params: SpaceParams, tensor: KernelTensor, values: np.ndarray) -> np.ndarray:
    """Same contraction as the pairing form, with h = 1 and |values| in place of K"""
    grid = tensor.grid
    pd = plancherel_for(params.m, params.k)
    wd = grid.weights * pd.density(grid.nodes)
    inner = np.abs(values) @ wd
    return 8.0 * pd.c0 ** 2 * (wd[:, None] * inner * wd[None, :])


def certify(params: SpaceParams, h: CandidateH, tensor: Optional[KernelTensor] = None,
            family: Optional[CertificationFamily] = None,
            tolerance: float = CERTIFY_TOLERANCE) -> CertificationReport:
    """
    Screen int h (g . g*) |c|^-2 dlambda >= 0 over a finite test family.

    Each value is normalized by sup|h| times the same integral with |K| and |g|,
    so min_value is relative and comparable across members. "pass" means no
    violation was found.
    """
    tensor = tensor or kernel_tensor(params)
    grid = tensor.grid
    if h.h.rule is None and h.h.grid.upper < grid.upper:
        raise ParameterDomainError("candidate does not cover the kernel grid",
                                   {"candidate": h.h.grid.spec(), "kernel": grid.spec()})
    family = family or CertificationFamily(params, grid)

    form = certification_form(params, h, tensor)
    G = family.half_values
    values = np.einsum("gi,ij,gj->g", G, form, G)

    bound = max(h.bound, 1e-300)
    scales = bound * np.einsum("gi,ij,gj->g", np.abs(G), _abs_form(params, tensor, tensor.values),
                               np.abs(G))
    errors = bound * np.einsum("gi,ij,gj->g", np.abs(G),
                               _abs_form(params, tensor, tensor.quadrature_error), np.abs(G))
    relative = values / scales
    relative_error = float(np.max(errors / scales))

    worst = int(np.argmin(relative))
    min_value = float(relative[worst])
    eigen = eigvalsh(form)
    scale_eigen = float(np.max(np.abs(eigvalsh(_abs_form(params, tensor, tensor.values)))))
    form_min = float(eigen[0] / scale_eigen) if scale_eigen > 0 else 0.0

    witnesses = []
    if min_value < -tolerance:
        for index in np.argsort(relative)[:5]:
            if relative[index] < -tolerance:
                witnesses.append({**family.members[index], "value": float(relative[index])})
        verdict = "inconclusive" if -min_value <= relative_error else "fail"
    else:
        verdict = "pass"

    logger.info(f"Certification {verdict}: min {min_value:.3e} over {len(family)} test functions "
                f"(quadrature error {relative_error:.1e}, form eigenvalue {form_min:.2e})")
    return CertificationReport(
        test_family=family.description,
        family_size=len(family),
        min_value=min_value,
        tolerance=tolerance,
        quadrature_error=relative_error,
        form_min_eigenvalue=form_min,
        verdict=verdict,
        witnesses=witnesses,
    )


# ----------------------------------------------------------------------
# measure recovery

def _weighted_nnls(design: np.ndarray, target: np.ndarray, weights: np.ndarray) -> np.ndarray:
    sw = np.sqrt(weights)
    a = sw[:, None] * design
    b = sw * target
    scale = float(np.max(np.linalg.norm(a, axis=0), initial=1.0))
    a = np.vstack([a, DAMPING * scale * np.eye(design.shape[1])])
    b = np.concatenate([b, np.zeros(design.shape[1])])
    try:
        x, _ = nnls(a, b, maxiter=50 * design.shape[1])
    except RuntimeError as e:
        raise ConvergenceError(f"NNLS did not converge: {e}")
    return x


def recover_measure(params: SpaceParams, h: CandidateH, rs,
                    tolerance: float = RECOVERY_TOLERANCE,
                    tensor: Optional[KernelTensor] = None,
                    certification: Optional[CertificationReport] = None) -> MeasureRecovery:
    """
    Nonnegative weights on rs with sum_i w_i phi_lambda(r_i) ~ h(lambda), fitted in
    least squares weighted by |c(lambda)|^-2 dlambda.

    h must not fail certification; without a report it is certified here.
    The recovered mass is projected onto sum_i w_i phi_0(r_i) <= h(0).
    representable is False when the sup residual exceeds tolerance * sup|h|.

    Raises:
        NotCertifiedError: h has a negative pairing with a test function
    """
    rs = np.asarray(rs, dtype=float)
    if rs.size == 0 or np.any(rs < 0) or np.any(np.diff(rs) <= 0):
        raise ParameterDomainError("radial grid must be nonnegative and ascending")
    report = certification or certify(params, h, tensor)
    if report.verdict == "fail":
        raise NotCertifiedError("candidate failed certification",
                                {"min_value": report.min_value,
                                 "witness": report.witnesses[0]})
    if report.verdict == "inconclusive":
        logger.warning(f"Recovering from an inconclusive certification "
                       f"(min {report.min_value:.3e})")
    grid = h.h.grid
    pd = plancherel_for(params.m, params.k)
    ev = evaluator_for(params.m, params.k)

    lam = grid.nodes
    design = ev.real_phi(lam, rs)
    target = h.h.half_values().real
    # |c|^-2 vanishes at lambda = 0; floor it at the first node
    weights = grid.weights * np.maximum(pd.density(lam), pd.density(lam[0]))
    w = _weighted_nnls(design, target, weights)

    h0 = h.at_zero
    theta = RadialMeasure(rs=rs, weights=w)
    mass = phi0_mass(params, theta)
    projected = False
    if mass > h0 and mass > 0:
        w = w * max(h0, 0.0) / mass
        theta = RadialMeasure(rs=rs, weights=w)
        mass = phi0_mass(params, theta)
        projected = True
        logger.info(f"Recovered measure projected onto phi_0 mass {h0:.6g}")

    residual = float(np.max(np.abs(design @ w - target)))
    representable = residual <= tolerance * max(h.bound, 1e-300)
    if not representable:
        logger.warning(f"Candidate not representable on this grid (residual {residual:.3e})")
    return MeasureRecovery(measure=theta, residual=residual, phi0_mass=mass, h_at_zero=h0,
                           representable=representable, projected=projected,
                           certification=report.verdict)


# ----------------------------------------------------------------------
# Krein fit

def krein_grids(params: SpaceParams) -> Tuple[np.ndarray, np.ndarray]:
    """Real nodes on [0, 8] with step 1/4 and imaginary parts on (0, rho]"""
    real = np.linspace(0.0, Config.LAMBDA_MAX, int(round(Config.LAMBDA_MAX / 0.25)) + 1)
    # i*0 would duplicate the real node 0
    imag = np.linspace(0.0, params.rho_value, 9)[1:]
    return real, imag


def krein_fit(params: SpaceParams, f: RadialProfile,
              tolerance: float = KREIN_TOLERANCE) -> KreinFit:
    """
    f(r) ~ sum mu1_j phi_{lambda_j}(r) + sum mu2_j phi_{i s_j}(r) with mu1, mu2 >= 0
    and sum mu1 <= f(0) + tolerance |f(0)|.

    Solved as a linear program minimizing max_r |fit - f| / phi_0(r).
    """
    rs = np.asarray(f.rs, dtype=float)
    if np.any(np.diff(rs) <= 0):
        raise ParameterDomainError("profile radii must ascend")
    values = np.asarray(f.values, dtype=float)
    ev = evaluator_for(params.m, params.k)
    real, imag = krein_grids(params)

    design = np.hstack([ev.real_phi(real, rs).T, ev.phi_profile(1j * imag, rs).real.T])
    phi0 = ev.phi0(rs)
    n = design.shape[1]
    if rs[0] == 0.0:
        f0 = float(values[0])
    else:
        f0 = float(CubicSpline(rs, values)(0.0))
    bound = max(f0 + tolerance * abs(f0), 0.0)

    # variables: weights (n) and the bound t
    c = np.zeros(n + 1)
    c[-1] = 1.0
    mass_row = np.concatenate([np.ones(real.size), np.zeros(imag.size + 1)])
    a_ub = np.vstack([np.hstack([design, -phi0[:, None]]),
                      np.hstack([-design, -phi0[:, None]]),
                      mass_row[None, :]])
    b_ub = np.concatenate([values, -values, [bound]])
    result = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(0, None)] * (n + 1), method="highs")
    if result.status != 0:
        raise ConvergenceError("Krein linear program failed", {"status": result.status,
                                                              "message": result.message})

    x = np.maximum(result.x[:n], 0.0)
    mu1, mu2 = x[:real.size], x[real.size:]
    if mu1.sum() > bound:
        # solver feasibility slack
        mu1 = mu1 * (bound / mu1.sum())
        x = np.concatenate([mu1, mu2])
    residual = float(np.max(np.abs(design @ x - values)))
    relative = residual / max(abs(f0), 1e-300)
    if relative > tolerance:
        logger.warning(f"Profile not radially positive definite at this resolution "
                       f"(relative residual {relative:.3e})")
    return KreinFit(real_lambdas=real, mu1=mu1, imag_lambdas=imag, mu2=mu2,
                    residual=residual, relative_residual=relative, f_at_zero=f0, mu1_bound=bound,
                    positive_definite=relative <= tolerance)


# ----------------------------------------------------------------------
# Toeplitz check on R

def _values_at(h: CandidateH, xs: np.ndarray) -> Tuple[np.ndarray, float]:
    """h at xs with an interpolation error estimate (full spline against every other node)"""
    if h.h.rule is not None:
        return np.real(h.h(xs)), 0.0
    lam = h.h.grid.nodes
    half = h.h.half_values().real
    # two mirrored samples so the spline sees lambda = 0 as an interior point
    nodes = np.concatenate([-lam[:2][::-1], lam])
    samples = np.concatenate([half[:2][::-1], half])
    fine = CubicSpline(nodes, samples)(xs)
    coarse = CubicSpline(nodes[::2], samples[::2])(xs)
    return fine, float(np.max(np.abs(fine - coarse)))


def pd_check(params: SpaceParams, h: CandidateH, spacing: float = 0.5, size: int = 12,
             measure: Optional[RadialMeasure] = None, abel_step: float = 0.05,
             abel_tolerance: float = RECOVERY_TOLERANCE) -> PdCheckResult:
    """
    Minimum eigenvalue of the Toeplitz matrix h((j-k) d), j, k < size.

    With a measure, h is replaced by the Fourier transform of the Abel measure of
    that measure, which makes the matrix a sum of rank-two PSD terms.
    """
    if spacing <= 0 or size < 2:
        raise ParameterDomainError("need spacing > 0 and size >= 2",
                                   {"spacing": spacing, "size": size})
    xs = spacing * np.arange(size)
    if xs[-1] > h.h.grid.upper:
        raise ParameterDomainError("Toeplitz offsets exceed the candidate grid",
                                   {"max_offset": float(xs[-1]), "lambda_max": h.h.grid.upper})

    if measure is None:
        column, error = _values_at(h, xs)
        route = "direct"
        if error > INTERPOLATION_TOLERANCE * max(h.bound, 1e-300):
            raise QuadratureError("interpolation error bound exceeded",
                                  {"error": error, "bound": h.bound})
    else:
        t_max = float(np.max(measure.rs, initial=0.0)) + abel_step
        ts = abel_step * np.arange(int(np.ceil(t_max / abel_step)) + 1)
        abel = abel_of_measure(params, measure, ts, tolerance=abel_tolerance)
        column = euclidean_fourier_measure(abel.ts, abel.masses, xs)
        error = abel.residual
        route = "fourier"

    matrix = toeplitz(column)
    min_eigen = float(eigvalsh(matrix)[0])
    threshold = -1e-8 * size * max(h.bound, 1e-300)
    psd = min_eigen >= threshold
    logger.info(f"Toeplitz check ({route}, d={spacing}, N={size}): min eigenvalue {min_eigen:.3e}")
    return PdCheckResult(spacing=spacing, size=size, min_eigenvalue=min_eigen,
                         threshold=threshold, interpolation_error=error, route=route, psd=psd)


# ----------------------------------------------------------------------
# closure

def p0_closure_check(params: SpaceParams, h1: CandidateH, h2: CandidateH,
                     constant: float = CLOSURE_CONSTANT,
                     tensor: Optional[KernelTensor] = None) -> ClosureReport:
    """Certify h1 + h2, h1 h2 and constant * h1 with one test family"""
    if not constant > 0:
        raise ParameterDomainError("closure constant must be positive", {"constant": constant})
    tensor = tensor or kernel_tensor(params)
    family = CertificationFamily(params, tensor.grid)
    left = h1.h
    right = h2.h.resample(left.grid)

    total = CandidateH(h=left.combine(right, np.add))
    product = CandidateH(h=left.combine(right, np.multiply))
    multiple = CandidateH(h=left.scaled(constant))
    return ClosureReport(
        constant=constant,
        sum=certify(params, total, tensor, family),
        product=certify(params, product, tensor, family),
        multiple=certify(params, multiple, tensor, family),
    )
