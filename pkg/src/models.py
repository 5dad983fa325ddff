"""
Data models for the geometry, sampled functions, measures and reports.
Implements invariant validation with Pydantic.
"""
from fractions import Fraction
from typing import Any, Callable, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .quadrature import GaussGrid


def _as_float_array(v: Any) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d array, got shape {arr.shape}")
    return arr


class SpaceParams(BaseModel):
    """
    H-type dimension parameters of a Damek-Ricci space.

    Attributes:
        m: Dimension of the first layer, positive and even
        k: Dimension of the centre, positive
        density_scale: Normalization s of the radial density A(r)
        calibrated: Whether density_scale came out of the calibration solve
    """
    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=2)
    k: int = Field(..., ge=1)
    density_scale: float = Field(..., gt=0)
    calibrated: bool = False

    @field_validator("m")
    @classmethod
    def validate_m_even(cls, v: int) -> int:
        if v % 2:
            raise ValueError(f"m must be even, got {v}")
        return v

    @property
    def Q(self) -> Fraction:
        return Fraction(self.m, 2) + self.k

    @property
    def rho(self) -> Fraction:
        return self.Q / 2

    @property
    def n(self) -> int:
        return self.m + self.k + 1

    @property
    def rho_value(self) -> float:
        return float(self.rho)

    @property
    def alpha(self) -> Fraction:
        """Jacobi index (m+k-1)/2"""
        return Fraction(self.m + self.k - 1, 2)

    @property
    def beta(self) -> Fraction:
        """Jacobi index (k-1)/2"""
        return Fraction(self.k - 1, 2)

    def with_scale(self, scale: float, calibrated: bool = True) -> "SpaceParams":
        return SpaceParams(m=self.m, k=self.k, density_scale=scale, calibrated=calibrated)


class RadialProfile(BaseModel):
    """
    Radial function sampled on an ascending grid in the geodesic radius.

    When grid is set, rs are exactly its nodes and integrals use its weights.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rs: np.ndarray
    values: np.ndarray
    decay_class: Literal["compact", "gaussian", "schwartz-p2"] = "gaussian"
    support: Optional[float] = None
    grid: Optional[GaussGrid] = None

    @field_validator("rs", "values", mode="before")
    @classmethod
    def coerce_arrays(cls, v: Any) -> np.ndarray:
        return _as_float_array(v)

    @model_validator(mode="after")
    def check_profile(self) -> "RadialProfile":
        if self.rs.shape != self.values.shape:
            raise ValueError("rs and values must have the same length")
        if self.rs.size and (self.rs[0] < 0 or np.any(np.diff(self.rs) <= 0)):
            raise ValueError("rs must be nonnegative and strictly ascending")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite")
        if self.decay_class == "compact" and self.support is None:
            raise ValueError("compact profiles must record their support bound")
        return self


class SpectralFunction(BaseModel):
    """
    Function of lambda sampled on the symmetric node set of a Gauss grid.

    Attributes:
        grid: Half-line grid; samples live on grid.symmetric_nodes()
        values: Samples (real or complex)
        even: Whether the function is even
        rule: Optional exact rule, used to resample onto other grids
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: GaussGrid
    values: np.ndarray
    even: bool = True
    rule: Optional[Callable[[np.ndarray], np.ndarray]] = Field(default=None, exclude=True)

    @field_validator("values", mode="before")
    @classmethod
    def coerce_values(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v)
        if not np.iscomplexobj(arr):
            arr = arr.astype(float)
        return arr

    @model_validator(mode="after")
    def check_spectrum(self) -> "SpectralFunction":
        if self.values.shape != (2 * self.grid.size,):
            raise ValueError(
                f"expected {2 * self.grid.size} samples, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectral values must be finite")
        if self.even:
            asym = np.max(np.abs(self.values - self.values[::-1]), initial=0.0)
            scale = max(1.0, float(np.max(np.abs(self.values), initial=0.0)))
            if asym > 1e-12 * scale:
                raise ValueError(f"function flagged even but asymmetric by {asym:.3e}")
        return self

    @classmethod
    def from_rule(cls, rule: Callable[[np.ndarray], np.ndarray], grid: GaussGrid,
                  even: bool = True) -> "SpectralFunction":
        lam = grid.symmetric_nodes()
        values = np.asarray(rule(lam))
        if even:
            # enforce exact symmetry of the samples
            half = values[grid.size:]
            values = np.concatenate([half[::-1], half])
        return cls(grid=grid, values=values, even=even, rule=rule)

    @property
    def lambdas(self) -> np.ndarray:
        return self.grid.symmetric_nodes()

    def half_values(self) -> np.ndarray:
        """Samples at the positive nodes"""
        return self.values[self.grid.size:]

    def conj(self) -> "SpectralFunction":
        rule = None
        if self.rule is not None:
            base = self.rule
            rule = lambda lam: np.conj(base(lam))
        return SpectralFunction(grid=self.grid, values=np.conj(self.values),
                                even=self.even, rule=rule)

    def combine(self, other: "SpectralFunction", op: Callable) -> "SpectralFunction":
        if other.grid != self.grid:
            from .exceptions import GridMismatchError
            raise GridMismatchError("spectral functions on different grids",
                                    {"left": self.grid.spec(), "right": other.grid.spec()})
        rule = None
        if self.rule is not None and other.rule is not None:
            a, b = self.rule, other.rule
            rule = lambda lam: op(a(lam), b(lam))
        return SpectralFunction(grid=self.grid, values=op(self.values, other.values),
                                even=self.even and other.even, rule=rule)

    def scaled(self, factor: complex) -> "SpectralFunction":
        rule = None
        if self.rule is not None:
            base = self.rule
            rule = lambda lam: factor * base(lam)
        return SpectralFunction(grid=self.grid, values=factor * self.values,
                                even=self.even, rule=rule)

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        """Evaluate off-grid: exact rule when known, cubic spline otherwise"""
        if self.rule is not None:
            return np.asarray(self.rule(np.asarray(lam, dtype=float)))
        from scipy.interpolate import CubicSpline
        spline = CubicSpline(self.lambdas, self.values, extrapolate=False)
        return spline(np.asarray(lam, dtype=float))

    def resample(self, grid: GaussGrid) -> "SpectralFunction":
        if grid == self.grid:
            return self
        if self.rule is not None:
            return SpectralFunction.from_rule(self.rule, grid, even=self.even)
        if grid.upper > self.grid.upper:
            from .exceptions import GridMismatchError
            raise GridMismatchError("target grid extends beyond sampled range",
                                    {"source": self.grid.spec(), "target": grid.spec()})
        # nodes inside the outermost source nodes only; clamp the rest
        lam = np.clip(grid.symmetric_nodes(), self.lambdas[0], self.lambdas[-1])
        values = self(lam)
        if self.even:
            half = values[grid.size:]
            values = np.concatenate([half[::-1], half])
        return SpectralFunction(grid=grid, values=values, even=self.even)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


class RadialMeasure(BaseModel):
    """
    Atomic radial positive measure: weights at geodesic radii.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rs: np.ndarray
    weights: np.ndarray

    @field_validator("rs", "weights", mode="before")
    @classmethod
    def coerce_arrays(cls, v: Any) -> np.ndarray:
        return _as_float_array(v)

    @model_validator(mode="after")
    def check_measure(self) -> "RadialMeasure":
        if self.rs.shape != self.weights.shape:
            raise ValueError("rs and weights must have the same length")
        if np.any(self.rs < 0):
            raise ValueError("radii must be nonnegative")
        if np.any(self.weights < 0):
            raise ValueError("measure weights must be nonnegative")
        return self

    @classmethod
    def atoms(cls, pairs: List[tuple]) -> "RadialMeasure":
        rs = [r for r, _ in pairs]
        ws = [w for _, w in pairs]
        return cls(rs=rs, weights=ws)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


class TransformResult(BaseModel):
    """Spectral function together with its quadrature error estimate"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    spectrum: SpectralFunction
    error_estimate: float


class AbelMeasure(BaseModel):
    """Nonnegative even point masses on a t-grid (t >= 0 half, mirrored)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    ts: np.ndarray
    masses: np.ndarray
    residual: float

    @property
    def total(self) -> float:
        """Total mass of the even measure on the whole line"""
        return float(self.masses[0] + 2.0 * np.sum(self.masses[1:])) \
            if self.ts[0] == 0.0 else float(2.0 * np.sum(self.masses))


class CertificationReport(BaseModel):
    """Outcome of screening h against a finite test family"""
    test_family: str
    family_size: int
    min_value: float
    tolerance: float
    quadrature_error: float
    form_min_eigenvalue: Optional[float] = None
    verdict: Literal["pass", "fail", "inconclusive"]
    witnesses: List[Dict[str, Any]] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_witness(self) -> "CertificationReport":
        if self.verdict == "fail" and (self.min_value >= -self.tolerance or not self.witnesses):
            raise ValueError("a failing verdict needs a negative value and a witness")
        return self


class MeasureRecovery(BaseModel):
    """Recovered radial measure from a certified candidate"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    measure: RadialMeasure
    residual: float
    phi0_mass: float
    h_at_zero: float
    representable: bool
    projected: bool = False
    certification: Literal["pass", "inconclusive"] = "pass"


class KreinFit(BaseModel):
    """Nonnegative weights on the real and imaginary spectral axes"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    real_lambdas: np.ndarray
    mu1: np.ndarray
    imag_lambdas: np.ndarray
    mu2: np.ndarray
    residual: float
    relative_residual: float
    f_at_zero: float
    mu1_bound: float
    positive_definite: bool

    @model_validator(mode="after")
    def check_weights(self) -> "KreinFit":
        if np.any(self.mu1 < 0) or np.any(self.mu2 < 0):
            raise ValueError("Krein weights must be nonnegative")
        if self.mu1_mass > self.mu1_bound * (1 + 1e-12):
            raise ValueError("real-axis mass exceeds f(0) plus tolerance")
        return self

    @property
    def mu1_mass(self) -> float:
        return float(np.sum(self.mu1))

    @property
    def mu2_mass(self) -> float:
        return float(np.sum(self.mu2))


class PdCheckResult(BaseModel):
    """Toeplitz positive definiteness check on R"""
    spacing: float
    size: int
    min_eigenvalue: float
    threshold: float
    interpolation_error: float
    route: Literal["direct", "fourier"]
    psd: bool


class ClosureReport(BaseModel):
    """Certification of sums, products and positive multiples"""
    constant: float
    sum: CertificationReport
    product: CertificationReport
    multiple: CertificationReport

    @property
    def all_pass(self) -> bool:
        return all(r.verdict == "pass" for r in (self.sum, self.product, self.multiple))


class GridSpec(BaseModel):
    """Uniform grid request (min, max, count) from the command line"""
    min: float
    max: float
    count: int = Field(..., ge=8)

    @model_validator(mode="after")
    def check_bounds(self) -> "GridSpec":
        if self.max <= self.min:
            raise ValueError("grid max must exceed min")
        return self

    def points(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


class RunConfig(BaseModel):
    """Resolved configuration of one command-line run"""
    m: int = 2
    k: int = 1
    density_scale: Optional[float] = None
    lambda_grid: GridSpec = GridSpec(min=0.0, max=8.0, count=65)
    r_grid: GridSpec = GridSpec(min=0.0, max=10.0, count=101)
    t_grid: GridSpec = GridSpec(min=-8.0, max=8.0, count=161)
    tolerance: float = Field(1e-7, gt=0)
    cache_dir: Optional[str] = None
    use_cache: bool = True
    output_format: Literal["csv", "json"] = "csv"
