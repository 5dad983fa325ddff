"""
Triple-product kernel K(lambda, mu, nu), the dual product and the pairing with
|c(lambda)|^-2 dlambda.

    K(lambda, mu, nu)  = int_0^inf phi_lambda phi_mu phi_nu A(r) dr
    (A . B)(nu)        = c0^2 int int A(lambda) B(mu) K(lambda, mu, nu) |c(lambda)|^-2 |c(mu)|^-2
    pairing(h, A)      = int h(lambda) A(lambda) |c(lambda)|^-2 dlambda
"""
import logging
from typing import Optional

import numpy as np

from .config import Config
from .exceptions import GridMismatchError, ParameterDomainError, TruncationError
from .kernel_store import KernelStore, KernelTensor, cache_key
from .models import SpaceParams, SpectralFunction
from .params import density
from .plancherel import evaluator_for, plancherel_for
from .quadrature import GaussGrid

logger = logging.getLogger(__name__)

TAIL_FRACTION = 1e-10


def kernel_grid(upper: float = None) -> GaussGrid:
    """Default spectral grid of the kernel tensor"""
    return GaussGrid(upper=upper if upper is not None else Config.LAMBDA_MAX,
                     panel_width=Config.KERNEL_PANEL, order=Config.KERNEL_ORDER)


def kernel_radial_grid(upper: float = None) -> GaussGrid:
    """Radial rule for triple products; the integrand decays like (1+r)^3 e^(-rho r)"""
    return GaussGrid(upper=upper if upper is not None else Config.KERNEL_R_MAX,
                     panel_width=Config.R_PANEL, order=Config.R_ORDER)


def kernel_K(params: SpaceParams, lam, mu, nu, r_grid: Optional[GaussGrid] = None):
    """
    K(lambda, mu, nu) for real arguments; broadcasts over arrays.
    """
    lam, mu, nu = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (lam, mu, nu)))
    r_grid = r_grid or kernel_radial_grid()
    unique, inverse = np.unique(np.abs(np.concatenate([lam.ravel(), mu.ravel(), nu.ravel()])),
                                return_inverse=True)
    phi = evaluator_for(params.m, params.k).real_phi(unique, r_grid.nodes)
    weights = r_grid.weights * density(params, r_grid.nodes)
    size = lam.size
    il, im, inu = inverse[:size], inverse[size:2 * size], inverse[2 * size:]
    values = np.einsum("ar,ar,ar,r->a", phi[il], phi[im], phi[inu], weights)
    values = values.reshape(lam.shape)
    return float(values) if values.ndim == 0 else values


def build_kernel_tensor(params: SpaceParams, grid: Optional[GaussGrid] = None,
                        r_grid: Optional[GaussGrid] = None) -> KernelTensor:
    """Compute K on the positive nodes of grid by contraction over the radial rule"""
    grid = grid or kernel_grid()
    r_grid = r_grid or kernel_radial_grid()
    phi = evaluator_for(params.m, params.k).real_phi(grid.nodes, r_grid.nodes)
    weights = r_grid.weights * density(params, r_grid.nodes)
    last = r_grid.last_panel()

    n = grid.size
    values = np.empty((n, n, n))
    error = np.empty((n, n, n))
    for i in range(n):
        values[i] = (phi * (weights * phi[i])) @ phi.T
        error[i] = np.abs((phi[:, last] * (weights[last] * phi[i, last])) @ phi[:, last].T)
    logger.info(f"Built kernel tensor N={n} on {grid.spec()} with radial rule {r_grid.spec()}")
    return KernelTensor(m=params.m, k=params.k, density_scale=params.density_scale, grid=grid,
                        r_grid_spec=r_grid.spec(), values=values, quadrature_error=error)


def kernel_tensor(params: SpaceParams, grid: Optional[GaussGrid] = None,
                  r_grid: Optional[GaussGrid] = None, store: Optional[KernelStore] = None,
                  use_cache: bool = True) -> KernelTensor:
    """Kernel tensor from the cache when available, built and stored otherwise"""
    grid = grid or kernel_grid()
    r_grid = r_grid or kernel_radial_grid()
    key = cache_key(params.m, params.k, params.density_scale, grid, r_grid)
    if store is not None and use_cache:
        cached = store.get(key)
        if cached is not None:
            return cached
    tensor = build_kernel_tensor(params, grid, r_grid)
    if store is not None:
        store.put(key, tensor)
    return tensor


def _weighted_half(params: SpaceParams, A: SpectralFunction, grid: GaussGrid) -> np.ndarray:
    """A w |c|^-2 on the positive nodes of grid"""
    pd = plancherel_for(params.m, params.k)
    return A.resample(grid).half_values() * grid.weights * pd.density(grid.nodes)


def _check_tail(weighted: np.ndarray, grid: GaussGrid, name: str):
    total = float(np.sum(np.abs(weighted)))
    tail = float(np.sum(np.abs(weighted[grid.last_panel()])))
    if total > 0 and tail > TAIL_FRACTION * total:
        raise TruncationError(f"{name} has too much mass near the end of the kernel grid",
                              {"tail_fraction": tail / total, "lambda_max": grid.upper})


def odot(params: SpaceParams, A: SpectralFunction, B: SpectralFunction,
         tensor: KernelTensor) -> SpectralFunction:
    """
    Dual product A . B on the kernel grid, by contraction against the cached tensor.
    """
    if not (A.even and B.even):
        raise ParameterDomainError("the dual product is defined for even functions")
    if (tensor.m, tensor.k) != (params.m, params.k):
        raise GridMismatchError("kernel tensor belongs to another space",
                                {"tensor": (tensor.m, tensor.k), "params": (params.m, params.k)})
    grid = tensor.grid
    a = _weighted_half(params, A, grid)
    b = _weighted_half(params, B, grid)
    _check_tail(a, grid, "left factor")
    _check_tail(b, grid, "right factor")

    c0 = plancherel_for(params.m, params.k).c0
    n = grid.size
    # even integrands: each full-line integral is twice the half-line sum
    half = 4.0 * c0 ** 2 * (b @ (a @ tensor.values.reshape(n, n * n)).reshape(n, n))
    return SpectralFunction(grid=grid, values=np.concatenate([half[::-1], half]))


def odot_error(params: SpaceParams, A: SpectralFunction, B: SpectralFunction,
               tensor: KernelTensor) -> float:
    """Bound on the radial truncation error carried into A . B"""
    grid = tensor.grid
    a = np.abs(_weighted_half(params, A, grid))
    b = np.abs(_weighted_half(params, B, grid))
    c0 = plancherel_for(params.m, params.k).c0
    n = grid.size
    err = 4.0 * c0 ** 2 * (b @ (a @ tensor.quadrature_error.reshape(n, n * n)).reshape(n, n))
    return float(np.max(err))


def star(g: SpectralFunction) -> SpectralFunction:
    """g*(lambda) = conj(g(lambda)); equal to g for real even g"""
    return g.conj() if np.iscomplexobj(g.values) else g


def pairing(params: SpaceParams, h: SpectralFunction, A: SpectralFunction) -> float:
    """int h(lambda) A(lambda) |c(lambda)|^-2 dlambda on a shared grid"""
    if h.grid != A.grid:
        raise GridMismatchError("pairing needs both functions on the same grid",
                                {"h": h.grid.spec(), "A": A.grid.spec()})
    pd = plancherel_for(params.m, params.k)
    value = np.sum(pd.weighted_measure(A.grid) * h.values * A.values)
    return float(np.real(value))


def l1_norm(params: SpaceParams, A: SpectralFunction) -> float:
    """Norm of A in L^1(R, |c(lambda)|^-2 dlambda)"""
    pd = plancherel_for(params.m, params.k)
    return float(np.sum(pd.weighted_measure(A.grid) * np.abs(A.values)))


def pairing_form(params: SpaceParams, h: SpectralFunction, tensor: KernelTensor) -> np.ndarray:
    """
    Symmetric matrix M on the positive kernel nodes with
    pairing(h, g . g) = g_half^T M g_half for real even g.
    """
    grid = tensor.grid
    pd = plancherel_for(params.m, params.k)
    wd = grid.weights * pd.density(grid.nodes)
    hv = h.resample(grid).half_values().real
    c0 = pd.c0
    inner = tensor.values @ (wd * hv)
    form = 8.0 * c0 ** 2 * (wd[:, None] * inner * wd[None, :])
    return 0.5 * (form + form.T)
