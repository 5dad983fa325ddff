"""
Composite Gauss-Legendre quadrature on half-lines.
Every integral in the toolkit, over r or over lambda, runs on one of these grids.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict, Field, model_validator


@lru_cache(maxsize=64)
def _composite_rule(upper: float, panel_width: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    n_panels = int(round(upper / panel_width))
    edges = np.linspace(0.0, upper, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


class GaussGrid(BaseModel):
    """
    Composite Gauss-Legendre rule on [0, upper].

    Attributes:
        upper: Right end of the interval
        panel_width: Width of each panel; must divide upper
        order: Number of Legendre nodes per panel
    """
    model_config = ConfigDict(frozen=True)

    upper: float = Field(..., gt=0)
    panel_width: float = Field(..., gt=0)
    order: int = Field(..., ge=2, le=64)

    @model_validator(mode="after")
    def check_panels(self) -> "GaussGrid":
        ratio = self.upper / self.panel_width
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(
                f"panel width {self.panel_width} does not divide upper bound {self.upper}"
            )
        return self

    @property
    def n_panels(self) -> int:
        return int(round(self.upper / self.panel_width))

    @property
    def nodes(self) -> np.ndarray:
        return _composite_rule(self.upper, self.panel_width, self.order)[0]

    @property
    def weights(self) -> np.ndarray:
        return _composite_rule(self.upper, self.panel_width, self.order)[1]

    @property
    def size(self) -> int:
        return self.n_panels * self.order

    def symmetric_nodes(self) -> np.ndarray:
        """Nodes mirrored to [-upper, upper], ascending"""
        return np.concatenate([-self.nodes[::-1], self.nodes])

    def symmetric_weights(self) -> np.ndarray:
        return np.concatenate([self.weights[::-1], self.weights])

    def last_panel(self) -> slice:
        """Index range of the outermost panel (used for truncation estimates)"""
        return slice(self.size - self.order, self.size)

    def beyond(self, cut: float) -> np.ndarray:
        """Boolean mask of nodes at or beyond cut"""
        return self.nodes >= cut

    def spec(self) -> str:
        """Stable text form, used in cache keys and reports"""
        return f"gl[0,{self.upper!r}]/{self.panel_width!r}x{self.order}"

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate samples taken at the nodes along the last axis"""
        return np.asarray(values) @ self.weights


def spectral_grid(upper: float = None, panel_width: float = None, order: int = None) -> GaussGrid:
    """Default spectral grid from Config, with optional overrides"""
    from .config import Config
    return GaussGrid(
        upper=upper if upper is not None else Config.LAMBDA_MAX,
        panel_width=panel_width if panel_width is not None else Config.LAMBDA_PANEL,
        order=order if order is not None else Config.LAMBDA_ORDER,
    )


def radial_grid(upper: float = None, panel_width: float = None, order: int = None) -> GaussGrid:
    """Default radial grid from Config, with optional overrides"""
    from .config import Config
    return GaussGrid(
        upper=upper if upper is not None else Config.R_MAX,
        panel_width=panel_width if panel_width is not None else Config.R_PANEL,
        order=order if order is not None else Config.R_ORDER,
    )
