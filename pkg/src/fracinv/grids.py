"""Uniform space and time meshes and their quadrature weights.

Spatial fields are flat arrays of length ``nx * ny`` stored row-major by y then
x, so ``field.reshape(ny, nx)[j, i]`` is the value at ``(x_i, y_j)``.
Space-time fields are arrays of shape ``(nt + 1, nx * ny)``, one snapshot per
time node.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from fracinv.errors import DomainError


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self) -> None:
        if self.nx < 3 or self.ny < 3:
            raise DomainError(f"need at least 3 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DomainError("empty domain")

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat nodal coordinates ``(X, Y)``."""
        xx, yy = np.meshgrid(self.x, self.y)
        return xx.ravel(), yy.ravel()

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights: ``hx * hy`` inside, halved on edges, quartered at corners."""
        wx = np.full(self.nx, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.hy)
        wy[[0, -1]] *= 0.5
        return np.outer(wy, wx).ravel()

    @cached_property
    def boundary(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[[0, -1], :] = True
        mask[:, [0, -1]] = True
        return mask.ravel()

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(x, y)`` at every node."""
        xx, yy = self.coords
        return np.broadcast_to(np.asarray(func(xx, yy), dtype=float), (self.size,)).copy()

    def refine(self) -> "Grid2D":
        """Grid with twice the resolution whose even nodes coincide with ours."""
        return Grid2D(2 * self.nx - 1, 2 * self.ny - 1, self.x_min, self.x_max, self.y_min, self.y_max)

    def restrict_from(self, fine: "Grid2D", values: np.ndarray) -> np.ndarray:
        """Inject values given on ``self.refine()`` back onto this grid."""
        if fine != self.refine():
            raise DomainError("grid is not the 2x refinement of this grid")
        values = np.asarray(values)
        lead = values.shape[:-1]
        v = values.reshape(*lead, fine.ny, fine.nx)[..., ::2, ::2]
        return v.reshape(*lead, self.size)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    nt: int

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise DomainError(f"horizon must be positive: {self.T}")
        if self.nt < 2:
            raise DomainError(f"need at least 2 time steps: {self.nt}")

    @property
    def tau(self) -> float:
        return self.T / self.nt

    @cached_property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.nt + 1, self.tau)
        w[[0, -1]] *= 0.5
        return w

    def sample(self, func) -> np.ndarray:
        return np.broadcast_to(np.asarray(func(self.t), dtype=float), (self.nt + 1,)).copy()


def l2_norm(grid: Grid2D, u: np.ndarray, mask: np.ndarray | None = None) -> float:
    w = grid.weights if mask is None else grid.weights * mask
    return float(np.sqrt(np.sum(w * u * u)))


def inner(grid: Grid2D, u: np.ndarray, v: np.ndarray, mask: np.ndarray | None = None) -> float:
    w = grid.weights if mask is None else grid.weights * mask
    return float(np.sum(w * u * v))


def spacetime_inner(
    grid: Grid2D, timegrid: TimeGrid, u: np.ndarray, v: np.ndarray, mask: np.ndarray | None = None
) -> float:
    """Trapezoid-in-time, trapezoid-in-space inner product over ``Q`` (or ``(0,T) x mask``)."""
    w = grid.weights if mask is None else grid.weights * mask
    return float(timegrid.weights @ ((u * v) @ w))


def spacetime_norm(grid: Grid2D, timegrid: TimeGrid, u: np.ndarray, mask: np.ndarray | None = None) -> float:
    return float(np.sqrt(spacetime_inner(grid, timegrid, u, u, mask)))
