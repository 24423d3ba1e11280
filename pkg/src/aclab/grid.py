"""Uniform node grids on intervals/rectangles, grid functions and the Neumann Laplacian."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid of [0, Lx] (dim 1) or [0, Lx] x [0, Ly] (dim 2).

    Nodes include the boundary, hx = hy = h = Lx / (nx - 1).  Two-dimensional
    node arrays are indexed ``values[iy, ix]``.
    """

    dim: int
    Lx: float
    nx: int
    Ly: float = 0.0
    ny: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.nx < 3 or (self.dim == 2 and self.ny < 3):
            raise ValueError("need at least 3 nodes per direction")
        if self.dim == 2:
            hy = self.Ly / (self.ny - 1)
            if abs(hy - self.h) > 1e-12 * self.h:
                raise ValueError("grid spacing must be equal in x and y")

    @classmethod
    def line(cls, L: float, n: int) -> "Grid":
        return cls(1, float(L), int(n))

    @classmethod
    def rect(cls, Lx: float, Ly: float, h: float) -> "Grid":
        nx = int(round(Lx / h)) + 1
        ny = int(round(Ly / h)) + 1
        return cls(2, float(Lx), nx, float(Ly), ny)

    @classmethod
    def square(cls, L: float, n: int) -> "Grid":
        return cls(2, float(L), int(n), float(L), int(n))

    @property
    def h(self) -> float:
        return self.Lx / (self.nx - 1)

    @property
    def shape(self):
        return (self.nx,) if self.dim == 1 else (self.ny, self.nx)

    @property
    def x(self):
        return np.linspace(0.0, self.Lx, self.nx)

    @property
    def y(self):
        return np.linspace(0.0, self.Ly, self.ny)

    def coords(self):
        """Tuple of node-coordinate arrays broadcastable to ``shape``."""
        if self.dim == 1:
            return (self.x,)
        return (self.x[None, :], self.y[:, None])

    def mesh(self):
        """Full coordinate arrays (X,) or (X, Y) of shape ``shape``."""
        if self.dim == 1:
            return (self.x,)
        X, Y = np.meshgrid(self.x, self.y)
        return (X, Y)

    def points(self):
        """Node coordinates as an (n, dim) array in C order of ``shape``."""
        return np.stack([c.ravel() for c in self.mesh()], axis=1)

    def subsample(self, k: int) -> "Grid":
        """Every k-th node (requires (n - 1) divisible by k)."""
        if (self.nx - 1) % k or (self.dim == 2 and (self.ny - 1) % k):
            raise ValueError("grid does not nest")
        if self.dim == 1:
            return Grid(1, self.Lx, (self.nx - 1) // k + 1)
        return Grid(2, self.Lx, (self.nx - 1) // k + 1, self.Ly, (self.ny - 1) // k + 1)

    def to_dict(self):
        return {"dim": self.dim, "Lx": self.Lx, "nx": self.nx, "Ly": self.Ly, "ny": self.ny, "h": self.h}


@dataclass(frozen=True)
class Field:
    """A grid function with a time stamp."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def with_values(self, values, time=None) -> "Field":
        return replace(self, values=values, time=self.time if time is None else time)

    def copy(self) -> "Field":
        return replace(self, values=self.values.copy())


def laplacian(u: np.ndarray, h: float, out: np.ndarray | None = None) -> np.ndarray:
    """Standard 3/5-point Laplacian with reflected ghost nodes (homogeneous Neumann)."""
    if out is None:
        out = np.empty_like(u)
    inv = 1.0 / (h * h)
    if u.ndim == 1:
        out[1:-1] = u[:-2] - 2.0 * u[1:-1] + u[2:]
        out[0] = 2.0 * (u[1] - u[0])
        out[-1] = 2.0 * (u[-2] - u[-1])
    else:
        # x-direction (axis 1)
        out[:, 1:-1] = u[:, :-2] - 2.0 * u[:, 1:-1] + u[:, 2:]
        out[:, 0] = 2.0 * (u[:, 1] - u[:, 0])
        out[:, -1] = 2.0 * (u[:, -2] - u[:, -1])
        # y-direction (axis 0)
        out[1:-1, :] += u[:-2, :] - 2.0 * u[1:-1, :] + u[2:, :]
        out[0, :] += 2.0 * (u[1, :] - u[0, :])
        out[-1, :] += 2.0 * (u[-2, :] - u[-1, :])
    out *= inv
    return out


def ghost_normal_difference(u: np.ndarray) -> float:
    """Largest centred boundary-normal difference using the reflected ghost nodes.

    With ghosts u[-1] := u[1] this is identically zero; it is exposed so that
    the Neumann treatment can be audited.
    """
    def ghosted(a, axis):
        lo = np.take(a, [1], axis=axis)
        hi = np.take(a, [a.shape[axis] - 2], axis=axis)
        return np.concatenate([lo, a, hi], axis=axis)

    worst = 0.0
    for axis in range(u.ndim):
        g = ghosted(u, axis)
        n = g.shape[axis]
        d0 = np.take(g, [2], axis=axis) - np.take(g, [0], axis=axis)
        d1 = np.take(g, [n - 1], axis=axis) - np.take(g, [n - 3], axis=axis)
        worst = max(worst, float(np.max(np.abs(d0))), float(np.max(np.abs(d1))))
    return worst


def gradient_norm(u: np.ndarray, h: float) -> np.ndarray:
    """|grad u| by centred differences (one-sided at the boundary)."""
    grads = np.gradient(u, h)
    if u.ndim == 1:
        return np.abs(grads)
    return np.sqrt(grads[0] ** 2 + grads[1] ** 2)


def initial_data_bound(u0: Field) -> float:
    """C0 = ||u0|| + ||grad u0|| + ||Laplacian u0|| (sup norms, finite differences)."""
    v = u0.values
    h = u0.grid.h
    return float(np.max(np.abs(v)) + np.max(gradient_norm(v, h)) + np.max(np.abs(laplacian(v, h))))
