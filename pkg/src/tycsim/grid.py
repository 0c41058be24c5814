"""Cell-centred rectangular grids and the zero-flux diffusion operator.

Fields are plain numpy arrays whose trailing axes match ``grid.cells``.
Leading axes are free, so a stacked ``(4, nx)`` or ``(4, nx, ny)`` array of
species goes through every routine here in one call.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    dim: int
    extents: tuple
    cells: tuple

    @property
    def h(self) -> tuple:
        return tuple(L / n for L, n in zip(self.extents, self.cells))

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    @property
    def measure(self) -> float:
        return math.prod(self.extents)

    @property
    def size(self) -> int:
        return math.prod(self.cells)

    @cached_property
    def coords(self) -> tuple:
        """Cell-centre coordinates, one array per axis shaped like the grid."""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.cells, self.h)]
        return tuple(np.meshgrid(*axes, indexing="ij"))


def build_grid(dim: int, extents, cells) -> Grid:
    """Validate sizes and return a :class:`Grid`.

    Scalars are accepted for ``extents`` and ``cells`` and repeated per axis.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    extents = _per_axis(extents, dim, float)
    cells = _per_axis(cells, dim, int)
    for L in extents:
        if not (math.isfinite(L) and L > 0):
            raise ValueError(f"extents must be positive, got {extents}")
    for n in cells:
        if n < 2:
            raise ValueError(f"need at least 2 cells per axis, got {cells}")
    return Grid(dim, extents, cells)


def _per_axis(value, dim, cast):
    if np.ndim(value) == 0:
        return (cast(value),) * dim
    value = tuple(cast(v) for v in value)
    if len(value) != dim:
        raise ValueError(f"expected {dim} values, got {len(value)}")
    return value


def _check_shape(u, grid):
    if tuple(np.shape(u)[np.ndim(u) - grid.dim:]) != grid.cells:
        raise ValueError(f"field shape {np.shape(u)} does not match grid cells {grid.cells}")


def diffusion_apply(u, a, grid: Grid) -> np.ndarray:
    """Finite-volume ``div(a grad u)`` with zero flux through the boundary.

    Face coefficients are arithmetic means of the two adjacent cells.  Only
    interior faces carry flux, so the column sums of the operator vanish
    and total mass is conserved to rounding.
    """
    u = np.asarray(u, dtype=float)
    a = np.broadcast_to(np.asarray(a, dtype=float), u.shape)
    _check_shape(u, grid)
    out = np.zeros_like(u)
    lead = u.ndim - grid.dim
    for k, h in enumerate(grid.h):
        ax = lead + k
        n = u.shape[ax]
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[ax] = slice(0, n - 1)
        hi[ax] = slice(1, n)
        lo, hi = tuple(lo), tuple(hi)
        flux = 0.5 * (a[lo] + a[hi]) * (u[hi] - u[lo]) / (h * h)
        out[lo] += flux
        out[hi] -= flux
    return out


def diffusion_rate(a_max: float, grid: Grid) -> float:
    """Largest diagonal magnitude of the operator for coefficients below ``a_max``."""
    return 2.0 * a_max * sum(1.0 / (h * h) for h in grid.h)


def l2_norm(u, grid: Grid):
    """Discrete L2 norm over the trailing grid axes (array for stacked input)."""
    u = np.asarray(u, dtype=float)
    _check_shape(u, grid)
    axes = tuple(range(u.ndim - grid.dim, u.ndim))
    return np.sqrt(np.sum(u * u, axis=axes) * grid.cell_volume)


def field_bounds(u) -> tuple:
    u = np.asarray(u)
    return float(np.min(u)), float(np.max(u))


def write_field_csv(path, fields: dict, grid: Grid) -> None:
    """One row per cell: integer indices, centre coordinates, one column per field."""
    names = list(fields)
    idx_cols = ["i", "j"][: grid.dim]
    coord_cols = ["x", "y"][: grid.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(idx_cols + coord_cols + names)
        values = [np.asarray(fields[n]) for n in names]
        for index in np.ndindex(*grid.cells):
            coords = [grid.coords[k][index] for k in range(grid.dim)]
            w.writerow(list(index) + [f"{c:.15g}" for c in coords] + [f"{v[index]:.15g}" for v in values])


def read_field_csv(path, grid: Grid, names=("f", "m", "s", "r")) -> np.ndarray:
    """Inverse of :func:`write_field_csv`; returns an array of shape ``(len(names), *cells)``."""
    out = np.full((len(names),) + grid.cells, np.nan)
    idx_cols = ["i", "j"][: grid.dim]
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            index = tuple(int(row[c]) for c in idx_cols)
            for k, n in enumerate(names):
                out[(k,) + index] = float(row[n])
    if np.isnan(out).any():
        raise ValueError(f"{path}: missing cells or columns for grid {grid.cells}")
    return out
