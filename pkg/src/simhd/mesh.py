"""Cartesian grids, ghost layers and boundary handling.

All fields live on a uniform Cartesian box as cell-centered arrays that
include ghost layers on every axis with more than one cell.  Axes with a
single cell are treated as collapsed: they carry no ghost layers and every
derivative along them vanishes identically, which is how 1D and 2D runs are
expressed on the common 3D data layout.

Three ghost-filling policies cover the benchmark suite:

* ``periodic``       wrap-around copy of the opposite interior slab,
* ``frozen``         ghosts permanently hold the initial-condition values
                     (the usual finite-volume reading of Dirichlet data),
* ``zero-gradient``  nearest interior value copied outward.

The magnetic potential never uses these: its ghosts are always filled by
componentwise linear extrapolation from the two nearest interior cells
(see :func:`extrapolate_potential_ghosts`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
FROZEN = "frozen"
ZERO_GRADIENT = "zero-gradient"
_KINDS = (PERIODIC, FROZEN, ZERO_GRADIENT)


class ConfigurationError(ValueError):
    """Invalid grid, boundary or run configuration."""


class ShapeError(ValueError):
    """Array extents do not match the owning grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian box with ghost layers.

    ``n`` holds interior cell counts, ``gw`` the per-axis ghost widths
    (``nghost`` on active axes, 0 on collapsed ones) and ``shape`` the full
    allocated extent per axis.
    """

    bounds: tuple[float, float, float, float, float, float]
    n: tuple[int, int, int]
    nghost: int
    d: tuple[float, float, float] = field(init=False)
    gw: tuple[int, int, int] = field(init=False)
    shape: tuple[int, int, int] = field(init=False)

    def __post_init__(self):
        lows = self.bounds[0::2]
        highs = self.bounds[1::2]
        for lo, hi, cnt in zip(lows, highs, self.n):
            if cnt < 1:
                raise ConfigurationError(f"cell count must be >= 1, got {cnt}")
            if not hi > lo:
                raise ConfigurationError(f"inverted bounds [{lo}, {hi}]")
        if self.nghost < 2:
            raise ConfigurationError(f"nghost must be >= 2, got {self.nghost}")
        d = tuple((hi - lo) / cnt for lo, hi, cnt in zip(lows, highs, self.n))
        gw = tuple(self.nghost if cnt > 1 else 0 for cnt in self.n)
        shape = tuple(cnt + 2 * g for cnt, g in zip(self.n, gw))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "gw", gw)
        object.__setattr__(self, "shape", shape)

    def active(self, axis: int) -> bool:
        return self.n[axis] > 1

    @property
    def active_axes(self) -> tuple[int, ...]:
        return tuple(ax for ax in range(3) if self.n[ax] > 1)

    @property
    def interior(self) -> tuple[slice, slice, slice]:
        """Index triple selecting interior cells of a ghosted array."""
        return tuple(slice(g, g + cnt) for g, cnt in zip(self.gw, self.n))

    @property
    def cell_volume(self) -> float:
        return self.d[0] * self.d[1] * self.d[2]

    def centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along ``axis`` for the full ghosted extent."""
        lo = self.bounds[2 * axis]
        g = self.gw[axis]
        idx = np.arange(-g, self.n[axis] + g)
        return lo + (idx + 0.5) * self.d[axis]

    def center_mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (x, y, z) center coordinates over the ghosted box."""
        return np.meshgrid(self.centers(0), self.centers(1), self.centers(2),
                           indexing="ij", sparse=True)

    def scalar_field(self) -> np.ndarray:
        return np.zeros(self.shape)

    def vector_field(self) -> np.ndarray:
        return np.zeros((3,) + self.shape)


def build_grid(bounds, counts, nghost: int = 2) -> Grid:
    """Construct a grid from six bounds and three interior cell counts."""
    bounds = tuple(float(b) for b in bounds)
    counts = tuple(int(c) for c in counts)
    if len(bounds) != 6 or len(counts) != 3:
        raise ConfigurationError("expected 6 bounds and 3 cell counts")
    return Grid(bounds=bounds, n=counts, nghost=nghost)


@dataclass(frozen=True)
class BoundaryCondition:
    """Ghost-filling kind per face, ordered (xlo, xhi, ylo, yhi, zlo, zhi)."""

    kinds: tuple[str, str, str, str, str, str]

    def __post_init__(self):
        for k in self.kinds:
            if k not in _KINDS:
                raise ConfigurationError(f"unknown boundary kind {k!r}")
        for ax in range(3):
            lo, hi = self.kinds[2 * ax], self.kinds[2 * ax + 1]
            if (lo == PERIODIC) != (hi == PERIODIC):
                raise ConfigurationError(
                    "periodic boundaries must be paired on opposing faces")

    @classmethod
    def uniform(cls, kind: str) -> "BoundaryCondition":
        return cls((kind,) * 6)

    @classmethod
    def per_axis(cls, x: str, y: str, z: str) -> "BoundaryCondition":
        return cls((x, x, y, y, z, z))

    def kind(self, axis: int, side: int) -> str:
        return self.kinds[2 * axis + side]

    def has_frozen(self) -> bool:
        return FROZEN in self.kinds


def _axis_slicer(axis: int):
    def slc(s: slice):
        idx = [slice(None)] * 3
        idx[axis] = s
        return tuple(idx)
    return slc


def _fill_axis(field: np.ndarray, grid: Grid, bc: BoundaryCondition,
               axis: int, frozen: np.ndarray | None):
    g = grid.gw[axis]
    if g == 0:
        return
    n = grid.n[axis]
    slc = _axis_slicer(axis)
    lo_ghost, hi_ghost = slc(slice(0, g)), slc(slice(n + g, n + 2 * g))
    for side, ghost in ((0, lo_ghost), (1, hi_ghost)):
        kind = bc.kind(axis, side)
        if kind == PERIODIC:
            src = slc(slice(n, n + g)) if side == 0 else slc(slice(g, 2 * g))
            field[(Ellipsis,) + ghost] = field[(Ellipsis,) + src]
        elif kind == FROZEN:
            if frozen is None:
                raise ConfigurationError(
                    "frozen boundary requires stored initial data")
            field[(Ellipsis,) + ghost] = frozen[(Ellipsis,) + ghost]
        else:  # zero-gradient
            edge = slc(slice(g, g + 1)) if side == 0 else slc(slice(n + g - 1, n + g))
            field[(Ellipsis,) + ghost] = field[(Ellipsis,) + edge]


def fill_ghosts(field: np.ndarray, grid: Grid, bc: BoundaryCondition,
                frozen: np.ndarray | None = None) -> np.ndarray:
    """Populate all ghost cells of ``field`` in place and return it.

    ``field`` may be a scalar field of shape ``grid.shape`` or a
    componentwise stack ``(k,) + grid.shape``; ``frozen`` must match when a
    frozen face is present.  Interior cells are never written.  Collapsed
    axes wrap trivially and are skipped.
    """
    if field.shape[-3:] != grid.shape:
        raise ShapeError(f"field extent {field.shape} does not match grid {grid.shape}")
    if frozen is not None and frozen.shape != field.shape:
        raise ShapeError("frozen data extent does not match field")
    for axis in range(3):
        _fill_axis(field, grid, bc, axis, frozen)
    return field


def extrapolate_potential_ghosts(A: np.ndarray, grid: Grid) -> np.ndarray:
    """Fill ghost layers of the magnetic potential by linear extrapolation.

    Works componentwise and per axis: both ghost layers continue the line
    through the two interior cells nearest the boundary, so any
    componentwise-affine potential is reproduced exactly.  Axes are swept in
    x, y, z order; later sweeps extend the already-extrapolated slabs, which
    keeps corner regions consistent for affine data.
    """
    if A.shape[-3:] != grid.shape:
        raise ShapeError(f"potential extent {A.shape} does not match grid {grid.shape}")
    for axis in range(3):
        g = grid.gw[axis]
        if g == 0:
            continue
        n = grid.n[axis]
        if n < 2:
            raise ConfigurationError(
                "linear extrapolation needs at least 2 interior cells")
        slc = _axis_slicer(axis)
        first = A[(Ellipsis,) + slc(slice(g, g + 1))]
        second = A[(Ellipsis,) + slc(slice(g + 1, g + 2))]
        last = A[(Ellipsis,) + slc(slice(n + g - 1, n + g))]
        before = A[(Ellipsis,) + slc(slice(n + g - 2, n + g - 1))]
        for layer in range(1, g + 1):
            A[(Ellipsis,) + slc(slice(g - layer, g - layer + 1))] = first - layer * (second - first)
            A[(Ellipsis,) + slc(slice(n + g + layer - 1, n + g + layer))] = last + layer * (last - before)
    return A
