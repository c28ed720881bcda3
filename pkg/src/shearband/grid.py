"""Uniform 1-D grid on [-H, H], nodal fields, and rearrangement operators.

The grid carries N interior nodes plus the two boundary nodes, with an odd
interior count so x = 0 is always a node.  Fields are plain value objects
holding one scalar per node; quadrature is composite trapezoid (exact for
piecewise-linear data) and the Laplacian is the standard second central
difference with Dirichlet closures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid1D",
    "Field",
    "integrate",
    "laplacian_dirichlet",
    "decreasing_rearrangement",
    "increasing_rearrangement",
    "field_to_csv",
    "field_from_csv",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [-H, H] with N interior nodes (N odd, >= 3)."""

    H: float = 1.0
    N: int = 401

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise ValueError("interior node count must be odd and >= 3")
        if not self.H > 0:
            raise ValueError("H must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.H / (self.N + 1)

    @property
    def size(self) -> int:
        """Total node count including boundaries."""
        return self.N + 2

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.H, self.H, self.N + 2)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.N + 2, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def field(self, values) -> "Field":
        values = np.broadcast_to(np.asarray(values, dtype=float), (self.size,))
        return Field(self, values.copy())


@dataclass
class Field:
    """Nodal scalar field on a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError(
                f"field length {self.values.shape} does not match grid size {self.grid.size}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def _values(f):
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def integrate(f, grid: Grid1D | None = None) -> float:
    """Composite trapezoid integral over [-H, H]."""
    if isinstance(f, Field):
        grid = f.grid
    return float(grid.weights @ _values(f))


def laplacian_dirichlet(f, g_minus: float, g_plus: float, grid: Grid1D | None = None):
    """Second central difference using boundary data g-, g+.

    Boundary entries of the result are zero by convention; the interior
    stencil next to the boundary uses the supplied Dirichlet values rather
    than the stored boundary entries.
    """
    if isinstance(f, Field):
        grid = f.grid
    v = _values(f)
    ext = v.copy()
    ext[0], ext[-1] = g_minus, g_plus
    out = np.zeros_like(v)
    out[1:-1] = (ext[2:] - 2.0 * ext[1:-1] + ext[:-2]) / grid.dx**2
    if isinstance(f, Field):
        return Field(grid, out)
    return out


def _center_order(grid: Grid1D) -> np.ndarray:
    """Node indices ordered by distance from the center, negative side first."""
    x = grid.x
    return np.lexsort((x, np.abs(x)))


def decreasing_rearrangement(f, grid: Grid1D | None = None):
    """Even-about-center arrangement with values decreasing in |x|.

    The multiset of nodal values is preserved exactly: values are sorted
    descending and assigned to nodes ordered by |x|, ties broken toward the
    negative side.
    """
    if isinstance(f, Field):
        grid = f.grid
    v = _values(f)
    order = _center_order(grid)
    out = np.empty_like(v)
    out[order] = np.sort(v)[::-1]
    if isinstance(f, Field):
        return Field(grid, out)
    return out


def increasing_rearrangement(f, grid: Grid1D | None = None):
    """Even-about-center arrangement with values increasing in |x|."""
    if isinstance(f, Field):
        grid = f.grid
    v = _values(f)
    order = _center_order(grid)
    out = np.empty_like(v)
    out[order] = np.sort(v)
    if isinstance(f, Field):
        return Field(grid, out)
    return out


FLOAT_FMT = "%.17g"


def field_to_csv(f: Field, path_or_buf) -> None:
    """Write ``x,value`` rows, one per node."""
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write("x,value\n")
        for x, v in zip(f.grid.x, f.values):
            buf.write(f"{FLOAT_FMT % x},{FLOAT_FMT % v}\n")
    finally:
        if buf is not path_or_buf:
            buf.close()


def field_from_csv(path_or_buf, H: float | None = None) -> Field:
    """Read a field written by :func:`field_to_csv`."""
    buf = path_or_buf if hasattr(path_or_buf, "read") else open(path_or_buf)
    try:
        data = np.loadtxt(buf, delimiter=",", skiprows=1)
    finally:
        if buf is not path_or_buf:
            buf.close()
    x, v = data[:, 0], data[:, 1]
    grid = Grid1D(H=float(x[-1]) if H is None else H, N=len(x) - 2)
    if not np.allclose(grid.x, x, atol=1e-12 * max(1.0, grid.H)):
        raise ValueError("CSV nodes are not a uniform grid on [-H, H]")
    return Field(grid, v)
