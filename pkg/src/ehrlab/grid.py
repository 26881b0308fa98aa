"""Uniform periodic grids with spectral differentiation and volume quadrature.

Every dynamical field in the lab lives on a uniform periodic Cartesian
lattice in 1-3 dimensions, stored row-major with axes ordered (x, y, z).
Spatial derivatives are evaluated in Fourier space (exact for band-limited
data); integrals are plain Riemann sums, which on a periodic grid are
spectrally accurate for smooth integrands.  Natural units, hbar = c = 1.

All arithmetic is float64/complex128; grids and field wrappers are immutable
once built, and every operation here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid grid specification or mismatched field/grid combination."""


class FieldDataError(ValueError):
    """Field payload violates its invariants (shape or non-finite values)."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _as_tuple(value, dims, kind):
    if np.isscalar(value):
        return (kind(value),) * dims
    out = tuple(kind(v) for v in value)
    if len(out) != dims:
        raise GridError(f"expected {dims} per-axis values, got {len(out)}")
    return out


@dataclass(frozen=True)
class GridSpec:
    """Lattice layout: dimensionality, points per axis, box extent per axis."""

    dims: int
    points: tuple[int, ...]
    extents: tuple[float, ...]

    def __post_init__(self):
        if self.dims not in (1, 2, 3):
            raise GridError(f"dims must be 1, 2 or 3, got {self.dims}")
        object.__setattr__(self, "points", _as_tuple(self.points, self.dims, int))
        object.__setattr__(self, "extents", _as_tuple(self.extents, self.dims, float))
        for n in self.points:
            if n < 8 or not _is_power_of_two(n):
                raise GridError(f"points per axis must be a power of two >= 8, got {n}")
        for ext in self.extents:
            if not (ext > 0.0) or not np.isfinite(ext):
                raise GridError(f"extent must be positive and finite, got {ext}")


class Grid:
    """A realized GridSpec: site coordinates, wavenumber tables, quadrature weights.

    ``wavenumbers[a]`` is the physical wavenumber ladder 2*pi*n/L in standard
    FFT ordering (n = 0, 1, ..., N/2-1, -N/2, ..., -1).  The derivative
    multiplier tables zero the unpaired Nyquist bin, the usual convention for
    odd-order spectral derivatives of real data; with that bin zeroed each
    table sums to zero exactly.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.dims = spec.dims
        self.shape = tuple(spec.points)
        self.spacing = tuple(L / n for L, n in zip(spec.extents, spec.points))
        self.cell_volume = float(np.prod(self.spacing))
        self.volume = float(np.prod(spec.extents))
        self.site_count = int(np.prod(self.shape))

        self.axis_coords = tuple(
            np.arange(n) * h for n, h in zip(spec.points, self.spacing)
        )
        self.wavenumbers = tuple(
            2.0 * np.pi * np.fft.fftfreq(n, d=h)
            for n, h in zip(spec.points, self.spacing)
        )
        deriv = []
        for k in self.wavenumbers:
            table = k.copy()
            n = table.size
            table[n // 2] = 0.0  # unpaired Nyquist mode: odd derivative is zero
            deriv.append(table)
        self.deriv_wavenumbers = tuple(deriv)

        # Broadcastable views: axis a gets shape (1,..,N_a,..,1).
        self._bc_coords = tuple(
            c.reshape(self._axis_shape(a)) for a, c in enumerate(self.axis_coords)
        )
        self._bc_k = tuple(
            k.reshape(self._axis_shape(a)) for a, k in enumerate(self.deriv_wavenumbers)
        )
        self.k_squared = sum(
            (k.reshape(self._axis_shape(a))) ** 2
            for a, k in enumerate(self.wavenumbers)
        )
        self.axes = tuple(range(-self.dims, 0))

    def _axis_shape(self, axis):
        shape = [1] * self.dims
        shape[axis] = self.shape[axis]
        return tuple(shape)

    def coords(self, axis: int) -> np.ndarray:
        """Site coordinates along ``axis``, broadcastable to the grid shape."""
        return self._bc_coords[axis]

    def k_broadcast(self, axis: int) -> np.ndarray:
        """Derivative wavenumber table along ``axis``, broadcastable to the grid."""
        return self._bc_k[axis]

    def coord_arrays3(self):
        """Coordinates as a 3-tuple, zero on axes the grid does not have."""
        coords = list(self._bc_coords)
        while len(coords) < 3:
            coords.append(np.zeros((1,) * self.dims))
        return tuple(coords)

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values, axes=self.axes)

    def ifft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(values, axes=self.axes)

    def deriv_values(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Spectral d/dx_axis of an array of grid samples."""
        if not 0 <= axis < self.dims:
            raise GridError(f"axis {axis} out of range for dims {self.dims}")
        spec = np.fft.fft(values, axis=axis - self.dims)
        spec *= 1j * self._bc_k[axis]
        return np.fft.ifft(spec, axis=axis - self.dims)

    def laplacian_values(self, values: np.ndarray) -> np.ndarray:
        return self.ifft(self.fft(values) * (-self.k_squared))

    def integrate_values(self, values: np.ndarray) -> complex | float:
        total = values.sum(axis=self.axes) * self.cell_volume
        return total

    def __eq__(self, other):
        return isinstance(other, Grid) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)

    def __repr__(self):
        return f"Grid(dims={self.dims}, points={self.shape}, extents={self.spec.extents})"


def make_grid(spec: GridSpec) -> Grid:
    """Build a grid with precomputed coordinates and wavenumber tables."""
    return Grid(spec)


@dataclass(frozen=True)
class ComplexField:
    """Complex samples on a grid, row-major (x, y, z)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise FieldDataError(
                f"field shape {v.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", v)

    def assert_finite(self):
        if not np.all(np.isfinite(self.values)):
            raise FieldDataError("complex field contains non-finite values")
        return self


@dataclass(frozen=True)
class RealField:
    """Real samples on a grid, row-major (x, y, z)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise FieldDataError(
                f"field shape {v.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", v)

    def assert_finite(self):
        if not np.all(np.isfinite(self.values)):
            raise FieldDataError("real field contains non-finite values")
        return self


def derivative(f: ComplexField, axis: int) -> ComplexField:
    """Spectral derivative along ``axis``; exact for band-limited fields."""
    return ComplexField(f.grid, f.grid.deriv_values(f.values, axis))


def integrate(f):
    """Volume integral h1*h2*h3 * sum(values) of a Real- or ComplexField."""
    if isinstance(f, (ComplexField, RealField)):
        return f.grid.integrate_values(f.values)
    raise TypeError("integrate expects a ComplexField or RealField")
