"""Particle-level reductions of the field data.

Total charge, the charge centroid xi (normalized first moment of rho,
periodic-aware), the velocity field v = j/rho with a tail mask, the packet
energy/momentum integrals, and the dipole moment (first moment of rho about
a chosen expansion point).

Periodic first moments are computed via the circular mean followed by a
minimum-image refinement; a raw moment is meaningless on a torus.  All
particle-level vectors are reported as 3-vectors with zeros on absent axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .matter.state import FourCurrent, StressEnergySlice


class ObservableError(RuntimeError):
    """Ill-conditioned reduction (vanishing net charge, masked centroid, ...)."""


CHARGE_FLOOR = 1e-6  # |Q| below this fraction of |e| makes the centroid ill-defined


def total_charge(cur: FourCurrent) -> float:
    """Volume integral of the charge density (equals e for a normalized packet)."""
    return float(cur.grid.integrate_values(cur.rho))


def _axis_moment(grid: Grid, rho, axis: int, q: float) -> float:
    """Periodic first moment along one axis: circular mean + minimum image."""
    L = grid.spec.extents[axis]
    x = grid.coords(axis)
    theta = (2.0 * np.pi / L) * x
    c = float(np.sum(rho * np.cos(theta)))
    s = float(np.sum(rho * np.sin(theta)))
    mean_angle = np.arctan2(s, c)
    center0 = (L / (2.0 * np.pi)) * mean_angle % L
    offsets = (x - center0 + 0.5 * L) % L - 0.5 * L
    refined = center0 + float(np.sum(rho * offsets)) * grid.cell_volume / q
    return refined % L


def centroid(cur: FourCurrent, charge_scale: float | None = None) -> np.ndarray:
    """Center of the charge density as a 3-vector (zeros beyond grid dims).

    ``charge_scale`` is the nominal |e| used for the ill-conditioning guard;
    it defaults to |Q| itself (guarding only against Q ~ 0).
    """
    grid = cur.grid
    q = total_charge(cur)
    scale = abs(charge_scale) if charge_scale is not None else max(abs(q), 1e-300)
    if abs(q) < CHARGE_FLOOR * scale:
        raise ObservableError(
            f"net charge {q:g} below {CHARGE_FLOOR:g} x {scale:g}: centroid ill-defined"
        )
    out = np.zeros(3)
    for a in range(grid.dims):
        out[a] = _axis_moment(grid, cur.rho, a, q)
    return out


def dipole_moment(cur: FourCurrent, xi) -> np.ndarray:
    """First moment of rho about xi with minimum-image offsets.

    About the exact charge centroid this vanishes identically; about any
    other point c it equals Q (centroid - c), the shift law d(xi + delta) =
    d(xi) - delta Q.
    """
    grid = cur.grid
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(3)
    for a in range(grid.dims):
        L = grid.spec.extents[a]
        offsets = (grid.coords(a) - xi[a] + 0.5 * L) % L - 0.5 * L
        out[a] = float(np.sum(cur.rho * offsets)) * grid.cell_volume
    return out


def velocity_field(cur: FourCurrent, mask_floor: float = 1e-6):
    """v = j/rho where |rho| >= mask_floor * max|rho|; masked cells carry 0.

    Returns (v, mask) with v shaped (3, *grid.shape) and mask boolean.
    """
    if not mask_floor > 0:
        raise ValueError("mask_floor must be positive")
    rho = cur.rho
    peak = float(np.max(np.abs(rho)))
    if peak == 0.0:
        raise ObservableError("cannot build a velocity field from a zero density")
    mask = np.abs(rho) >= mask_floor * peak
    safe = np.where(mask, rho, 1.0)
    v = np.where(mask, cur.j / safe, 0.0)
    return v, mask


def velocity_at(grid: Grid, v, mask, point) -> np.ndarray:
    """Multilinear periodic interpolation of the velocity field at a point.

    Fails if any interpolation corner is masked: the packet is structured so
    strangely at the requested point that no velocity can be reported.
    """
    point = np.asarray(point, dtype=float)
    # fractional lattice coordinates per axis
    idx0 = []
    frac = []
    for a in range(grid.dims):
        h = grid.spacing[a]
        n = grid.shape[a]
        s = (point[a] / h) % n
        i0 = int(np.floor(s)) % n
        idx0.append(i0)
        frac.append(s - np.floor(s))
    corners = [()]
    for a in range(grid.dims):
        corners = [c + (0,) for c in corners] + [c + (1,) for c in corners]
    out = np.zeros(3)
    for corner in corners:
        weight = 1.0
        site = []
        for a, bit in enumerate(corner):
            weight *= frac[a] if bit else (1.0 - frac[a])
            site.append((idx0[a] + bit) % grid.shape[a])
        site = tuple(site)
        if not mask[site]:
            raise ObservableError(
                f"velocity undefined at {tuple(point[:grid.dims])}: "
                f"interpolation corner {site} is masked"
            )
        out += weight * np.array([v[d][site] for d in range(3)])
    return out


def energy_momentum(se: StressEnergySlice):
    """(En, P): volume integrals of T^{00} and T^{0i}."""
    grid = se.grid
    en = float(grid.integrate_values(se.t00))
    p = np.array([float(grid.integrate_values(se.t0i[d])) for d in range(3)])
    return en, p


@dataclass(frozen=True)
class TrajectoryRecord:
    """One sampled row of the packet trajectory."""

    t: float
    xi: tuple[float, float, float]
    v: tuple[float, float, float]
    p: tuple[float, float, float]
    energy: float
    charge: float
    dipole: tuple[float, float, float]
    neg_freq_fraction: float

    @staticmethod
    def columns():
        return ("t", "xi_x", "xi_y", "xi_z", "vx", "vy", "vz",
                "Px", "Py", "Pz", "E", "Q", "dx", "dy", "dz", "negfrac")

    def row(self):
        return (self.t, *self.xi, *self.v, *self.p, self.energy, self.charge,
                *self.dipole, self.neg_freq_fraction)
