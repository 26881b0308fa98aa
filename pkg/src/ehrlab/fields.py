"""Closed-form external electromagnetic fields and their energy-momentum bookkeeping.

Each field family provides a fixed gauge potential (A0, A), the field
strengths E and B, and closed-form spatial gradients of E and B.  Vacuum
throughout: D = E and H = B.  In natural units e*E carries dimension
1/length^2.

Gauge choices (one per family, fixed):
    UniformE        A0 = -E0.x, A = 0                    (static gauge)
    UniformB        A  = B0 x r / 2                      (symmetric gauge)
    LinearGradientE A0 = -E0.x - x.G.x/2, A = 0
    PlaneWave       A0 = 0, A = (a/w) pol sin(k.x - w t)  (radiation gauge)

The plane-wave sign is chosen so that E(0, 0) = a*pol and B(0, 0) =
a*(khat x pol), i.e. E, B, k form a right-handed triad with |E| = |B|.

All evaluators accept broadcastable coordinate arrays and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid


class FieldConfigError(ValueError):
    """Field family parameters violate their constraints."""


class CommensurabilityError(FieldConfigError):
    """Plane-wave wavevector does not lie on the grid's wavenumber lattice."""


def _vec3(v):
    out = np.asarray(v, dtype=float).reshape(3)
    return tuple(float(c) for c in out)


def _dot3(v, xs):
    return v[0] * xs[0] + v[1] * xs[1] + v[2] * xs[2]


def _zeros_like_broadcast(xs):
    shape = np.broadcast_shapes(*(np.shape(x) for x in xs))
    return np.zeros(shape)


def _broadcast3(vec, xs):
    z = _zeros_like_broadcast(xs)
    return tuple(z + c for c in vec)


@dataclass(frozen=True)
class ZeroField:
    kind = "zero"

    def potential(self, xs, t):
        z = _zeros_like_broadcast(xs)
        return z, (z, z, z)

    def fields(self, xs, t):
        z = _zeros_like_broadcast(xs)
        return (z, z, z), (z, z, z)

    def gradients(self, x, t):
        return np.zeros((3, 3)), np.zeros((3, 3))

    def validate_for_dims(self, dims):
        pass


@dataclass(frozen=True)
class UniformE:
    """Static uniform E; gauge A0 = -E0.(x - origin), A = 0."""

    e0: tuple[float, float, float]
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind = "uniform_e"

    def __post_init__(self):
        object.__setattr__(self, "e0", _vec3(self.e0))
        object.__setattr__(self, "origin", _vec3(self.origin))

    def potential(self, xs, t):
        rel = tuple(xs[a] - self.origin[a] for a in range(3))
        a0 = -_dot3(self.e0, rel)
        z = _zeros_like_broadcast(xs)
        return a0, (z, z, z)

    def fields(self, xs, t):
        return _broadcast3(self.e0, xs), _broadcast3((0, 0, 0), xs)

    def gradients(self, x, t):
        return np.zeros((3, 3)), np.zeros((3, 3))

    def validate_for_dims(self, dims):
        for a in range(dims, 3):
            if self.e0[a] != 0.0:
                raise FieldConfigError(
                    f"uniform E component {('x','y','z')[a]} must vanish on a {dims}D grid"
                )


@dataclass(frozen=True)
class UniformB:
    """Static uniform B; symmetric gauge A = B0 x (r - origin) / 2."""

    b0: tuple[float, float, float]
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind = "uniform_b"

    def __post_init__(self):
        object.__setattr__(self, "b0", _vec3(self.b0))
        object.__setattr__(self, "origin", _vec3(self.origin))

    def potential(self, xs, t):
        bx, by, bz = self.b0
        rel = tuple(xs[a] - self.origin[a] for a in range(3))
        ax = 0.5 * (by * rel[2] - bz * rel[1])
        ay = 0.5 * (bz * rel[0] - bx * rel[2])
        az = 0.5 * (bx * rel[1] - by * rel[0])
        return _zeros_like_broadcast(xs), (ax, ay, az)

    def fields(self, xs, t):
        return _broadcast3((0, 0, 0), xs), _broadcast3(self.b0, xs)

    def gradients(self, x, t):
        return np.zeros((3, 3)), np.zeros((3, 3))

    def validate_for_dims(self, dims):
        if dims == 1:
            raise FieldConfigError("uniform B needs at least a 2D grid")
        if dims == 2 and (self.b0[0] != 0.0 or self.b0[1] != 0.0):
            raise FieldConfigError("on a 2D grid uniform B must point along z")


@dataclass(frozen=True)
class LinearGradientE:
    """Static E(x) = E0 + G.(x - origin) with G symmetric and trace-free.

    Symmetry makes the field curl-free and the zero trace makes it
    divergence-free, so the sources generating it sit outside the box.
    Gauge: A0 = -E0.(x - origin) - (x - origin).G.(x - origin)/2, A = 0.
    """

    e0: tuple[float, float, float]
    gradient: tuple[tuple[float, float, float], ...]
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind = "linear_gradient_e"

    def __post_init__(self):
        object.__setattr__(self, "e0", _vec3(self.e0))
        object.__setattr__(self, "origin", _vec3(self.origin))
        G = np.asarray(self.gradient, dtype=float).reshape(3, 3)
        if not np.allclose(G, G.T, atol=1e-14):
            raise FieldConfigError("E-field gradient matrix must be symmetric (curl-free)")
        if abs(np.trace(G)) > 1e-14 * max(1.0, np.abs(G).max()):
            raise FieldConfigError("E-field gradient matrix must be trace-free (source-free)")
        object.__setattr__(self, "gradient", tuple(tuple(float(v) for v in row) for row in G))

    def _gmat(self):
        return np.asarray(self.gradient)

    def potential(self, xs, t):
        G = self._gmat()
        rel = tuple(xs[a] - self.origin[a] for a in range(3))
        a0 = -_dot3(self.e0, rel)
        for i in range(3):
            for j in range(3):
                if G[i, j] != 0.0:
                    a0 = a0 - 0.5 * G[i, j] * rel[i] * rel[j]
        z = _zeros_like_broadcast(xs)
        return a0, (z, z, z)

    def fields(self, xs, t):
        G = self._gmat()
        rel = tuple(xs[a] - self.origin[a] for a in range(3))
        E = tuple(
            self.e0[i] + sum(G[i, j] * rel[j] for j in range(3) if G[i, j] != 0.0)
            + _zeros_like_broadcast(xs)
            for i in range(3)
        )
        return E, _broadcast3((0, 0, 0), xs)

    def gradients(self, x, t):
        # dE[i, j] = d_i E_j = G_ji = G_ij
        return self._gmat().copy(), np.zeros((3, 3))

    def validate_for_dims(self, dims):
        G = self._gmat()
        for i in range(dims, 3):
            if self.e0[i] != 0.0:
                raise FieldConfigError(
                    f"E0 component {('x','y','z')[i]} must vanish on a {dims}D grid"
                )
            for j in range(dims):
                if G[i, j] != 0.0:
                    raise FieldConfigError(
                        "gradient must not generate field components off the grid axes"
                    )


@dataclass(frozen=True)
class PlaneWave:
    """Vacuum plane wave: monochromatic, linearly polarized, w = |k|."""

    amplitude: float
    wavevector: tuple[float, float, float]
    polarization: tuple[float, float, float]
    kind = "plane_wave"

    def __post_init__(self):
        object.__setattr__(self, "amplitude", float(self.amplitude))
        k = _vec3(self.wavevector)
        p = _vec3(self.polarization)
        knorm = float(np.linalg.norm(k))
        if knorm == 0.0:
            raise FieldConfigError("plane-wave wavevector must be nonzero")
        if abs(np.linalg.norm(p) - 1.0) > 1e-12:
            raise FieldConfigError("polarization must be a unit vector")
        if abs(np.dot(k, p)) > 1e-12 * knorm:
            raise FieldConfigError("polarization must be orthogonal to the wavevector")
        object.__setattr__(self, "wavevector", k)
        object.__setattr__(self, "polarization", p)

    @property
    def omega(self):
        return float(np.linalg.norm(self.wavevector))

    def _bdir(self):
        k = np.asarray(self.wavevector) / self.omega
        return tuple(np.cross(k, np.asarray(self.polarization)))

    def potential(self, xs, t):
        w = self.omega
        phase = _dot3(self.wavevector, xs) - w * t
        amp = self.amplitude / w
        s = np.sin(phase)
        return _zeros_like_broadcast(xs), tuple(amp * p * s for p in self.polarization)

    def fields(self, xs, t):
        w = self.omega
        phase = _dot3(self.wavevector, xs) - w * t
        c = self.amplitude * np.cos(phase)
        b = self._bdir()
        return (
            tuple(p * c for p in self.polarization),
            tuple(bc * c for bc in b),
        )

    def gradients(self, x, t):
        w = self.omega
        phase = float(_dot3(self.wavevector, x)) - w * t
        s = self.amplitude * np.sin(phase)
        k = np.asarray(self.wavevector)
        dE = -np.outer(k, np.asarray(self.polarization)) * s
        dB = -np.outer(k, np.asarray(self._bdir())) * s
        return dE, dB

    def validate_for_dims(self, dims):
        if dims == 1:
            raise FieldConfigError("a transverse plane wave needs at least a 2D grid")
        for a in range(dims, 3):
            if self.wavevector[a] != 0.0 or self.polarization[a] != 0.0:
                raise FieldConfigError(
                    "plane-wave k and polarization must lie in the grid plane"
                )

    def validate_for_grid(self, grid: Grid):
        """k must sit exactly on the grid's wavenumber lattice (exact periodicity)."""
        for a in range(grid.dims):
            unit = 2.0 * np.pi / grid.spec.extents[a]
            n = self.wavevector[a] / unit
            if abs(n - round(n)) > 1e-12 * max(1.0, abs(n)):
                raise CommensurabilityError(
                    f"plane-wave k[{a}] = {self.wavevector[a]} is not a multiple of "
                    f"2*pi/L = {unit} on axis {a}"
                )
            if abs(round(n)) >= grid.shape[a] // 2:
                raise CommensurabilityError(
                    f"plane-wave k[{a}] exceeds the represented band of axis {a}"
                )
        for a in range(grid.dims, 3):
            if self.wavevector[a] != 0.0:
                raise CommensurabilityError(
                    f"plane-wave k[{a}] must vanish: grid has only {grid.dims} axes"
                )


EMFieldConfig = ZeroField | UniformE | UniformB | LinearGradientE | PlaneWave


def sample_potential(config, grid: Grid, t: float):
    """A0 and A on every grid site; arrays broadcast against the grid shape."""
    return config.potential(grid.coord_arrays3(), t)


def sample_EB(config, grid: Grid, t: float):
    """E and B on every grid site as two 3-tuples of arrays."""
    return config.fields(grid.coord_arrays3(), t)


def eval_potential(config, x, t: float):
    """A_mu = (A0, A) at a single point."""
    xs = tuple(np.asarray(float(c)) for c in x)
    a0, avec = config.potential(xs, t)
    return float(a0), np.array([float(a) for a in avec])


def eval_EB(config, x, t: float):
    """(E, B) at a single point, as 3-vectors."""
    xs = tuple(np.asarray(float(c)) for c in x)
    E, B = config.fields(xs, t)
    return np.array([float(c) for c in E]), np.array([float(c) for c in B])


@dataclass(frozen=True)
class FieldStressEnergy:
    """Pointwise field energy density, momentum density, and Maxwell stress.

    ``stress`` holds the six independent components in the order
    (xx, yy, zz, xy, xz, yz).
    """

    grid: Grid
    energy_density: np.ndarray
    momentum_density: np.ndarray  # shape (3, *grid.shape)
    stress: np.ndarray            # shape (6, *grid.shape)


def field_stress_energy(grid: Grid, E, B) -> FieldStressEnergy:
    """Quadratic field bookkeeping with D = E, H = B.

    energy density  u   = (E.E + B.B)/2
    momentum density s  = E x B
    stress          T_ij = -E_i E_j - B_i B_j + delta_ij u
    """
    E = [np.broadcast_to(np.asarray(c, float), grid.shape) for c in E]
    B = [np.broadcast_to(np.asarray(c, float), grid.shape) for c in B]
    u = 0.5 * sum(c * c for c in E + B)
    s = np.stack([
        E[1] * B[2] - E[2] * B[1],
        E[2] * B[0] - E[0] * B[2],
        E[0] * B[1] - E[1] * B[0],
    ])
    pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    stress = np.stack([
        -E[i] * E[j] - B[i] * B[j] + (u if i == j else 0.0) for i, j in pairs
    ])
    return FieldStressEnergy(grid, u, s, stress)


_POYNTING_KINDS = ("zero", "uniform_e", "uniform_b", "plane_wave")


def poynting_residual(config, grid: Grid, t: float, dt: float = 1e-4):
    """Source-free balance residual of the integrated field energy and momentum.

    On the periodic torus the surface flux terms vanish identically, so for a
    source-free configuration d/dt of the volume-integrated energy and
    momentum densities must be ~ 0.  The time derivative is a central
    difference with step dt.
    """
    if config.kind not in _POYNTING_KINDS:
        raise FieldConfigError(
            f"field balance check needs a source-free family on the torus, "
            f"not {config.kind!r} (its sampled field is discontinuous at the wrap)"
        )
    if config.kind == "plane_wave":
        config.validate_for_grid(grid)

    def totals(when):
        E, B = sample_EB(config, grid, when)
        fse = field_stress_energy(grid, E, B)
        u_tot = float(grid.integrate_values(fse.energy_density))
        s_tot = np.array([float(grid.integrate_values(c)) for c in fse.momentum_density])
        return u_tot, s_tot

    u_p, s_p = totals(t + dt)
    u_m, s_m = totals(t - dt)
    return (u_p - u_m) / (2 * dt), (s_p - s_m) / (2 * dt)
