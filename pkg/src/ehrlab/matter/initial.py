"""Wave-packet initial data.

Gaussian envelope times a plane-wave factor, with the density width set by
the ``width`` parameter: |psi|^2 ~ exp(-(x-c)^2 / (2 width^2)) per axis.  An
optional skew multiplies the envelope by (1 + skew*(x-c)/width) along x,
which moves the density mean off the nominal center.

Dirac packets are projected onto the free positive-frequency subspace in
wavenumber space; KG packets get the positive-frequency partner
pi_hat = -i E(k) phi_hat.  Both are then normalized so the total charge
integral equals the coupling e.
"""

from __future__ import annotations

import numpy as np

from ..fields import ZeroField
from ..grid import Grid
from .dirac import dirac_current, project_positive
from .kg import kg_current
from .state import DIRAC, KG, MatterError, MatterState, component_count

_ZERO = ZeroField()


def _vec3(v):
    return np.asarray(v, dtype=float).reshape(3)


def gaussian_envelope(grid: Grid, center, width, mean_momentum, skew: float = 0.0):
    """Complex envelope exp(-(x-c)^2/(4 w^2)) * (1 + skew dx/w) * exp(i k.x)."""
    center = _vec3(center)
    width = _vec3(width)
    k0 = _vec3(mean_momentum)
    for a in range(grid.dims, 3):
        if k0[a] != 0.0:
            raise MatterError(
                f"mean momentum component {('x','y','z')[a]} has no axis on this grid"
            )
    for a in range(grid.dims):
        if not width[a] > 0:
            raise MatterError("packet width must be positive")
        if 8.0 * width[a] > grid.spec.extents[a]:
            raise MatterError(
                f"packet width {width[a]} too large for extent "
                f"{grid.spec.extents[a]} on axis {a} (wrap risk)"
            )
    env = np.ones(grid.shape, dtype=complex)
    for a in range(grid.dims):
        dx = grid.coords(a) - center[a]
        env = env * np.exp(-(dx**2) / (4.0 * width[a] ** 2) + 1j * k0[a] * grid.coords(a))
        if a == 0 and skew != 0.0:
            env = env * (1.0 + skew * dx / width[a])
    return env


def init_gaussian(model: str, grid: Grid, mass: float, charge: float, center,
                  width, mean_momentum, skew: float = 0.0) -> MatterState:
    """Build a normalized positive-frequency Gaussian packet (KG or Dirac)."""
    if model not in (KG, DIRAC):
        raise MatterError(f"init_gaussian supports kg and dirac states, not {model!r}")
    scalar_width = np.isscalar(width)
    width3 = _vec3((width,) * 3 if scalar_width else width)
    env = gaussian_envelope(grid, center, width3, mean_momentum, skew)

    if model == KG:
        energy = np.sqrt(grid.k_squared + mass * mass)
        phi_hat = grid.fft(env)
        pi_vals = grid.ifft(-1j * energy * phi_hat)
        comps = np.stack([env, pi_vals])
        state = MatterState(KG, grid, mass, charge, 0.0, comps)
        raw = float(grid.integrate_values(kg_current(state, _ZERO).rho))
    else:
        n = component_count(DIRAC, grid.dims)
        comps = np.zeros((n,) + grid.shape, dtype=complex)
        comps[0] = env
        comps = project_positive(grid, mass, comps)
        state = MatterState(DIRAC, grid, mass, charge, 0.0, comps)
        raw = float(grid.integrate_values(dirac_current(state).rho))

    if abs(raw) < 1e-300 or raw / charge <= 0:
        raise MatterError("initial packet carries no usable charge to normalize")
    scale = 1.0 / np.sqrt(raw / charge)
    return state.with_components(state.components * scale)
