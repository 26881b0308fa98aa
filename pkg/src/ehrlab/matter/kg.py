"""Klein-Gordon dynamics under minimal coupling.

The second-order equation D_mu D^mu phi + m^2 phi = 0 is evolved as the
first-order pair (phi, pi) with pi = D_t phi = (d_t + i e A0) phi:

    d phi/dt = pi - i e A0 phi
    d pi/dt  = (grad - i e A)^2 phi - m^2 phi - i e A0 pi

using classical RK4 in time and spectral spatial derivatives.  Every field
family here is divergence-free in A (static gauges carry A = 0; the plane
wave is transverse), so the div(A) term of the covariant Laplacian drops.

RK4 is conditionally stable; the configured step must satisfy
dt < 0.5 / (|k|_max + |e|*|A|_max + m), and a 10x norm-growth guard aborts a
step that slipped past the bound.
"""

from __future__ import annotations

import numpy as np

from ..fields import sample_potential
from ..grid import Grid
from .state import (
    KG,
    FourCurrent,
    InstabilityError,
    MatterState,
    StressEnergySlice,
)


def _is_zero(arr) -> bool:
    return np.ndim(arr) == 0 and arr == 0.0


class KGRK4Stepper:
    """Fourth-order Runge-Kutta for the (phi, pi) pair."""

    def __init__(self, grid: Grid, mass: float, charge: float, field_config, dt: float):
        field_config.validate_for_dims(grid.dims)
        self.grid = grid
        self.mass = mass
        self.charge = charge
        self.field = field_config
        self.dt = float(dt)
        self.static = field_config.kind != "plane_wave"
        self._pot_cache = {}

    def _potential(self, t):
        if self.static:
            if "static" not in self._pot_cache:
                self._pot_cache["static"] = sample_potential(self.field, self.grid, 0.0)
            return self._pot_cache["static"]
        return sample_potential(self.field, self.grid, t)

    def _rhs(self, phi, pi, t):
        grid, e, m = self.grid, self.charge, self.mass
        a0, avec = self._potential(t)
        dphi = pi if _is_zero(a0) else pi - 1j * e * a0 * phi
        dpi = grid.laplacian_values(phi) - m * m * phi
        for d in range(grid.dims):
            a_d = avec[d]
            if not _is_zero(a_d):
                dpi -= 2j * e * a_d * grid.deriv_values(phi, d)
                dpi -= (e * a_d) ** 2 * phi
        if not _is_zero(a0):
            dpi -= 1j * e * a0 * pi
        return dphi, dpi

    def __call__(self, state: MatterState) -> MatterState:
        dt = self.dt
        t = state.t
        phi, pi = state.components
        before = float(np.sum(np.abs(phi) ** 2 + np.abs(pi) ** 2))
        k1p, k1q = self._rhs(phi, pi, t)
        k2p, k2q = self._rhs(phi + 0.5 * dt * k1p, pi + 0.5 * dt * k1q, t + 0.5 * dt)
        k3p, k3q = self._rhs(phi + 0.5 * dt * k2p, pi + 0.5 * dt * k2q, t + 0.5 * dt)
        k4p, k4q = self._rhs(phi + dt * k3p, pi + dt * k3q, t + dt)
        phi_n = phi + (dt / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        pi_n = pi + (dt / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
        after = float(np.sum(np.abs(phi_n) ** 2 + np.abs(pi_n) ** 2))
        if not np.isfinite(after) or after > 100.0 * before:
            raise InstabilityError(
                f"KG step at t = {t:g} grew the state norm by more than 10x "
                f"(time step above the stability bound?)"
            )
        return state.with_components(np.stack([phi_n, pi_n]), t=t + dt)


def step_kg(state: MatterState, field_config, dt: float) -> MatterState:
    """One RK4 step of the Klein-Gordon pair; see KGRK4Stepper."""
    if state.model != KG:
        raise ValueError("step_kg needs a KG state")
    return KGRK4Stepper(state.grid, state.mass, state.charge, field_config, dt)(state)


def kg_current(state: MatterState, field_config) -> FourCurrent:
    """j^mu = e Re[phi* i D^mu phi] with pi = D_t phi stored in the state."""
    grid, e = state.grid, state.charge
    phi, pi = state.components
    _, avec = sample_potential(field_config, grid, state.t)
    rho = -e * (phi.conj() * pi).imag
    j = np.zeros((3,) + grid.shape)
    abs2 = None
    for d in range(grid.dims):
        jd = (phi.conj() * grid.deriv_values(phi, d)).imag
        a_d = avec[d]
        if not _is_zero(a_d):
            if abs2 is None:
                abs2 = np.abs(phi) ** 2
            jd = jd - e * a_d * abs2
        j[d] = e * jd
    return FourCurrent(grid, rho, j)


def kg_stress_energy(state: MatterState, field_config) -> StressEnergySlice:
    """T^{00} = (|pi|^2 + |D phi|^2 + m^2 |phi|^2)/2;  T^{0i} = -Re[pi* (D phi)_i]."""
    grid, e, m = state.grid, state.charge, state.mass
    phi, pi = state.components
    _, avec = sample_potential(field_config, grid, state.t)
    t00 = 0.5 * (np.abs(pi) ** 2 + m * m * np.abs(phi) ** 2)
    t0i = np.zeros((3,) + grid.shape)
    for d in range(grid.dims):
        dphi = grid.deriv_values(phi, d)
        a_d = avec[d]
        if not _is_zero(a_d):
            dphi = dphi - 1j * e * a_d * phi
        t00 += 0.5 * np.abs(dphi) ** 2
        t0i[d] = -(pi.conj() * dphi).real
    return StressEnergySlice(grid, t00, t0i)


def kg_neg_freq_fraction(state: MatterState) -> float:
    """Free-dispersion frequency split: weight of the negative branch.

    Splits (phi_hat, pi_hat) into a+- = (phi_hat -+ i pi_hat / E(k))/2 and
    weights each branch by E(k), matching the charge carried per mode.
    """
    grid, m = state.grid, state.mass
    phi, pi = state.components
    energy = np.sqrt(grid.k_squared + m * m)
    phi_hat = grid.fft(phi)
    pi_hat = grid.fft(pi)
    a_plus = 0.5 * (phi_hat + 1j * pi_hat / energy)
    a_minus = 0.5 * (phi_hat - 1j * pi_hat / energy)
    w_plus = float(np.sum(energy * np.abs(a_plus) ** 2))
    w_minus = float(np.sum(energy * np.abs(a_minus) ** 2))
    total = w_plus + w_minus
    return w_minus / total if total > 0 else 0.0
