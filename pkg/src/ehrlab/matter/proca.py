"""Free Proca plane-wave snapshots and their field-theoretic densities.

Only free monochromatic modes are constructed (no time evolution in external
fields): phi^mu = eps^mu exp(i(k.x - w t)) with w = sqrt(k^2 + m^2) and the
four-transversality constraint k_mu eps^mu = w eps^0 - k.eps = 0, which
enforces d_mu phi^mu = 0.  The snapshot also carries the field-strength pair

    phi^{mu nu} = d^mu phi^nu - d^nu phi^mu = -i (k^mu eps^nu - k^nu eps^mu) phase

with kup = (w, k).  Only the six (mu < nu) components are stored; the
rest follow from antisymmetry.

Because the mode is monochromatic, every quadratic density (current,
energy density, momentum density) is spatially and temporally constant, so
the conservation checks reduce to grid-divergence residuals at round-off.
"""

from __future__ import annotations

import numpy as np

from ..grid import Grid
from .state import PROCA, PROCA_FT_PAIRS, FourCurrent, MatterState, MatterError, StressEnergySlice


def _check_commensurate(grid: Grid, kvec):
    for a in range(3):
        if a >= grid.dims:
            if kvec[a] != 0.0:
                raise MatterError(
                    f"wavevector component {('x','y','z')[a]} must vanish on a "
                    f"{grid.dims}D grid"
                )
            continue
        unit = 2.0 * np.pi / grid.spec.extents[a]
        n = kvec[a] / unit
        if abs(n - round(n)) > 1e-12 * max(1.0, abs(n)):
            raise MatterError(
                f"wavevector k[{a}] = {kvec[a]} is not on the grid wavenumber lattice"
            )
        if abs(round(n)) >= grid.shape[a] // 2:
            raise MatterError(f"wavevector k[{a}] exceeds the represented band")


def proca_plane_wave(grid: Grid, mass: float, charge: float, wavevector,
                     polarization, t: float = 0.0) -> MatterState:
    """Sample a free Proca mode (phi^mu, phi^{mu nu}) on the grid at time t."""
    k = np.asarray(wavevector, dtype=float).reshape(3)
    eps = np.asarray(polarization, dtype=complex).reshape(4)
    _check_commensurate(grid, k)
    omega = float(np.sqrt(k @ k + mass * mass))
    transversality = omega * eps[0] - (k[0] * eps[1] + k[1] * eps[2] + k[2] * eps[3])
    scale = max(1.0, float(np.max(np.abs(eps))))
    if abs(transversality) > 1e-10 * scale:
        raise MatterError(
            f"polarization is not four-transverse: k_mu eps^mu = {transversality:g}"
        )
    xs = grid.coord_arrays3()
    phase = np.exp(1j * (k[0] * xs[0] + k[1] * xs[1] + k[2] * xs[2] - omega * t))
    phase = np.broadcast_to(phase, grid.shape)
    k_up = np.array([omega, k[0], k[1], k[2]])
    comps = np.zeros((10,) + grid.shape, dtype=complex)
    for mu in range(4):
        comps[mu] = eps[mu] * phase
    for slot, (mu, nu) in enumerate(PROCA_FT_PAIRS):
        comps[4 + slot] = -1j * (k_up[mu] * eps[nu] - k_up[nu] * eps[mu]) * phase
    return MatterState(PROCA, grid, mass, charge, t, comps)


def _field_tensor(state: MatterState):
    """Full antisymmetric phi^{mu nu} as a 4x4 table of arrays (views)."""
    comps = state.components
    F = [[None] * 4 for _ in range(4)]
    zero = np.zeros(state.grid.shape, dtype=complex)
    for mu in range(4):
        F[mu][mu] = zero
    for slot, (mu, nu) in enumerate(PROCA_FT_PAIRS):
        F[mu][nu] = comps[4 + slot]
        F[nu][mu] = -comps[4 + slot]
    return F


def proca_current(state: MatterState) -> FourCurrent:
    """j^mu = -e Re[i phi*_nu phi^{mu nu}] with indices lowered by the metric."""
    grid, e = state.grid, state.charge
    comps = state.components
    F = _field_tensor(state)
    # phi_nu = (phi^0, -phi^i)
    phi_low = [comps[0], -comps[1], -comps[2], -comps[3]]
    out = []
    for mu in range(4):
        acc = np.zeros(grid.shape, dtype=complex)
        for nu in range(4):
            acc += phi_low[nu].conj() * F[mu][nu]
        out.append(-e * (1j * acc).real)
    j = np.zeros((3,) + grid.shape)
    j[0], j[1], j[2] = out[1], out[2], out[3]
    return FourCurrent(grid, out[0], j)


def proca_stress_energy(state: MatterState) -> StressEnergySlice:
    """T^{00} and T^{0i} of the Proca tensor (metric diag(1,-1,-1,-1)).

    T^{00} = |phi^{0i}|^2/2 + |phi^{ij}|^2/2 (i<j) + m^2 (|phi^0|^2 + |phi^i|^2)/2
    T^{0i} = Re[ sum_j phi^{0j*} phi^{ij} + m^2 phi^{0*} phi^i ]
    """
    grid, m = state.grid, state.mass
    comps = state.components
    F = _field_tensor(state)
    t00 = np.zeros(grid.shape)
    for i in range(1, 4):
        t00 += 0.5 * np.abs(F[0][i]) ** 2
    for i in range(1, 4):
        for jdx in range(i + 1, 4):
            t00 += 0.5 * np.abs(F[i][jdx]) ** 2
    for mu in range(4):
        t00 += 0.5 * m * m * np.abs(comps[mu]) ** 2
    t0i = np.zeros((3,) + grid.shape)
    for i in range(1, 4):
        acc = np.zeros(grid.shape, dtype=complex)
        for jdx in range(1, 4):
            acc += F[0][jdx].conj() * F[i][jdx]
        acc += m * m * comps[0].conj() * comps[i]
        t0i[i - 1] = acc.real
    return StressEnergySlice(grid, t00, t0i)


def proca_four_divergence(state: MatterState, wavevector) -> float:
    """Max |d_mu phi^mu| on the grid, d_t from the closed-form -i w phase."""
    grid, m = state.grid, state.mass
    k = np.asarray(wavevector, dtype=float).reshape(3)
    omega = float(np.sqrt(k @ k + m * m))
    comps = state.components
    div = -1j * omega * comps[0]
    for d in range(grid.dims):
        div = div + grid.deriv_values(comps[1 + d], d)
    return float(np.max(np.abs(div)))


def proca_conservation_residuals(state: MatterState, wavevector):
    """Grid residuals of charge and energy conservation for a free mode.

    For a monochromatic mode all quadratic densities are time independent
    (the phases cancel), so d_t rho = 0 and d_t T^{00} = 0 hold in closed
    form; what remains is the spectral divergence of j and of T^{i0}.
    Returns (max |div j|, max |d_i T^{i0}|).
    """
    grid = state.grid
    cur = proca_current(state)
    se = proca_stress_energy(state)
    div_j = np.zeros(grid.shape)
    div_t = np.zeros(grid.shape)
    for d in range(grid.dims):
        div_j = div_j + grid.deriv_values(cur.j[d].astype(complex), d).real
        div_t = div_t + grid.deriv_values(se.t0i[d].astype(complex), d).real
    return float(np.max(np.abs(div_j))), float(np.max(np.abs(div_t)))
