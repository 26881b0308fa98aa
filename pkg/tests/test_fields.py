"""External field families: gauge consistency, Maxwell constraints, stress-energy."""

import numpy as np
import pytest

from ehrlab.fields import (
    CommensurabilityError,
    FieldConfigError,
    LinearGradientE,
    PlaneWave,
    UniformB,
    UniformE,
    ZeroField,
    eval_EB,
    eval_potential,
    field_stress_energy,
    poynting_residual,
    sample_EB,
)
from ehrlab.grid import GridSpec, make_grid

ALL_CONFIGS = [
    ZeroField(),
    UniformE((0.02, 0.0, -0.01)),
    UniformB((0.0, 0.01, 0.05)),
    LinearGradientE((0.02, 0.0, 0.0), ((0.004, 0.001, 0.0), (0.001, -0.004, 0.0), (0.0, 0.0, 0.0))),
    PlaneWave(0.3, (0.0, 0.0, 2 * np.pi / 5.0), (1.0, 0.0, 0.0)),
]


def numeric_EB(config, x, t, h=1e-4):
    """Central-difference E = -dA/dt - grad A0 and B = curl A from the potential."""
    x = np.asarray(x, float)

    def pot(p, when):
        return eval_potential(config, p, when)

    a0_p, A_p = pot(x, t + h)
    a0_m, A_m = pot(x, t - h)
    E = -(A_p - A_m) / (2 * h)
    gradA0 = np.zeros(3)
    jac = np.zeros((3, 3))  # jac[i, j] = d A_j / d x_i
    for i in range(3):
        dx = np.zeros(3)
        dx[i] = h
        a0p, Ap = pot(x + dx, t)
        a0m, Am = pot(x - dx, t)
        gradA0[i] = (a0p - a0m) / (2 * h)
        jac[i] = (Ap - Am) / (2 * h)
    E -= gradA0
    B = np.array([jac[1, 2] - jac[2, 1], jac[2, 0] - jac[0, 2], jac[0, 1] - jac[1, 0]])
    return E, B


def test_zero_config_everything_vanishes():
    a0, A = eval_potential(ZeroField(), (0.3, -1.0, 2.0), 1.5)
    assert a0 == 0.0 and np.all(A == 0.0)
    E, B = eval_EB(ZeroField(), (0.3, -1.0, 2.0), 1.5)
    assert np.all(E == 0.0) and np.all(B == 0.0)


def test_uniform_b_potential_curl_matches_field():
    cfg = UniformB((0.0, 0.0, 0.7))
    for x in [(0.2, 0.4, -0.3), (1.0, -2.0, 0.5)]:
        E, B = numeric_EB(cfg, x, 0.0)
        assert np.allclose(B, (0, 0, 0.7), atol=1e-8)
        assert np.allclose(E, 0.0, atol=1e-8)
    # closed-form A at a sample point: A = B0 x r / 2 = (-B y, B x, 0)/2
    _, A = eval_potential(cfg, (2.0, 3.0, 9.0), 0.0)
    assert np.allclose(A, (0.5 * 0.7 * -3.0, 0.5 * 0.7 * 2.0, 0.0))


def test_uniform_e_gradient_of_linear_potential():
    cfg = UniformE((0.3, 0.0, 0.0))
    E, B = eval_EB(cfg, (5.0, 1.0, -2.0), 3.0)
    assert np.allclose(E, (0.3, 0, 0)) and np.allclose(B, 0.0)
    a0, _ = eval_potential(cfg, (2.0, 7.0, 1.0), 0.0)
    assert a0 == pytest.approx(-0.6)


def test_plane_wave_fields_at_origin():
    a = 0.25
    cfg = PlaneWave(a, (0, 0, 1.3), (1, 0, 0))
    E, B = eval_EB(cfg, (0, 0, 0), 0.0)
    assert np.allclose(E, (a, 0, 0), atol=1e-15)
    assert np.allclose(B, (0, a, 0), atol=1e-15)


def test_linear_gradient_affine_evaluation():
    g = 0.004
    cfg = LinearGradientE((0.02, 0, 0), ((g, 0, 0), (0, -g, 0), (0, 0, 0)))
    E, B = eval_EB(cfg, (3.0, 2.0, 0.0), 0.0)
    assert np.allclose(E, (0.02 + g * 3.0, -g * 2.0, 0.0))
    assert np.allclose(B, 0.0)


@pytest.mark.parametrize("cfg", ALL_CONFIGS, ids=lambda c: c.kind)
def test_gauge_field_consistency(cfg):
    rng = np.random.default_rng(5)
    for _ in range(4):
        x = rng.uniform(-2, 2, 3)
        t = rng.uniform(0, 3)
        E_num, B_num = numeric_EB(cfg, x, t)
        E, B = eval_EB(cfg, x, t)
        scale = max(1.0, np.abs(E).max(), np.abs(B).max())
        assert np.allclose(E_num, E, atol=1e-8 * scale)
        assert np.allclose(B_num, B, atol=1e-8 * scale)


@pytest.mark.parametrize("cfg", ALL_CONFIGS, ids=lambda c: c.kind)
def test_closed_form_gradients_match_finite_differences(cfg):
    h = 1e-5
    x = np.array([0.37, -0.81, 0.22])
    t = 0.9
    dE, dB = cfg.gradients(x, t)
    for i in range(3):
        dx = np.zeros(3)
        dx[i] = h
        Ep, Bp = eval_EB(cfg, x + dx, t)
        Em, Bm = eval_EB(cfg, x - dx, t)
        assert np.allclose((Ep - Em) / (2 * h), dE[i], atol=1e-7)
        assert np.allclose((Bp - Bm) / (2 * h), dB[i], atol=1e-7)


def test_plane_wave_maxwell_constraints_on_grid():
    # div E = 0 and dB/dt + curl E = 0, evaluated spectrally on a commensurate box
    L = 5.0
    grid = make_grid(GridSpec(2, (32, 32), (L, L)))
    k = 2 * np.pi / L * 2
    cfg = PlaneWave(0.4, (k, 0, 0), (0, 1, 0))
    cfg.validate_for_grid(grid)
    t = 0.3
    E, B = sample_EB(cfg, grid, t)
    E = [np.broadcast_to(c, grid.shape) for c in E]
    div_e = sum(grid.deriv_values(E[a].astype(complex), a).real for a in range(2))
    assert np.max(np.abs(div_e)) < 1e-10
    dt = 1e-6
    _, Bp = sample_EB(cfg, grid, t + dt)
    _, Bm = sample_EB(cfg, grid, t - dt)
    dB_dt = [(np.broadcast_to(p, grid.shape) - np.broadcast_to(m, grid.shape)) / (2 * dt)
             for p, m in zip(Bp, Bm)]
    curl_z = (grid.deriv_values(E[1].astype(complex), 0)
              - grid.deriv_values(E[0].astype(complex), 1)).real
    assert np.max(np.abs(dB_dt[2] + curl_z)) < 1e-8  # limited by the 1e-6 time stencil
    assert np.max(np.abs(dB_dt[0])) < 1e-10 and np.max(np.abs(dB_dt[1])) < 1e-10


def test_stress_energy_uniform_e():
    grid = make_grid(GridSpec(1, (8,), (1.0,)))
    E0 = 0.3
    fse = field_stress_energy(grid, (np.full(grid.shape, E0), 0.0, 0.0), (0.0, 0.0, 0.0))
    assert np.allclose(fse.energy_density, E0**2 / 2)
    assert np.allclose(fse.momentum_density, 0.0)
    assert np.allclose(fse.stress[0], -(E0**2) / 2)  # T_xx
    assert np.allclose(fse.stress[1], +(E0**2) / 2)  # T_yy


def test_stress_energy_crossed_fields():
    grid = make_grid(GridSpec(1, (8,), (1.0,)))
    a = 0.7
    fse = field_stress_energy(grid, (a, 0.0, 0.0), (0.0, a, 0.0))
    assert np.allclose(fse.energy_density, a**2)
    norm = np.sqrt(sum(c**2 for c in fse.momentum_density))
    assert np.allclose(norm, a**2)


def test_stress_trace_identity_and_quadratic_scaling():
    rng = np.random.default_rng(2)
    grid = make_grid(GridSpec(2, (8, 8), (1.0, 2.0)))
    E = tuple(rng.standard_normal(grid.shape) for _ in range(3))
    B = tuple(rng.standard_normal(grid.shape) for _ in range(3))
    fse = field_stress_energy(grid, E, B)
    trace = fse.stress[0] + fse.stress[1] + fse.stress[2]
    assert np.allclose(trace, fse.energy_density, atol=1e-14)
    lam = 1.7
    fse2 = field_stress_energy(grid, tuple(lam * c for c in E), tuple(lam * c for c in B))
    assert np.allclose(fse2.energy_density, lam**2 * fse.energy_density)
    assert np.allclose(fse2.stress, lam**2 * fse.stress)
    assert np.allclose(fse2.momentum_density, lam**2 * fse.momentum_density)


def test_plane_wave_momentum_equals_energy_pointwise():
    L = 4.0
    grid = make_grid(GridSpec(2, (16, 16), (L, L)))
    cfg = PlaneWave(0.9, (2 * np.pi / L, 0, 0), (0, 0, 1))
    E, B = sample_EB(cfg, grid, 0.7)
    fse = field_stress_energy(grid, E, B)
    smag = np.sqrt(sum(np.asarray(c) ** 2 for c in fse.momentum_density))
    assert np.max(np.abs(smag - fse.energy_density)) < 1e-12 * 0.81


def test_poynting_residual_zero_and_static():
    grid = make_grid(GridSpec(2, (16, 16), (3.0, 3.0)))
    de, dp = poynting_residual(ZeroField(), grid, 0.5)
    assert de == 0.0 and np.all(dp == 0.0)
    de, dp = poynting_residual(UniformB((0, 0, 0.4)), grid, 0.5)
    assert abs(de) < 1e-14 and np.max(np.abs(dp)) < 1e-14


def test_poynting_residual_plane_wave():
    L = 6.0
    grid = make_grid(GridSpec(2, (32, 32), (L, L)))
    a = 0.5
    cfg = PlaneWave(a, (2 * np.pi / L * 3, 0, 0), (0, 1, 0))
    de, dp = poynting_residual(cfg, grid, 0.8)
    bound = 1e-10 * a**2 * grid.volume
    assert abs(de) < bound
    assert np.max(np.abs(dp)) < bound


def test_poynting_residual_rejects_gradient_field():
    grid = make_grid(GridSpec(1, (16,), (4.0,)))
    cfg = LinearGradientE((0.1, 0, 0), ((0.01, 0, 0), (0, -0.01, 0), (0, 0, 0)))
    with pytest.raises(FieldConfigError):
        poynting_residual(cfg, grid, 0.0)


def test_invalid_configs_rejected():
    with pytest.raises(FieldConfigError):
        LinearGradientE((0, 0, 0), ((0.1, 0.2, 0), (0.0, -0.1, 0), (0, 0, 0)))  # asymmetric
    with pytest.raises(FieldConfigError):
        LinearGradientE((0, 0, 0), ((0.1, 0, 0), (0, 0.1, 0), (0, 0, 0)))  # traceful
    with pytest.raises(FieldConfigError):
        PlaneWave(1.0, (1, 0, 0), (1, 0, 0))  # not transverse
    with pytest.raises(FieldConfigError):
        PlaneWave(1.0, (1, 0, 0), (0, 2, 0))  # not unit
    with pytest.raises(FieldConfigError):
        PlaneWave(1.0, (0, 0, 0), (0, 1, 0))  # zero k


def test_dimensional_compatibility_rules():
    with pytest.raises(FieldConfigError):
        UniformB((0, 0, 0.1)).validate_for_dims(1)
    with pytest.raises(FieldConfigError):
        UniformB((0.1, 0, 0.1)).validate_for_dims(2)
    UniformB((0, 0, 0.1)).validate_for_dims(2)
    with pytest.raises(FieldConfigError):
        UniformE((0, 0.1, 0)).validate_for_dims(1)
    with pytest.raises(FieldConfigError):
        PlaneWave(1.0, (1, 0, 0), (0, 1, 0)).validate_for_dims(1)
    PlaneWave(1.0, (1, 0, 0), (0, 1, 0)).validate_for_dims(2)


def test_commensurability_check():
    grid = make_grid(GridSpec(1, (64,), (1.0,)))
    with pytest.raises(CommensurabilityError):
        # close to 2*pi but not on the lattice
        PlaneWave(1.0, (0, 0, 6.2831853), (1, 0, 0)).validate_for_grid(
            make_grid(GridSpec(2, (16, 16), (1.0, 1.0)))
        )
    cfg = PlaneWave(1.0, (2 * np.pi * 3, 0, 0), (0, 1, 0))
    cfg.validate_for_grid(make_grid(GridSpec(2, (16, 16), (1.0, 1.0))))
    with pytest.raises(CommensurabilityError):
        # commensurate but beyond the represented band
        PlaneWave(1.0, (2 * np.pi * 8, 0, 0), (0, 1, 0)).validate_for_grid(
            make_grid(GridSpec(2, (16, 16), (1.0, 1.0)))
        )
