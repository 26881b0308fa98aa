"""Balance rates, dipole correction, stencils, classical comparator, report."""

import numpy as np
import pytest

from ehrlab.ehrenfest import (
    BalanceError,
    assemble_balance_samples,
    build_report,
    classical_trajectory,
    exchange_rates_integral,
    first_order_correction,
    fit_order,
    numeric_time_derivative,
    rates_point,
    render_report,
)
from ehrlab.fields import LinearGradientE, PlaneWave, UniformB, UniformE, ZeroField
from ehrlab.grid import GridSpec, make_grid
from ehrlab.matter import four_current, init_gaussian
from ehrlab.observables import centroid, dipole_moment, total_charge


def packet_current(skew=0.0, width=0.8, k0=0.4):
    g = make_grid(GridSpec(1, (256,), (40.0,)))
    st = init_gaussian("dirac", g, 1.0, 1.0, (20, 0, 0), width, (k0, 0, 0), skew=skew)
    return g, four_current(st, ZeroField())


def test_uniform_e_force_is_charge_times_field():
    g, cur = packet_current()
    e0 = 0.02
    power, force = exchange_rates_integral(cur, UniformE((e0, 0, 0)), 0.0)
    q = total_charge(cur)
    assert force[0] == pytest.approx(e0 * q, rel=1e-13)
    assert abs(force[1]) < 1e-15 and abs(force[2]) < 1e-15


def test_pure_magnetic_field_does_no_work():
    g, cur = packet_current()
    power, force = exchange_rates_integral(cur, UniformB((0, 0, 0.05)), 0.0)
    assert power == 0.0


def test_integral_rates_match_brute_force_sum():
    g, cur = packet_current(skew=0.2)
    gmat = ((0.004, 0, 0), (0, -0.004, 0), (0, 0, 0))
    cfg = LinearGradientE((0.02, 0, 0), gmat)
    power, force = exchange_rates_integral(cur, cfg, 0.0)
    # independent direct lattice sum
    x = g.axis_coords[0]
    ex = 0.02 + 0.004 * x
    brute_power = float((cur.j[0] * ex).sum()) * g.cell_volume
    brute_force = float((cur.rho * ex).sum()) * g.cell_volume
    assert power == pytest.approx(brute_power, rel=1e-13)
    assert force[0] == pytest.approx(brute_force, rel=1e-13)


def test_point_rates_match_integral_for_uniform_fields():
    g, cur = packet_current()
    cfg = UniformE((0.02, 0, 0))
    xi = centroid(cur)
    v = np.array([0.37, 0, 0])
    p_int, f_int = exchange_rates_integral(cur, cfg, 0.0)
    q = total_charge(cur)
    p_pt, f_pt = rates_point(xi, v, cfg, 0.0, q)
    assert np.max(np.abs(f_pt - f_int)) < 1e-12 * abs(f_int[0])
    # power differs: the integral uses the true current, the point form e v.E
    assert p_pt == pytest.approx(q * v[0] * 0.02, rel=1e-13)


def test_point_rates_zero_field_cases():
    xi = np.array([1.0, 2.0, 0.0])
    p, f = rates_point(xi, (0.3, 0, 0), UniformB((0, 0, 0.1)), 0.0, 1.0)
    assert p == 0.0  # E = 0: no power
    assert np.allclose(f, np.cross([0.3, 0, 0], [0, 0, 0.1]))
    p2, f2 = rates_point(xi, (0.3, 0, 0), ZeroField(), 0.0, 1.0)
    assert p2 == 0.0 and np.all(f2 == 0.0)


def test_linear_gradient_point_force_affine():
    gmat = ((0.004, 0, 0), (0, -0.004, 0), (0, 0, 0))
    cfg = LinearGradientE((0.02, 0, 0), gmat)
    xi = np.array([3.0, 0, 0])
    _, f = rates_point(xi, (0, 0, 0), cfg, 0.0, 1.0)
    assert f[0] == pytest.approx(0.02 + 0.004 * 3.0, rel=1e-14)


def test_first_order_correction_uniform_and_symmetric():
    assert np.all(first_order_correction((0.1, 0, 0), (0.2, 0, 0),
                                         UniformE((0.02, 0, 0)), (1, 0, 0), 0.0) == 0.0)
    gmat = ((0.004, 0.001, 0), (0.001, -0.004, 0), (0, 0, 0))
    cfg = LinearGradientE((0.02, 0, 0), gmat)
    assert np.all(first_order_correction((0, 0, 0), (0.2, 0, 0), cfg, (1, 0, 0), 0.0) == 0.0)


def test_first_order_correction_gradient_contraction():
    g = 0.004
    h = 0.001
    gmat = ((g, h, 0), (h, -g, 0), (0, 0, 0))
    cfg = LinearGradientE((0.02, 0, 0), gmat)
    d0 = 0.3
    out = first_order_correction((d0, 0, 0), (0, 0, 0), cfg, (0.7, -0.2, 0), 0.0)
    # (d.grad)E with d = d0 xhat: d0 * (G_xx, G_yx, G_zx)
    assert np.allclose(out, (d0 * g, d0 * h, 0.0), atol=1e-15)


def test_corrected_point_force_is_exact_for_affine_fields_any_center():
    # Q E(c) + (d(c).grad)E equals the exact force integral for every c
    g, cur = packet_current(skew=0.3)
    gmat = ((0.004, 0, 0), (0, -0.004, 0), (0, 0, 0))
    cfg = LinearGradientE((0.02, 0, 0), gmat)
    _, f_int = exchange_rates_integral(cur, cfg, 0.0)
    q = total_charge(cur)
    for cx in (17.0, 20.0, 23.5):
        c = np.array([cx, 0, 0])
        _, f_pt = rates_point(c, (0, 0, 0), cfg, 0.0, q)
        corr = first_order_correction(dipole_moment(cur, c), (0, 0, 0), cfg, c, 0.0)
        assert (f_pt + corr)[0] == pytest.approx(f_int[0], rel=1e-12)


def test_dipole_correction_scaling_in_curved_field():
    # For a field with curvature the corrected point force at an offset
    # center is wrong only at quadrupole order: the remainder tracks
    # mu2(c) E''(c)/2 and halving the width shrinks it ~4x.
    L = 80.0
    kx = 2 * np.pi / L  # gentle curvature scale
    a = 0.05
    cfg = PlaneWave(a, (kx, 0, 0), (0, 1, 0))
    g = make_grid(GridSpec(1, (256,), (L,)))
    x = g.axis_coords[0]
    residuals = []
    for width in (4.0, 2.0, 1.0):
        st = init_gaussian("dirac", g, 1.0, 1.0, (40, 0, 0), width, (0, 0, 0))
        cur = four_current(st, ZeroField())
        _, f_int = exchange_rates_integral(cur, cfg, 0.0)
        q = total_charge(cur)
        c = np.array([40.0 + 0.5 * width, 0, 0])  # deliberately offset center
        _, f_pt = rates_point(c, (0, 0, 0), cfg, 0.0, q)
        corr = first_order_correction(dipole_moment(cur, c), (0, 0, 0), cfg, c, 0.0)
        remainder = np.linalg.norm(f_pt + corr - f_int)
        residuals.append(remainder)
        # quadrupole oracle: remainder ~ |mu2(c) E''(c)| / 2 pointing along pol
        mu2 = float((cur.rho * (x - c[0]) ** 2).sum()) * g.cell_volume
        e_second = -a * kx**2 * np.cos(kx * c[0])  # d^2 E_y / dx^2
        assert remainder == pytest.approx(abs(0.5 * mu2 * e_second), rel=0.15)
    order = fit_order(residuals)
    assert order > 1.8


def test_numeric_derivative_quadratic_exact():
    t = np.arange(11) * 0.1
    series = t**2
    deriv, flags = numeric_time_derivative(series, 0.1, stencil_order=2)
    assert np.allclose(deriv, 2 * t, atol=1e-12)
    assert flags[0] and flags[-1] and not flags[1:-1].any()


def test_numeric_derivative_convergence_orders():
    for order in (2, 4):
        errs = []
        for dt in (0.1, 0.05, 0.025):
            t = np.arange(0, 200) * dt
            deriv, flags = numeric_time_derivative(np.sin(t), dt, order)
            interior = ~flags
            errs.append(np.max(np.abs(deriv[interior] - np.cos(t[interior]))))
        slope = fit_order(errs)
        assert slope > order - 0.1


def test_numeric_derivative_constant_and_errors():
    deriv, _ = numeric_time_derivative(np.ones(9), 0.1, 4)
    assert np.max(np.abs(deriv)) < 1e-13
    with pytest.raises(BalanceError):
        numeric_time_derivative(np.ones(3), 0.1, 4)
    with pytest.raises(BalanceError):
        numeric_time_derivative(np.ones(9), 0.1, 3)


def test_classical_hyperbolic_motion():
    e0, m = 0.02, 1.0
    cfg = UniformE((e0, 0, 0))
    times, xs, ps, vs = classical_trajectory((0, 0, 0), (0, 0, 0), m, 1.0, cfg, 1e-3, 10.0)
    # closed form: p = e E t, x = (sqrt(m^2 + (eEt)^2) - m)/(eE)
    p_exact = e0 * times
    x_exact = (np.sqrt(m**2 + (e0 * times) ** 2) - m) / e0
    assert np.max(np.abs(ps[:, 0] - p_exact)) < 1e-12
    assert np.max(np.abs(xs[:, 0] - x_exact)) < 1e-10


def test_classical_cyclotron_orbit():
    b, m, p0 = 0.05, 1.0, 0.5
    cfg = UniformB((0, 0, b))
    energy = np.sqrt(p0**2 + m**2)
    period = 2 * np.pi * energy / b
    dt = period / 4096.0
    times, xs, ps, vs = classical_trajectory((0, 0, 0), (p0, 0, 0), m, 1.0, cfg, dt, period)
    pmag = np.linalg.norm(ps, axis=1)
    assert np.max(np.abs(pmag - p0)) < 1e-12
    radius = p0 / b
    center = xs[0] + np.array([0, -radius, 0])  # e>0, B along +z: clockwise orbit
    r = np.linalg.norm(xs[:, :2] - center[:2], axis=1)
    assert np.max(np.abs(r - radius)) < 1e-8
    assert np.linalg.norm(xs[-1] - xs[0]) < 1e-6  # closed after one period


def test_classical_free_straight_line():
    times, xs, ps, vs = classical_trajectory((1, 2, 0), (0.3, 0, 0), 1.0, 1.0,
                                             ZeroField(), 0.01, 5.0)
    v = 0.3 / np.sqrt(1.09)
    assert np.allclose(xs[:, 0], 1.0 + v * times, atol=1e-12)
    assert np.allclose(ps[:, 0], 0.3, atol=1e-15)


def test_classical_step_bound():
    with pytest.raises(BalanceError):
        classical_trajectory((0, 0, 0), (0.5, 0, 0), 1.0, 1.0,
                             UniformB((0, 0, 0.5)), 0.2, 1.0)


def _dummy_samples(n=9, dt=0.1, slope=0.02):
    times = np.arange(n) * dt
    p = np.stack([slope * times, 0 * times, 0 * times], axis=1)
    en = np.full(n, 1.25)
    rows_int = [(0.0, np.array([slope, 0, 0]))] * n
    rows_pt = [(0.0, np.array([slope, 0, 0]))] * n
    rows_corr = [np.zeros(3)] * n
    return assemble_balance_samples(times, p, en, rows_int, rows_pt, rows_corr, 2)


def test_report_uniform_field_point_equals_integral():
    samples = _dummy_samples()
    tol = {k: 1e-3 for k in ("energy_integral", "momentum_integral",
                             "momentum_point", "momentum_corrected")}
    report = build_report(samples, tol)
    assert report.all_passed
    r_int = report.residuals["momentum_integral"]
    r_pt = report.residuals["momentum_point"]
    assert abs(r_int.max_abs - r_pt.max_abs) < 1e-15
    text = render_report(report, ["scenario: synthetic"])
    assert "PASS" in text and "balance residuals" in text


def test_report_needs_enough_samples():
    with pytest.raises(BalanceError):
        build_report(_dummy_samples(n=9)[:3], {})


def test_fit_order_recovers_known_slope():
    vals = [1.0 * 4.0 ** (-i) for i in range(4)]
    assert fit_order(vals) == pytest.approx(2.0, abs=1e-12)
