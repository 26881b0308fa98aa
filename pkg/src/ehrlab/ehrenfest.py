"""Force/power balance verification and the classical comparator.

Both sides of the balance laws are computed from independent code paths:
the left sides are numerical time derivatives of the sampled energy and
momentum series (central stencils of order 2 or 4), the right sides are
field integrals over the sampled current,

    power  = int j.E dV,            force = int (rho E + j x B) dV,

their point-Lorentz approximations at the packet centroid,

    power ~ e v.E(xi),              force ~ e (E(xi) + v x B(xi)),

and the dipole refinement of the point force,

    dF_j = d_i (d/dx_i)(E + v x B)_j |_(x -> xi),   v held at v(xi),

with the field gradients taken from closed forms (the external field is
analytic; grid differencing would only add noise to the smallest term).
``d`` is the charge-weighted first moment about xi, so no additional factor
of e appears: expanding the force integral to first order about any point c
gives exactly Q E(c) + (d(c).grad) E, which for an affine field is the exact
integral for every choice of c.

The comparator integrates the relativistic point-particle equations
dp/dt = e (E + v x B), v = p/sqrt(p^2 + m^2) with RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import eval_EB, sample_EB
from .matter.state import FourCurrent


class BalanceError(ValueError):
    """Ill-posed balance computation (bad series length, step size, ...)."""


def exchange_rates_integral(cur: FourCurrent, field_config, t: float):
    """(power, force) exchanged with the field, as volume integrals.

    Formulated directly in terms of the current density j = e rho v, so the
    masked velocity division never enters.
    """
    grid = cur.grid
    E, B = sample_EB(field_config, grid, t)
    E = [np.broadcast_to(np.asarray(c, float), grid.shape) for c in E]
    B = [np.broadcast_to(np.asarray(c, float), grid.shape) for c in B]
    j = cur.j
    power = float(grid.integrate_values(j[0] * E[0] + j[1] * E[1] + j[2] * E[2]))
    jxb = (
        j[1] * B[2] - j[2] * B[1],
        j[2] * B[0] - j[0] * B[2],
        j[0] * B[1] - j[1] * B[0],
    )
    force = np.array(
        [float(grid.integrate_values(cur.rho * E[d] + jxb[d])) for d in range(3)]
    )
    return power, force


def rates_point(xi, v_at_xi, field_config, t: float, charge: float):
    """(power, force) of a point charge e at the centroid: e v.E, e (E + v x B)."""
    E, B = eval_EB(field_config, xi, t)
    v = np.asarray(v_at_xi, dtype=float)
    power = charge * float(v @ E)
    force = charge * (E + np.cross(v, B))
    return power, force


def first_order_correction(d, v_at_xi, field_config, xi, t: float):
    """Dipole refinement of the point force: (d.grad)(E + v x B) at xi.

    ``d`` is the charge-weighted first moment about xi (dipole_moment), so
    the charge factor is already inside; v is frozen at the centroid value.
    """
    dE, dB = field_config.gradients(np.asarray(xi, float), t)
    d = np.asarray(d, dtype=float)
    v = np.asarray(v_at_xi, dtype=float)
    out = np.zeros(3)
    for i in range(3):
        if d[i] == 0.0:
            continue
        out += d[i] * (dE[i] + np.cross(v, dB[i]))
    return out


_CENTRAL = {
    2: (np.array([-0.5, 0.0, 0.5]), 1),
    4: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 2),
}
# one-sided / offset stencils of matching order for the edges
_EDGE = {
    2: {0: np.array([-1.5, 2.0, -0.5])},
    4: {
        0: np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
        1: np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
    },
}


def numeric_time_derivative(series, dt: float, stencil_order: int = 4):
    """Time derivative of uniformly sampled data; central stencils inside,
    one-sided stencils of the same order at the ends.

    ``series`` is (T,) or (T, k); returns (derivative, edge_flags) where
    edge_flags marks the rows that used one-sided stencils.
    """
    if stencil_order not in _CENTRAL:
        raise BalanceError(f"stencil order must be 2 or 4, not {stencil_order}")
    if not dt > 0:
        raise BalanceError("sample spacing must be positive")
    arr = np.asarray(series, dtype=float)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    nt = arr.shape[0]
    coeffs, half = _CENTRAL[stencil_order]
    if nt < stencil_order + 1:
        raise BalanceError(
            f"need at least {stencil_order + 1} samples for order {stencil_order}"
        )
    out = np.zeros_like(arr)
    flags = np.zeros(nt, dtype=bool)
    for i in range(nt):
        if half <= i < nt - half:
            window = arr[i - half: i + half + 1]
            out[i] = (coeffs[:, None] * window).sum(axis=0) / dt
        else:
            offset = i if i < half else nt - 1 - i
            stencil = _EDGE[stencil_order][offset]
            if i < half:
                window = arr[i - offset: i - offset + stencil.size]
                out[i] = (stencil[:, None] * window).sum(axis=0) / dt
            else:
                window = arr[i + offset - stencil.size + 1: i + offset + 1]
                out[i] = -(stencil[::-1, None] * window).sum(axis=0) / dt
            flags[i] = True
    return (out[:, 0] if squeeze else out), flags


def classical_trajectory(x0, p0, mass: float, charge: float, field_config,
                         dt: float, horizon: float, t0: float = 0.0):
    """Relativistic point-charge trajectory under the configured field.

    Integrates dx/dt = v, dp/dt = e (E + v x B), v = p/sqrt(p^2 + m^2)
    with classical RK4 starting at time t0.  Returns (t, x, p, v) arrays
    with one row per step; times are offsets from t0.
    """
    x0 = np.asarray(x0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    _, B0 = eval_EB(field_config, x0, t0)
    bmag = float(np.linalg.norm(B0))
    if dt * abs(charge) * bmag / mass >= 0.05:
        raise BalanceError(
            "comparator step too large: dt |e| |B| / m must stay below 0.05"
        )

    def vel(p):
        return p / np.sqrt(p @ p + mass * mass)

    def rhs(x, p, t):
        E, B = eval_EB(field_config, x, t0 + t)
        v = vel(p)
        return v, charge * (E + np.cross(v, B))

    steps = int(round(horizon / dt))
    times = np.zeros(steps + 1)
    xs = np.zeros((steps + 1, 3))
    ps = np.zeros((steps + 1, 3))
    xs[0], ps[0] = x0, p0
    x, p, t = x0.copy(), p0.copy(), 0.0
    for n in range(steps):
        k1x, k1p = rhs(x, p, t)
        k2x, k2p = rhs(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, t + 0.5 * dt)
        k3x, k3p = rhs(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, t + 0.5 * dt)
        k4x, k4p = rhs(x + dt * k3x, p + dt * k3p, t + dt)
        x = x + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + (dt / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        t = (n + 1) * dt
        times[n + 1], xs[n + 1], ps[n + 1] = t, x, p
    vs = ps / np.sqrt((ps**2).sum(axis=1) + mass * mass)[:, None]
    return times, xs, ps, vs


@dataclass(frozen=True)
class BalanceSample:
    """Both sides of the energy/momentum balance laws at one sample time."""

    t: float
    dp_dt_numeric: np.ndarray
    den_dt_numeric: float
    force_integral: np.ndarray
    power_integral: float
    force_point: np.ndarray
    power_point: float
    force_corrected: np.ndarray
    edge_stencil: bool


@dataclass
class ResidualNorm:
    """Max/RMS of |lhs - rhs| over the sampled times, scaled by max |rhs|."""

    name: str
    max_abs: float
    rms_abs: float
    scale: float

    @property
    def max_rel(self):
        return self.max_abs / self.scale if self.scale > 0 else self.max_abs

    @property
    def rms_rel(self):
        return self.rms_abs / self.scale if self.scale > 0 else self.rms_abs


@dataclass
class EhrenfestReport:
    """Residual norms per balance equation plus pass/fail and sweep tables."""

    residuals: dict[str, ResidualNorm]
    tolerances: dict[str, float]
    passed: dict[str, bool]
    all_passed: bool
    notes: list[str] = field(default_factory=list)
    convergence: list[dict] = field(default_factory=list)


def assemble_balance_samples(times, p_series, en_series, integral_rows,
                             point_rows, corrected_rows, stencil_order=4):
    """Join the derivative series with the per-sample force/power evaluations."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise BalanceError("need at least two samples to form time derivatives")
    spacing = np.diff(times)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12):
        raise BalanceError("balance samples must be uniformly spaced in time")
    dp_dt, flags = numeric_time_derivative(np.asarray(p_series), spacing[0], stencil_order)
    den_dt, _ = numeric_time_derivative(np.asarray(en_series), spacing[0], stencil_order)
    samples = []
    for i, t in enumerate(times):
        power_int, force_int = integral_rows[i]
        power_pt, force_pt = point_rows[i]
        force_corr = corrected_rows[i]
        samples.append(BalanceSample(
            t=float(t),
            dp_dt_numeric=dp_dt[i],
            den_dt_numeric=float(den_dt[i]),
            force_integral=np.asarray(force_int, float),
            power_integral=float(power_int),
            force_point=np.asarray(force_pt, float),
            power_point=float(power_pt),
            force_corrected=np.asarray(force_corr, float),
            edge_stencil=bool(flags[i]),
        ))
    return samples


def _norm_rows(lhs, rhs, name):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.ndim == 1:
        diff = np.abs(lhs - rhs)
        scale = float(np.max(np.abs(rhs)))
    else:
        diff = np.linalg.norm(lhs - rhs, axis=1)
        scale = float(np.max(np.linalg.norm(rhs, axis=1)))
    return ResidualNorm(
        name=name,
        max_abs=float(np.max(diff)),
        rms_abs=float(np.sqrt(np.mean(diff**2))),
        scale=scale,
    )


RESIDUAL_KEYS = ("energy_integral", "momentum_integral", "momentum_point",
                 "momentum_corrected")


def build_report(samples, tolerances, notes=(), convergence=()):
    """Residual norms of the four balance comparisons, gated by tolerances.

    ``tolerances`` maps the RESIDUAL_KEYS to relative tolerances; pass/fail
    uses the max residual scaled by max |rhs| (falling back to the absolute
    residual when the rhs is identically zero, e.g. free evolution).
    """
    if len(samples) < 5:
        raise BalanceError("need at least five balance samples for a report")
    den = np.array([s.den_dt_numeric for s in samples])
    dp = np.stack([s.dp_dt_numeric for s in samples])
    residuals = {
        "energy_integral": _norm_rows(den, [s.power_integral for s in samples],
                                      "d(En)/dt vs power integral"),
        "momentum_integral": _norm_rows(dp, [s.force_integral for s in samples],
                                        "dP/dt vs force integral"),
        "momentum_point": _norm_rows(dp, [s.force_point for s in samples],
                                     "dP/dt vs point Lorentz force"),
        "momentum_corrected": _norm_rows(
            dp, [s.force_point + s.force_corrected for s in samples],
            "dP/dt vs dipole-corrected point force"),
    }
    passed = {}
    for key in RESIDUAL_KEYS:
        tol = tolerances.get(key)
        if tol is None:
            continue
        passed[key] = residuals[key].max_rel <= tol
    report = EhrenfestReport(
        residuals=residuals,
        tolerances=dict(tolerances),
        passed=passed,
        all_passed=all(passed.values()) if passed else True,
        notes=list(notes),
        convergence=list(convergence),
    )
    return report


def fit_order(values, factor: float = 2.0):
    """Least-squares convergence order from a halving (or ``factor``) ladder.

    values[i] is the residual at refinement level i (parameter shrinking by
    ``factor`` per level); returns the fitted slope of log(residual) against
    level, i.e. the empirical order.
    """
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0):
        return float("nan")
    levels = np.arange(vals.size)
    slope = np.polyfit(levels, np.log(vals) / np.log(factor), 1)[0]
    return float(-slope)


def render_report(report: EhrenfestReport, header_lines=()) -> str:
    """Human-readable report body (written to report.txt)."""
    lines = []
    lines.extend(header_lines)
    lines.append("balance residuals (scaled by max |rhs| over the run):")
    for key in RESIDUAL_KEYS:
        r = report.residuals[key]
        tol = report.tolerances.get(key)
        verdict = ""
        if key in report.passed:
            verdict = "PASS" if report.passed[key] else "FAIL"
        lines.append(
            f"  {key:20s} max {r.max_rel:.6e}  rms {r.rms_rel:.6e}  "
            f"(abs max {r.max_abs:.6e}, scale {r.scale:.6e})"
            + (f"  tol {tol:g} {verdict}" if tol is not None else "")
        )
    if report.convergence:
        lines.append("")
        lines.append("convergence table:")
        keys: list[str] = []
        for row in report.convergence:
            keys.extend(k for k in row if k not in keys)
        lines.append("  " + "  ".join(f"{k:>18s}" for k in keys))
        for row in report.convergence:
            lines.append("  " + "  ".join(
                f"{row[k]:>18.10g}" if k in row else " " * 18 for k in keys))
    if report.notes:
        lines.append("")
        for note in report.notes:
            lines.append(f"note: {note}")
    lines.append("")
    lines.append("overall: " + ("PASS" if report.all_passed else "FAIL"))
    return "\n".join(lines) + "\n"
