"""Scenario orchestration: evolve, observe, verify, persist.

A run initializes the packet, steps the evolution, samples observables every
``dump_every`` steps, evaluates both sides of the energy/momentum balance
laws, integrates the classical point-charge comparator over the same window,
and writes trajectory.csv, residuals.csv, report.txt, defaults.txt and
snapshots into the output directory.

Guards (each aborts with the step index and the last good snapshot):
  * wrap guard: the centroid may not drift further than a quarter extent
    from its start on any axis (periodic box, spectral accuracy);
  * instability guard: a step may not grow the state norm by 10x;
  * centroid guard: the net charge may not pass near zero.

Sweeps rerun the scenario with the packet width or the time step halved per
level and append a convergence table to the report.  EHRLAB_THREADS caps how
many sweep members run concurrently (0 = one per CPU, default 1).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import matter
from .config import ScenarioConfig, render_defaults
from .ehrenfest import (
    EhrenfestReport,
    assemble_balance_samples,
    build_report,
    classical_trajectory,
    exchange_rates_integral,
    first_order_correction,
    fit_order,
    rates_point,
    render_report,
)
from .fields import eval_EB, eval_potential, sample_EB
from .grid import Grid
from .matter.state import InstabilityError, MatterState
from .observables import (
    ObservableError,
    TrajectoryRecord,
    centroid,
    dipole_moment,
    energy_momentum,
    total_charge,
    velocity_at,
    velocity_field,
)
from .snapshot import read_snapshot, write_snapshot
from .tables import write_residuals, write_text, write_timeseries

NEG_FREQ_WARN = 0.01


class RunAborted(RuntimeError):
    """A guard tripped; diagnostics and the last good snapshot were written."""

    def __init__(self, reason: str, step: int, snapshot_path=None):
        super().__init__(f"run aborted at step {step}: {reason}")
        self.reason = reason
        self.step = step
        self.snapshot_path = snapshot_path


@dataclass
class RunResult:
    config: ScenarioConfig
    outdir: Path
    records: list
    samples: list
    report: EhrenfestReport
    times: np.ndarray
    xi_series: np.ndarray
    p_series: np.ndarray
    en_series: np.ndarray
    q_series: np.ndarray
    classical: tuple | None
    max_classical_deviation: float | None
    paths: dict
    warnings: list = field(default_factory=list)
    final_state: MatterState | None = None
    convergence: list = field(default_factory=list)


def _initial_state(config: ScenarioConfig, grid: Grid, resume) -> MatterState:
    if resume is not None:
        state = resume if isinstance(resume, MatterState) else read_snapshot(resume)
        if state.model != config.model:
            raise matter.MatterError(
                f"snapshot model {state.model!r} does not match configured "
                f"{config.model!r}")
        if state.grid.spec != grid.spec:
            raise matter.MatterError("snapshot grid does not match the configured grid")
        return state
    if config.model == "proca":
        raise matter.MatterError(
            "Proca states carry no dynamics here: only free plane-wave "
            "snapshots are supported (use the check verb)"
        )
    return matter.init_gaussian(
        config.model, grid, config.mass, config.charge,
        config.center, config.width, config.momentum, config.skew,
    )


def _min_image_distance(a, b, extents, dims):
    out = np.zeros(3)
    for axis in range(dims):
        L = extents[axis]
        out[axis] = (a[axis] - b[axis] + 0.5 * L) % L - 0.5 * L
    return out


def run_scenario(config: ScenarioConfig, outdir=None, resume=None,
                 dump_every: int | None = None, include_sweep: bool = False) -> RunResult:
    """Execute one scenario; returns the in-memory results and file paths."""
    outdir = Path(outdir if outdir is not None else config.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    dump = dump_every if dump_every is not None else config.dump_every
    grid = config.make_grid()
    state = _initial_state(config, grid, resume)
    stepper = matter.make_stepper(state, config.field, config.dt, config.integrator)

    warnings = []
    negfrac = matter.neg_freq_fraction(state)
    if negfrac > NEG_FREQ_WARN:
        warnings.append(
            f"negative-frequency fraction {negfrac:.3e} exceeds {NEG_FREQ_WARN:g}: "
            "the charge-sign interpretation of this trajectory is ambiguous"
        )

    paths = {"defaults": write_text(outdir / "defaults.txt", render_defaults(config))}

    records: list[TrajectoryRecord] = []
    integral_rows = []
    point_rows = []
    corrected_rows = []
    xi0 = None
    last_good = state
    abort = None

    def sample(current_state):
        nonlocal xi0
        t = current_state.t
        cur = matter.four_current(current_state, config.field)
        se = matter.stress_energy(current_state, config.field)
        q = total_charge(cur)
        xi = centroid(cur, charge_scale=config.charge)
        if xi0 is None:
            xi0 = xi.copy()
        drift = _min_image_distance(xi, xi0, grid.spec.extents, grid.dims)
        for axis in range(grid.dims):
            if abs(drift[axis]) > 0.25 * grid.spec.extents[axis]:
                raise ObservableError(
                    f"wrap guard: centroid drifted {drift[axis]:.3g} on axis "
                    f"{axis}, past a quarter extent "
                    f"({0.25 * grid.spec.extents[axis]:.3g})"
                )
        vfield, mask = velocity_field(cur, config.mask_floor)
        v_xi = velocity_at(grid, vfield, mask, xi)
        en, p = energy_momentum(se)
        d = dipole_moment(cur, xi)
        power_int, force_int = exchange_rates_integral(cur, config.field, t)
        power_pt, force_pt = rates_point(xi, v_xi, config.field, t, config.charge)
        corr = first_order_correction(d, v_xi, config.field, xi, t)
        records.append(TrajectoryRecord(
            t=t, xi=tuple(xi), v=tuple(v_xi), p=tuple(p), energy=en, charge=q,
            dipole=tuple(d), neg_freq_fraction=negfrac,
        ))
        integral_rows.append((power_int, force_int))
        point_rows.append((power_pt, force_pt))
        corrected_rows.append(corr)

    snap_paths = []
    try:
        sample(state)
        for n in range(1, config.steps + 1):
            state = stepper(state)
            if n % dump == 0:
                sample(state)
                last_good = state
                if config.snapshot_every and (n % (dump * config.snapshot_every) == 0):
                    snap_paths.append(
                        write_snapshot(state, outdir / f"snapshot_{n:08d}.ehrsnap"))
    except (InstabilityError, ObservableError) as exc:
        last_step = (len(records) - 1) * dump if records else 0
        abort = (str(exc), last_step)
    finally:
        if abort is not None:
            snap = write_snapshot(last_good, outdir / "snapshot_last_good.ehrsnap")
            if records:
                paths["trajectory"] = write_timeseries(records, outdir / "trajectory.csv")
            diag = (
                f"aborted: {abort[0]}\n"
                f"last good sample at step {abort[1]}, t = {last_good.t:.17g}\n"
                f"last good snapshot: {snap}\n"
            )
            paths["diagnostic"] = write_text(outdir / "diagnostic.txt", diag)
            raise RunAborted(abort[0], abort[1], snap)

    times = np.array([r.t for r in records])
    xi_series = np.array([r.xi for r in records])
    p_series = np.array([r.p for r in records])
    en_series = np.array([r.energy for r in records])
    q_series = np.array([r.charge for r in records])

    samples = assemble_balance_samples(
        times, p_series, en_series, integral_rows, point_rows, corrected_rows,
        config.stencil_order,
    )

    classical = None
    max_dev = None
    if config.comparator == "wavenumber":
        p0 = np.asarray(config.momentum, dtype=float)
    else:
        p0 = p_series[0]
    horizon = config.steps * config.dt
    try:
        cl_t, cl_x, cl_p, cl_v = classical_trajectory(
            xi_series[0], p0, config.mass, config.charge, config.field,
            config.dt, horizon, t0=float(times[0]),
        )
        classical = (cl_t, cl_x, cl_p, cl_v)
        sample_idx = [int(round(dtau / config.dt)) for dtau in times - times[0]]
        devs = [
            float(np.linalg.norm(_min_image_distance(
                xi_series[i], cl_x[sample_idx[i]] % _ext3(grid),
                grid.spec.extents, grid.dims)))
            for i in range(len(times))
        ]
        max_dev = max(devs)
    except Exception as exc:  # comparator is advisory; never kills the run
        warnings.append(f"classical comparator unavailable: {exc}")

    notes = list(warnings)
    notes.append(
        "first and last samples use one-sided derivative stencils of matching order"
    )
    if max_dev is not None:
        notes.append(f"max |centroid - classical| over the window: {max_dev:.6e}")
    report = build_report(samples, config.tolerances, notes=notes)

    result = RunResult(
        config=config, outdir=outdir, records=records, samples=samples,
        report=report, times=times, xi_series=xi_series, p_series=p_series,
        en_series=en_series, q_series=q_series, classical=classical,
        max_classical_deviation=max_dev, paths=paths, warnings=warnings,
        final_state=state,
    )

    if include_sweep and config.sweep is not None:
        result.convergence = _run_sweep(config, outdir, result)
        report.convergence = result.convergence

    header = _report_header(config, grid)
    paths["trajectory"] = write_timeseries(records, outdir / "trajectory.csv")
    paths["residuals"] = write_residuals(samples, outdir / "residuals.csv")
    paths["report"] = write_text(outdir / "report.txt", render_report(report, header))
    paths["snapshot_final"] = write_snapshot(state, outdir / "snapshot_final.ehrsnap")
    paths["snapshots"] = snap_paths
    return result


def _ext3(grid: Grid):
    return np.array(list(grid.spec.extents) + [1.0] * (3 - grid.dims))


def _report_header(config: ScenarioConfig, grid: Grid):
    return [
        "energy/momentum balance report",
        f"model = {config.model}, integrator = {config.integrator}, "
        f"stencil order = {config.stencil_order}",
        f"grid: dims = {grid.dims}, points = {grid.shape}, "
        f"extents = {grid.spec.extents}",
        f"field: {config.field.kind}",
        f"dt = {config.dt:g}, steps = {config.steps}, dump_every = {config.dump_every}",
        f"m = {config.mass:g}, e = {config.charge:g}",
        "",
    ]


def _sweep_member_args(config: ScenarioConfig, outdir: Path):
    kind, levels = config.sweep
    members = []
    for level in range(levels):
        factor = 2.0 ** (-level)
        if kind == "width-halving":
            sub = config.with_overrides(
                width=tuple(w * factor for w in config.width), sweep=None)
            label = {"level": level, "width": config.width[0] * factor}
        else:
            scale = 2 ** level
            sub = config.with_overrides(
                dt=config.dt * factor, steps=config.steps * scale,
                dump_every=config.dump_every * scale, sweep=None)
            label = {"level": level, "dt": config.dt * factor}
        members.append((sub, str(outdir / f"sweep_{kind.split('-')[0]}{level}"), label))
    return members


def _run_sweep_member(args):
    sub, subdir, label = args
    res = run_scenario(sub, subdir)
    row = dict(label)
    row["res_P_point_rms"] = res.report.residuals["momentum_point"].rms_rel
    row["res_P_corr_rms"] = res.report.residuals["momentum_corrected"].rms_rel
    row["res_P_int_max"] = res.report.residuals["momentum_integral"].max_rel
    row["res_E_int_max"] = res.report.residuals["energy_integral"].max_rel
    if res.max_classical_deviation is not None:
        row["max_dev_classical"] = res.max_classical_deviation
    return row


def _worker_count(n_members: int) -> int:
    raw = os.environ.get("EHRLAB_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        workers = 1
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_members))


def _run_sweep(config: ScenarioConfig, outdir: Path, base: RunResult):
    members = _sweep_member_args(config, outdir)
    workers = _worker_count(len(members))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_sweep_member, members))
    else:
        rows = [_run_sweep_member(m) for m in members]
    for key in ("res_P_corr_rms", "res_P_point_rms", "max_dev_classical"):
        series = [row[key] for row in rows if key in row]
        if len(series) == len(rows) and all(v > 0 for v in series):
            order = fit_order(series)
            for row in rows:
                row[f"order_{key}"] = order
    return rows


def sweep_scenario(config: ScenarioConfig, outdir=None) -> RunResult:
    """Run the configured convergence sweep (requires a sweep in [check])."""
    if config.sweep is None:
        raise ValueError("no sweep configured: set sweep = width-halving(N) "
                         "or dt-halving(N) in [check]")
    return run_scenario(config, outdir, include_sweep=True)


def measure_continuity(config: ScenarioConfig, probe_steps=(4, 8, 12)) -> float:
    """Max discrete continuity residual |d_t rho + div j| / ||div j|| at probes.

    d_t rho is the central difference of the sampled charge density over one
    step; div j is spectral.  The residual converges at the integrator's
    temporal order as dt -> 0.
    """
    grid = config.make_grid()
    state = _initial_state(config, grid, None)
    stepper = matter.make_stepper(state, config.field, config.dt, config.integrator)
    needed = set()
    for p in probe_steps:
        needed.update((p - 1, p, p + 1))
    last = max(needed)
    states = {0: state}
    for n in range(1, last + 1):
        state = stepper(state)
        if n in needed:
            states[n] = state
    worst = 0.0
    for p in probe_steps:
        rho_m = matter.four_current(states[p - 1], config.field).rho
        cur = matter.four_current(states[p], config.field)
        rho_p = matter.four_current(states[p + 1], config.field).rho
        drho = (rho_p - rho_m) / (2 * config.dt)
        div = np.zeros(grid.shape)
        for d in range(grid.dims):
            div = div + grid.deriv_values(cur.j[d].astype(complex), d).real
        resid = float(np.sqrt(grid.integrate_values((drho + div) ** 2)))
        scale = float(np.sqrt(grid.integrate_values(div**2)))
        worst = max(worst, resid / scale if scale > 0 else resid)
    return worst


def check_scenario(config: ScenarioConfig):
    """Fast invariant suite (no full run): grid, field, and state checks.

    Returns a list of (name, passed, detail) rows.
    """
    rows = []

    def add(name, passed, detail=""):
        rows.append((name, bool(passed), detail))

    grid = config.make_grid()

    rng = np.random.default_rng(0)
    f = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    direct = float(np.sum(np.abs(f) ** 2) * grid.cell_volume)
    via_k = float((np.abs(grid.fft(f)) ** 2).sum() / f.size * grid.cell_volume)
    add("grid parseval", abs(direct - via_k) / direct < 1e-12,
        f"relative defect {abs(direct - via_k) / direct:.2e}")

    k0 = grid.wavenumbers[0][1]
    wave = np.exp(1j * k0 * grid.coords(0)) * np.ones(grid.shape)
    dwave = grid.deriv_values(wave, 0)
    defect = float(np.max(np.abs(dwave - 1j * k0 * wave)))
    add("grid spectral derivative", defect < 1e-12, f"max defect {defect:.2e}")

    worst = 0.0
    h = 1e-4
    for _ in range(4):
        x = np.array([rng.uniform(0, ext) for ext in grid.spec.extents]
                     + [0.0] * (3 - grid.dims))
        t = rng.uniform(0.0, 1.0)
        e_ref, b_ref = eval_EB(config.field, x, t)
        a0p, ap = eval_potential(config.field, x, t + h)
        a0m, am = eval_potential(config.field, x, t - h)
        e_num = -(ap - am) / (2 * h)
        jac = np.zeros((3, 3))
        grad0 = np.zeros(3)
        for i in range(3):
            dx = np.zeros(3)
            dx[i] = h
            a0p, ap = eval_potential(config.field, x + dx, t)
            a0m, am = eval_potential(config.field, x - dx, t)
            grad0[i] = (a0p - a0m) / (2 * h)
            jac[i] = (ap - am) / (2 * h)
        e_num = e_num - grad0
        b_num = np.array([jac[1, 2] - jac[2, 1], jac[2, 0] - jac[0, 2],
                          jac[0, 1] - jac[1, 0]])
        scale = max(1.0, float(np.abs(e_ref).max()), float(np.abs(b_ref).max()))
        worst = max(worst, float(np.abs(e_num - e_ref).max()) / scale,
                    float(np.abs(b_num - b_ref).max()) / scale)
    add("field gauge consistency", worst < 1e-6,
        f"max potential-vs-field defect {worst:.2e}")

    if config.field.kind == "plane_wave":
        E, _ = sample_EB(config.field, grid, 0.37)
        div_e = np.zeros(grid.shape)
        for a in range(grid.dims):
            div_e = div_e + grid.deriv_values(
                np.broadcast_to(E[a], grid.shape).astype(complex), a).real
        add("plane wave div E = 0", float(np.max(np.abs(div_e))) < 1e-10,
            f"max |div E| = {np.max(np.abs(div_e)):.2e}")

    if config.model in ("kg", "dirac"):
        from .config import stability_bound
        bound = stability_bound(config, grid)
        add("dt stability bound", config.dt < bound,
            f"dt = {config.dt:g} < {bound:.4g}")
        state = _initial_state(config, grid, None)
        q = total_charge(matter.four_current(state, config.field))
        add("initial charge normalization",
            abs(q - config.charge) < 1e-10 * abs(config.charge),
            f"Q = {q:.12g}, e = {config.charge:g}")
        frac = matter.neg_freq_fraction(state)
        add("negative-frequency fraction", frac < NEG_FREQ_WARN, f"{frac:.3e}")
    else:
        state = matter.proca_plane_wave(
            grid, config.mass, config.charge, config.proca_k, config.proca_pol)
        div4 = matter.proca_four_divergence(state, config.proca_k)
        add("proca four-divergence", div4 < 1e-10, f"max = {div4:.2e}")
        div_j, div_t = matter.proca_conservation_residuals(state, config.proca_k)
        add("proca charge conservation", div_j < 1e-8, f"max |div j| = {div_j:.2e}")
        add("proca energy conservation", div_t < 1e-8,
            f"max |d_i T^i0| = {div_t:.2e}")
    return rows
