"""Runner orchestration, guards, reproducibility, and the CLI surface."""

import subprocess
import sys

import numpy as np
import pytest

from ehrlab.config import parse_config
from ehrlab.runner import RunAborted, check_scenario, measure_continuity, run_scenario, sweep_scenario
from ehrlab.snapshot import read_snapshot

FREE_1D = """
[grid]
dims = 1
points = 256
extent = 40

[field]
kind = zero

[matter]
model = dirac
m = 1.0
e = 1.0
width = 0.5
momentum = 0.5, 0, 0

[evolution]
dt = 0.001
steps = {steps}
dump_every = 10
"""

UNIFORM_E_1D = FREE_1D.replace("kind = zero", "kind = uniform_e\nE0 = 0.02, 0, 0")


def test_zero_field_run_constant_momentum(tmp_path):
    cfg = parse_config(FREE_1D.format(steps=400))
    res = run_scenario(cfg, outdir=tmp_path / "out")
    drift = np.max(np.abs(res.p_series - res.p_series[0]))
    assert drift < 1e-10
    assert res.report.all_passed
    for name in ("trajectory.csv", "residuals.csv", "report.txt",
                 "defaults.txt", "snapshot_final.ehrsnap"):
        assert (tmp_path / "out" / name).exists()


def test_uniform_e_momentum_slope(tmp_path):
    cfg = parse_config(UNIFORM_E_1D.format(steps=600))
    res = run_scenario(cfg, outdir=tmp_path / "out")
    slope = np.polyfit(res.times, res.p_series[:, 0], 1)[0]
    assert slope == pytest.approx(0.02, rel=1e-4)
    assert res.report.all_passed


def test_wrap_guard_aborts_with_snapshot(tmp_path):
    text = """
[grid]
dims = 1
points = 64
extent = 16

[field]
kind = zero

[matter]
model = dirac
m = 1.0
e = 1.0
width = 0.6
momentum = 2.0, 0, 0

[evolution]
dt = 0.004
steps = 2000
dump_every = 25
"""
    cfg = parse_config(text)
    with pytest.raises(RunAborted, match="wrap guard"):
        run_scenario(cfg, outdir=tmp_path / "out")
    assert (tmp_path / "out" / "snapshot_last_good.ehrsnap").exists()
    assert (tmp_path / "out" / "diagnostic.txt").exists()
    snap = read_snapshot(tmp_path / "out" / "snapshot_last_good.ehrsnap")
    assert snap.model == "dirac"


def test_determinism_bit_identical_outputs(tmp_path):
    cfg = parse_config(UNIFORM_E_1D.format(steps=200))
    run_scenario(cfg, outdir=tmp_path / "a")
    run_scenario(cfg, outdir=tmp_path / "b")
    for name in ("trajectory.csv", "residuals.csv", "snapshot_final.ehrsnap"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_resume_equivalence(tmp_path):
    full = parse_config(UNIFORM_E_1D.format(steps=400))
    half = full.with_overrides(steps=200)
    res_full = run_scenario(full, outdir=tmp_path / "full")
    run_scenario(half, outdir=tmp_path / "h1")
    res_resumed = run_scenario(
        half, outdir=tmp_path / "h2",
        resume=tmp_path / "h1" / "snapshot_final.ehrsnap",
    )
    joined_p = res_resumed.p_series
    tail_p = res_full.p_series[20:]
    assert joined_p.shape == tail_p.shape
    scale = np.max(np.abs(res_full.p_series))
    assert np.max(np.abs(joined_p - tail_p)) < 1e-13 * scale
    final_full = read_snapshot(tmp_path / "full" / "snapshot_final.ehrsnap")
    final_resumed = read_snapshot(tmp_path / "h2" / "snapshot_final.ehrsnap")
    assert np.array_equal(final_full.components, final_resumed.components)


def test_dump_every_override(tmp_path):
    cfg = parse_config(FREE_1D.format(steps=100))
    res = run_scenario(cfg, outdir=tmp_path / "out", dump_every=25)
    assert len(res.records) == 5


def test_width_sweep_produces_convergence_table(tmp_path):
    cfg = parse_config(
        UNIFORM_E_1D.format(steps=200) + "\n[check]\nsweep = width-halving(3)\n")
    res = sweep_scenario(cfg, outdir=tmp_path / "out")
    assert len(res.convergence) == 3
    assert all("width" in row for row in res.convergence)
    report_text = (tmp_path / "out" / "report.txt").read_text()
    assert "convergence table" in report_text
    for level in range(3):
        assert (tmp_path / "out" / f"sweep_width{level}" / "trajectory.csv").exists()


def test_sweep_requires_sweep_key(tmp_path):
    cfg = parse_config(FREE_1D.format(steps=100))
    with pytest.raises(ValueError, match="no sweep configured"):
        sweep_scenario(cfg, outdir=tmp_path / "out")


def test_parallel_sweep_matches_sequential(tmp_path, monkeypatch):
    text = UNIFORM_E_1D.format(steps=100) + "\n[check]\nsweep = width-halving(2)\n"
    cfg = parse_config(text)
    monkeypatch.delenv("EHRLAB_THREADS", raising=False)
    seq = sweep_scenario(cfg, outdir=tmp_path / "seq")
    monkeypatch.setenv("EHRLAB_THREADS", "2")
    par = sweep_scenario(cfg, outdir=tmp_path / "par")
    assert len(seq.convergence) == len(par.convergence) == 2
    for a, b in zip(seq.convergence, par.convergence):
        assert a == b
    for level in range(2):
        assert ((tmp_path / "seq" / f"sweep_width{level}" / "trajectory.csv").read_bytes()
                == (tmp_path / "par" / f"sweep_width{level}" / "trajectory.csv").read_bytes())


def test_measure_continuity_shrinks_with_dt():
    base = parse_config(UNIFORM_E_1D.format(steps=40))
    r1 = measure_continuity(base)
    r2 = measure_continuity(base.with_overrides(dt=base.dt / 2))
    assert r2 < r1


GRADIENT_1D = """
[grid]
dims = 1
points = 256
extent = 40

[field]
kind = linear_gradient_e
E0 = 0.05, 0, 0
G = 0.01, 0, 0, 0, -0.01, 0, 0, 0, 0

[matter]
model = {model}
m = 1.0
e = 1.0
width = 1.0
momentum = 0.4, 0, 0

[evolution]
dt = {dt}
steps = {steps}
dump_every = 10
"""


@pytest.mark.parametrize("model", ["dirac", "kg"])
def test_integral_balance_converges_with_dt(model, tmp_path):
    # dP/dt vs force integral: the residual vanishes at the combined order
    # of the integrator and the derivative stencil (slope >= 2 over a
    # dt-halving ladder at fixed horizon).
    from ehrlab.ehrenfest import fit_order

    resids = []
    for level in range(4):
        dt = 8e-3 / 2**level
        steps = int(round(1.6 / dt))
        cfg = parse_config(GRADIENT_1D.format(model=model, dt=dt, steps=steps))
        res = run_scenario(cfg, outdir=tmp_path / f"{model}{level}")
        resids.append(res.report.residuals["momentum_integral"].max_rel)
    slope = fit_order(resids)
    assert slope >= 2.0, f"{model}: residuals {resids}, slope {slope}"


def test_check_scenario_passes_for_sane_config():
    cfg = parse_config(UNIFORM_E_1D.format(steps=100))
    rows = check_scenario(cfg)
    assert rows and all(passed for _, passed, _ in rows)


def test_check_scenario_proca():
    text = """
[grid]
dims = 1
points = 128
extent = 40

[field]
kind = zero

[matter]
model = proca
m = 1.0
e = 1.0
k = 0.15707963267948966, 0, 0
polarization = 0, 0, 1, 0

[evolution]
dt = 0.001
steps = 1
"""
    rows = check_scenario(parse_config(text))
    names = [name for name, _, _ in rows]
    assert any("proca" in n for n in names)
    assert all(passed for _, passed, _ in rows)


def _cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "ehrlab", *args],
        capture_output=True, text=True, cwd=cwd,
    )


def test_cli_run_check_sweep(tmp_path):
    cfg_path = tmp_path / "scenario.cfg"
    cfg_path.write_text(FREE_1D.format(steps=100))
    out = _cli(["run", str(cfg_path), "--out", str(tmp_path / "run_out")], tmp_path)
    assert out.returncode == 0, out.stderr
    assert "PASS" in out.stdout
    assert (tmp_path / "run_out" / "trajectory.csv").exists()

    out = _cli(["check", str(cfg_path)], tmp_path)
    assert out.returncode == 0, out.stderr
    assert "PASS" in out.stdout

    sweep_path = tmp_path / "sweep.cfg"
    sweep_path.write_text(FREE_1D.format(steps=100) + "\n[check]\nsweep = dt-halving(2)\n")
    out = _cli(["sweep", str(sweep_path), "--out", str(tmp_path / "sweep_out")], tmp_path)
    assert out.returncode == 0, out.stderr


def test_cli_error_paths(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text(FREE_1D.format(steps=100).replace("dt = 0.001", "dt = -1"))
    out = _cli(["run", str(bad)], tmp_path)
    assert out.returncode == 2
    assert "error:" in out.stderr
