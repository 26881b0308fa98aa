"""Scenario configuration: line-oriented config grammar and validation.

Grammar: ``[section]`` headers, ``key = value`` pairs, ``#`` comments,
vectors as comma-separated tuples.  Unknown sections or keys are rejected,
errors carry line numbers.  Physics parameters (m, e, dt, steps) have no
defaults and must be explicit; every other omitted key gets a documented
default, recorded so the runner can emit a defaults.txt.

The static-gauge field families are anchored at the box center by default
(key ``origin`` overrides): on a torus there is no canonical origin, and
centering keeps the potential's wrap discontinuity far away from the packet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    FieldConfigError,
    LinearGradientE,
    PlaneWave,
    UniformB,
    UniformE,
    ZeroField,
    sample_potential,
)
from .grid import Grid, GridSpec, GridError, make_grid


class ConfigError(ValueError):
    """Malformed or out-of-range scenario configuration."""


_SECTIONS = {
    "grid": {"dims", "points", "extent"},
    "field": {"kind", "E0", "B0", "G", "amplitude", "k", "pol", "origin"},
    "matter": {"model", "m", "e", "center", "width", "momentum", "skew",
               "k", "polarization"},
    "evolution": {"dt", "steps", "dump_every", "integrator"},
    "check": {"stencil_order", "tol_energy_integral", "tol_momentum_integral",
              "tol_momentum_point", "tol_momentum_corrected", "sweep",
              "comparator", "mask_floor"},
    "output": {"directory", "snapshot_every"},
}

_REQUIRED = {
    ("grid", "dims"), ("grid", "points"), ("grid", "extent"),
    ("field", "kind"), ("matter", "model"), ("matter", "m"), ("matter", "e"),
    ("evolution", "dt"), ("evolution", "steps"),
}

TOLERANCE_KEYS = {
    "tol_energy_integral": "energy_integral",
    "tol_momentum_integral": "momentum_integral",
    "tol_momentum_point": "momentum_point",
    "tol_momentum_corrected": "momentum_corrected",
}


def _tokenize(text: str):
    """Yield (line_number, section, key, value) entries."""
    section = None
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTIONS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        entries.append((lineno, section, key, value))
    return entries


class _Lookup:
    def __init__(self, entries):
        self.data = {}
        for lineno, section, key, value in entries:
            if (section, key) in self.data:
                raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
            self.data[(section, key)] = (lineno, value)
        self.defaults_used: list[str] = []

    def has(self, section, key):
        return (section, key) in self.data

    def raw(self, section, key):
        return self.data[(section, key)]

    def get(self, section, key, conv, default=None, required=False):
        if (section, key) not in self.data:
            if required:
                raise ConfigError(f"missing required key {key!r} in [{section}]")
            self.defaults_used.append(f"[{section}] {key} = {_fmt_default(default)}")
            return default
        lineno, value = self.data[(section, key)]
        try:
            return conv(value)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    def error(self, section, key, message):
        lineno, _ = self.data.get((section, key), (0, ""))
        where = f"line {lineno}: " if lineno else ""
        raise ConfigError(f"{where}{message}")


def _fmt_default(value):
    if value is None:
        return "(none)"
    if isinstance(value, (tuple, list)):
        return ", ".join(f"{v:g}" if isinstance(v, float) else str(v) for v in value)
    return f"{value:g}" if isinstance(value, float) else str(value)


def _floats(text, count=None):
    parts = [p.strip() for p in text.split(",")]
    vals = tuple(float(p) for p in parts)
    if count is not None and len(vals) != count:
        raise ValueError(f"expected {count} comma-separated values, got {len(vals)}")
    return vals


def _ints(text):
    return tuple(int(p.strip()) for p in text.split(","))


def _positive(name):
    def conv(text):
        v = float(text)
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
        return v
    return conv


def _sweep(text):
    t = text.strip().lower()
    if t == "none":
        return None
    for tag in ("width-halving", "dt-halving"):
        if t.startswith(tag + "(") and t.endswith(")"):
            levels = int(t[len(tag) + 1:-1])
            if levels < 2:
                raise ValueError("sweep needs at least 2 levels")
            return (tag, levels)
    raise ValueError(f"sweep must be none, width-halving(N) or dt-halving(N), got {text!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    grid_spec: GridSpec
    field: object
    model: str
    mass: float
    charge: float
    center: tuple
    width: tuple | None
    momentum: tuple
    skew: float
    proca_k: tuple | None
    proca_pol: tuple | None
    dt: float
    steps: int
    dump_every: int
    integrator: str
    stencil_order: int
    tolerances: dict
    sweep: tuple | None
    comparator: str
    mask_floor: float
    out_dir: str
    snapshot_every: int
    defaults_used: tuple

    def make_grid(self) -> Grid:
        return make_grid(self.grid_spec)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        from dataclasses import replace
        return replace(self, **kw)


def _build_field(lk: _Lookup, grid: Grid):
    kind = lk.get("field", "kind", str, required=True).strip().lower()
    box_center = tuple(
        0.5 * ext if a < grid.dims else 0.0
        for a, ext in enumerate(list(grid.spec.extents) + [0.0, 0.0])
    )[:3]
    origin = lk.get("field", "origin", lambda s: _floats(s, 3), default=box_center)
    try:
        if kind == "zero":
            return ZeroField()
        if kind == "uniform_e":
            e0 = lk.get("field", "E0", lambda s: _floats(s, 3), required=True)
            return UniformE(e0, origin)
        if kind == "uniform_b":
            b0 = lk.get("field", "B0", lambda s: _floats(s, 3), required=True)
            return UniformB(b0, origin)
        if kind == "linear_gradient_e":
            e0 = lk.get("field", "E0", lambda s: _floats(s, 3), required=True)
            g9 = lk.get("field", "G", lambda s: _floats(s, 9), required=True)
            gmat = (g9[0:3], g9[3:6], g9[6:9])
            return LinearGradientE(e0, gmat, origin)
        if kind == "plane_wave":
            amp = lk.get("field", "amplitude", float, required=True)
            k = lk.get("field", "k", lambda s: _floats(s, 3), required=True)
            pol = lk.get("field", "pol", lambda s: _floats(s, 3), required=True)
            return PlaneWave(amp, k, pol)
    except FieldConfigError as exc:
        raise ConfigError(f"[field] {exc}") from exc
    raise ConfigError(f"unknown field kind {kind!r}")


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario; raises ConfigError with line context."""
    lk = _Lookup(_tokenize(text))

    dims = lk.get("grid", "dims", int, required=True)
    points = lk.get("grid", "points", _ints, required=True)
    extent = lk.get("grid", "extent", _floats, required=True)
    if len(points) == 1:
        points = points * dims
    if len(extent) == 1:
        extent = extent * dims
    try:
        grid_spec = GridSpec(dims, points, extent)
    except GridError as exc:
        raise ConfigError(f"[grid] {exc}") from exc
    grid = make_grid(grid_spec)

    field = _build_field(lk, grid)
    try:
        field.validate_for_dims(dims)
        if isinstance(field, PlaneWave):
            field.validate_for_grid(grid)
    except FieldConfigError as exc:
        raise ConfigError(f"[field] {exc}") from exc

    model = lk.get("matter", "model", str, required=True).strip().lower()
    if model not in ("kg", "dirac", "proca"):
        lk.error("matter", "model", f"unknown matter model {model!r}")
    mass = lk.get("matter", "m", _positive("m"), required=True)
    charge = lk.get("matter", "e", float, required=True)
    if charge == 0:
        lk.error("matter", "e", "charge coupling e must be nonzero")

    box_center = tuple(0.5 * ext for ext in extent) + (0.0,) * (3 - dims)
    center = lk.get("matter", "center", lambda s: _floats(s, 3), default=box_center)
    momentum = lk.get("matter", "momentum", lambda s: _floats(s, 3), default=(0.0, 0.0, 0.0))
    skew = lk.get("matter", "skew", float, default=0.0)
    width = None
    proca_k = None
    proca_pol = None
    if model in ("kg", "dirac"):
        if not lk.has("matter", "width"):
            raise ConfigError("missing required key 'width' in [matter] for kg/dirac")
        wraw = lk.get("matter", "width", _floats, required=True)
        width = wraw * 3 if len(wraw) == 1 else wraw
        if len(width) != 3:
            lk.error("matter", "width", "width needs 1 or 3 comma-separated values")
    else:
        proca_k = lk.get("matter", "k", lambda s: _floats(s, 3), required=True)
        proca_pol = lk.get("matter", "polarization", lambda s: _floats(s, 4), required=True)

    dt = lk.get("evolution", "dt", _positive("dt"), required=True)
    steps = lk.get("evolution", "steps", int, required=True)
    if steps <= 0:
        lk.error("evolution", "steps", f"steps must be positive, got {steps}")
    dump_every = lk.get("evolution", "dump_every", int, default=10)
    if dump_every < 1:
        lk.error("evolution", "dump_every", "dump_every must be >= 1")
    integrator = lk.get("evolution", "integrator", str, default="split").strip().lower()
    if integrator not in ("split", "krylov"):
        lk.error("evolution", "integrator", "integrator must be split or krylov")
    if integrator == "krylov" and model != "dirac":
        lk.error("evolution", "integrator",
                 "the krylov integrator is available for dirac states only")

    stencil_order = lk.get("check", "stencil_order", int, default=4)
    if stencil_order not in (2, 4):
        lk.error("check", "stencil_order", "stencil_order must be 2 or 4")
    tolerances = {}
    for key, name in TOLERANCE_KEYS.items():
        tol = lk.get("check", key, _positive(key), default=1e-3)
        tolerances[name] = tol
    sweep = lk.get("check", "sweep", _sweep, default=None)
    comparator = lk.get("check", "comparator", str, default="momentum").strip().lower()
    if comparator not in ("momentum", "wavenumber"):
        lk.error("check", "comparator", "comparator must be momentum or wavenumber")
    mask_floor = lk.get("check", "mask_floor", _positive("mask_floor"), default=1e-6)

    out_dir = lk.get("output", "directory", str, default="out").strip()
    snapshot_every = lk.get("output", "snapshot_every", int, default=0)
    if snapshot_every < 0:
        lk.error("output", "snapshot_every", "snapshot_every must be >= 0")

    config = ScenarioConfig(
        grid_spec=grid_spec, field=field, model=model, mass=mass, charge=charge,
        center=center, width=width, momentum=momentum, skew=skew,
        proca_k=proca_k, proca_pol=proca_pol,
        dt=dt, steps=steps, dump_every=dump_every, integrator=integrator,
        stencil_order=stencil_order, tolerances=tolerances, sweep=sweep,
        comparator=comparator, mask_floor=mask_floor,
        out_dir=out_dir, snapshot_every=snapshot_every,
        defaults_used=tuple(lk.defaults_used),
    )
    if model in ("kg", "dirac"):
        enforce_stability_bound(config, grid)
    return config


def stability_bound(config: ScenarioConfig, grid: Grid) -> float:
    """dt upper bound 0.5 / (|k|_max + |e| |A|_max + m) at t = 0."""
    kmax = float(np.sqrt(sum((np.pi / h) ** 2 for h in grid.spacing)))
    a0, avec = sample_potential(config.field, grid, 0.0)
    amagnitude = np.abs(np.asarray(a0)) + np.sqrt(
        sum(np.broadcast_to(np.asarray(c) ** 2, grid.shape) for c in avec)
    )
    amax = float(np.max(amagnitude)) * abs(config.charge)
    return 0.5 / (kmax + amax + config.mass)


def enforce_stability_bound(config: ScenarioConfig, grid: Grid | None = None):
    grid = grid or config.make_grid()
    bound = stability_bound(config, grid)
    if config.dt >= bound:
        raise ConfigError(
            f"dt = {config.dt:g} violates the stability bound dt < {bound:.6g} "
            f"(0.5 / (|k|_max + |e||A|_max + m))"
        )


def render_defaults(config: ScenarioConfig) -> str:
    """defaults.txt body: every omitted optional key and the value used."""
    lines = ["defaults applied for omitted optional keys:"]
    if config.defaults_used:
        lines.extend(f"  {entry}" for entry in config.defaults_used)
    else:
        lines.append("  (none: every optional key was explicit)")
    lines.append("")
    lines.append("physics parameters are never defaulted: m, e, dt, steps are required.")
    return "\n".join(lines) + "\n"
