"""State snapshots: text header plus raw little-endian float64 payload.

Layout:
    EHRLAB1\n
    model = <kg|dirac|proca>\n
    dims = <1|2|3>\n
    points = <n1[, n2[, n3]]>\n
    extents = <L1[, L2[, L3]]>\n
    t = <time>\n
    m = <mass>\n
    e = <signed charge coupling>\n
    components = <count>\n
    \n
    <raw (re, im) float64 pairs, row-major (x, y, z), components concatenated>

Component order per model matches the in-memory stack (see matter.state).
Floats in the header are written with 17 significant digits, so write/read
round-trips are bit-exact.  Files are written atomically (temp + rename).
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .grid import GridSpec, make_grid
from .matter.state import MatterState, component_count

MAGIC = "EHRLAB1"


class SnapshotError(ValueError):
    """Malformed snapshot file."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_snapshot(state: MatterState, path) -> Path:
    """Serialize a state; bit-exact round trip of header fields and payload."""
    path = Path(path)
    spec = state.grid.spec
    header = [
        MAGIC,
        f"model = {state.model}",
        f"dims = {spec.dims}",
        "points = " + ", ".join(str(n) for n in spec.points),
        "extents = " + ", ".join(_fmt(ext) for ext in spec.extents),
        f"t = {_fmt(state.t)}",
        f"m = {_fmt(state.mass)}",
        f"e = {_fmt(state.charge)}",
        f"components = {state.components.shape[0]}",
        "",
        "",
    ]
    payload = np.ascontiguousarray(
        state.components.astype(np.complex128, copy=False)
    ).view(np.float64)
    if payload.dtype.byteorder not in ("<", "="):  # big-endian hosts: force LE
        payload = payload.astype("<f8")
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write("\n".join(header).encode("ascii"))
        fh.write(payload.astype("<f8", copy=False).tobytes())
    os.replace(tmp, path)
    return path


def read_snapshot(path) -> MatterState:
    """Deserialize a snapshot written by write_snapshot."""
    path = Path(path)
    blob = path.read_bytes()
    sep = b"\n\n"
    cut = blob.find(sep)
    if cut < 0:
        raise SnapshotError(f"{path}: missing blank line after the header")
    header_lines = blob[:cut].decode("ascii", errors="replace").splitlines()
    if not header_lines or header_lines[0] != MAGIC:
        raise SnapshotError(f"{path}: bad magic line (expected {MAGIC!r})")
    fields = {}
    for line in header_lines[1:]:
        if "=" not in line:
            raise SnapshotError(f"{path}: malformed header line {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        fields[key] = value
    try:
        model = fields["model"]
        dims = int(fields["dims"])
        points = tuple(int(p) for p in fields["points"].split(","))
        extents = tuple(float(p) for p in fields["extents"].split(","))
        t = float(fields["t"])
        mass = float(fields["m"])
        charge = float(fields["e"])
        ncomp = int(fields["components"])
    except KeyError as exc:
        raise SnapshotError(f"{path}: header missing key {exc}") from exc
    grid = make_grid(GridSpec(dims, points, extents))
    expected = component_count(model, dims)
    if ncomp != expected:
        raise SnapshotError(
            f"{path}: header declares {ncomp} components, "
            f"model {model!r} on a {dims}D grid stores {expected}"
        )
    want_bytes = 16 * grid.site_count * ncomp
    payload = blob[cut + len(sep):]
    if len(payload) != want_bytes:
        raise SnapshotError(
            f"{path}: payload holds {len(payload)} bytes, expected {want_bytes} "
            f"(16 x {grid.site_count} sites x {ncomp} components)"
        )
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    comps = flat.view(np.complex128).reshape((ncomp,) + grid.shape)
    return MatterState(model, grid, mass, charge, t, comps)
