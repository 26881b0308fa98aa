"""Matter state containers and the sampled density bundles derived from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import Grid


class MatterError(ValueError):
    """Invalid matter state or unsupported operation for the model."""


class InstabilityError(RuntimeError):
    """A time step blew the state norm up (CFL-type violation)."""


KG = "kg"
DIRAC = "dirac"
PROCA = "proca"

MODELS = (KG, DIRAC, PROCA)

# Stored component orders (also the snapshot payload order):
#   kg:     (phi, pi)                 with pi = D_t phi
#   dirac:  (psi_1, psi_2)            on 1D grids (2-spinor)
#           (psi_1 .. psi_4)          on 2D/3D grids (Dirac representation)
#   proca:  (phi^0 .. phi^3, phi^01, phi^02, phi^03, phi^12, phi^13, phi^23)
PROCA_FT_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def dirac_component_count(dims: int) -> int:
    return 2 if dims == 1 else 4


def component_count(model: str, dims: int) -> int:
    if model == KG:
        return 2
    if model == DIRAC:
        return dirac_component_count(dims)
    if model == PROCA:
        return 10
    raise MatterError(f"unknown model {model!r}")


@dataclass(frozen=True)
class MatterState:
    """A wave-function snapshot: model tag, coupling data, time, component stack.

    ``components`` has shape (n_components, *grid.shape), complex128.  The
    charge coupling ``charge`` is the signed e; its sign selects whether the
    trajectory is read as a particle or an antiparticle and must be fixed
    before any observables are interpreted.
    """

    model: str
    grid: Grid
    mass: float
    charge: float
    t: float
    components: np.ndarray

    def __post_init__(self):
        if self.model not in MODELS:
            raise MatterError(f"unknown model {self.model!r}")
        if not (self.mass > 0):
            raise MatterError(f"mass must be positive, got {self.mass}")
        if self.charge == 0:
            raise MatterError("charge coupling e must be nonzero")
        comp = np.asarray(self.components, dtype=np.complex128)
        want = (component_count(self.model, self.grid.dims),) + self.grid.shape
        if comp.shape != want:
            raise MatterError(
                f"component stack shape {comp.shape} does not match {want} "
                f"for model {self.model!r}"
            )
        object.__setattr__(self, "components", comp)

    def with_components(self, components: np.ndarray, t: float | None = None):
        return MatterState(
            self.model, self.grid, self.mass, self.charge,
            self.t if t is None else t, components,
        )

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.components) ** 2) * self.grid.cell_volume)

    def assert_finite(self):
        if not np.all(np.isfinite(self.components.view(np.float64))):
            raise MatterError("matter state contains non-finite values")
        return self


@dataclass(frozen=True)
class FourCurrent:
    """Charge density rho (e included) and current density j = e rho v."""

    grid: Grid
    rho: np.ndarray      # shape grid.shape
    j: np.ndarray        # shape (3, *grid.shape); axes beyond dims are zero

    def __post_init__(self):
        rho = np.ascontiguousarray(self.rho, dtype=np.float64)
        j = np.ascontiguousarray(self.j, dtype=np.float64)
        if rho.shape != self.grid.shape or j.shape != (3,) + self.grid.shape:
            raise MatterError("four-current arrays do not match the grid shape")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "j", j)


@dataclass(frozen=True)
class StressEnergySlice:
    """The T^{0 nu} row of the matter energy-momentum tensor on the grid."""

    grid: Grid
    t00: np.ndarray      # shape grid.shape
    t0i: np.ndarray      # shape (3, *grid.shape); axes beyond dims are zero

    def __post_init__(self):
        t00 = np.ascontiguousarray(self.t00, dtype=np.float64)
        t0i = np.ascontiguousarray(self.t0i, dtype=np.float64)
        if t00.shape != self.grid.shape or t0i.shape != (3,) + self.grid.shape:
            raise MatterError("stress-energy arrays do not match the grid shape")
        object.__setattr__(self, "t00", t00)
        object.__setattr__(self, "t0i", t0i)
