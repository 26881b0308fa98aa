"""Relativistic matter models: state containers, dynamics, and densities."""

from __future__ import annotations

from .state import (
    DIRAC,
    KG,
    MODELS,
    PROCA,
    FourCurrent,
    InstabilityError,
    MatterError,
    MatterState,
    StressEnergySlice,
    component_count,
)
from .dirac import (
    DiracKrylovStepper,
    DiracStrangStepper,
    dirac_current,
    dirac_stress_energy,
    free_eigenspinor,
    step_dirac,
    step_dirac_krylov,
)
from .dirac import neg_freq_fraction as dirac_neg_freq_fraction
from .kg import KGRK4Stepper, kg_current, kg_neg_freq_fraction, kg_stress_energy, step_kg
from .initial import gaussian_envelope, init_gaussian
from .proca import (
    proca_conservation_residuals,
    proca_current,
    proca_four_divergence,
    proca_plane_wave,
    proca_stress_energy,
)

__all__ = [
    "DIRAC", "KG", "PROCA", "MODELS",
    "MatterState", "FourCurrent", "StressEnergySlice",
    "MatterError", "InstabilityError",
    "init_gaussian", "gaussian_envelope", "proca_plane_wave",
    "step", "make_stepper", "four_current", "stress_energy", "neg_freq_fraction",
    "step_kg", "step_dirac", "step_dirac_krylov",
    "dirac_current", "dirac_stress_energy", "kg_current", "kg_stress_energy",
    "proca_current", "proca_stress_energy", "proca_conservation_residuals",
    "proca_four_divergence", "free_eigenspinor", "component_count",
    "KGRK4Stepper", "DiracStrangStepper", "DiracKrylovStepper",
]

SPLIT = "split"
KRYLOV = "krylov"


def make_stepper(state: MatterState, field_config, dt: float, integrator: str = SPLIT):
    """Build the per-run stepper object for a KG or Dirac state."""
    if state.model == KG:
        if integrator != SPLIT:
            raise MatterError(
                f"KG states evolve with the split (RK4) integrator only, "
                f"not {integrator!r}")
        return KGRK4Stepper(state.grid, state.mass, state.charge, field_config, dt)
    if state.model == DIRAC:
        if integrator == SPLIT:
            return DiracStrangStepper(state.grid, state.mass, state.charge, field_config, dt)
        if integrator == KRYLOV:
            return DiracKrylovStepper(state.grid, state.mass, state.charge, field_config, dt)
        raise MatterError(f"unknown integrator {integrator!r}")
    raise MatterError(f"no time evolution available for model {state.model!r}")


def step(state: MatterState, field_config, dt: float, integrator: str = SPLIT) -> MatterState:
    """Advance a KG or Dirac state by one step of dt."""
    return make_stepper(state, field_config, dt, integrator)(state)


def four_current(state: MatterState, field_config) -> FourCurrent:
    """Model-appropriate conserved four-current (rho, j), e included."""
    if state.model == KG:
        return kg_current(state, field_config)
    if state.model == DIRAC:
        return dirac_current(state)
    return proca_current(state)


def stress_energy(state: MatterState, field_config) -> StressEnergySlice:
    """Model-appropriate T^{00} and T^{0i} sampled on the grid."""
    if state.model == KG:
        return kg_stress_energy(state, field_config)
    if state.model == DIRAC:
        return dirac_stress_energy(state, field_config)
    return proca_stress_energy(state)


def neg_freq_fraction(state: MatterState) -> float:
    """Free negative-frequency weight of a KG or Dirac state (0 for Proca modes)."""
    if state.model == KG:
        return kg_neg_freq_fraction(state)
    if state.model == DIRAC:
        return dirac_neg_freq_fraction(state)
    return 0.0
