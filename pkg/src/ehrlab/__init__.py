"""ehrlab: a numerical laboratory for relativistic charged wave packets.

Klein-Gordon and Dirac packets are propagated pseudo-spectrally on periodic
grids under prescribed external electromagnetic fields; free Proca modes are
sampled at the observable level.  The point of the exercise is quantitative:
the time derivatives of the packet's field-theoretic momentum and energy are
compared against the Lorentz force and power integrals (exact balance), their
point-charge approximations at the charge centroid, and the dipole-corrected
point force.
"""

from .grid import ComplexField, Grid, GridSpec, RealField, derivative, integrate, make_grid
from .fields import (
    LinearGradientE,
    PlaneWave,
    UniformB,
    UniformE,
    ZeroField,
    eval_EB,
    eval_potential,
    field_stress_energy,
    poynting_residual,
)
from .matter import (
    DIRAC,
    KG,
    PROCA,
    FourCurrent,
    MatterState,
    StressEnergySlice,
    four_current,
    init_gaussian,
    neg_freq_fraction,
    proca_plane_wave,
    step,
    step_dirac,
    step_dirac_krylov,
    step_kg,
    stress_energy,
)
from .observables import (
    TrajectoryRecord,
    centroid,
    dipole_moment,
    energy_momentum,
    total_charge,
    velocity_at,
    velocity_field,
)
from .ehrenfest import (
    classical_trajectory,
    exchange_rates_integral,
    first_order_correction,
    numeric_time_derivative,
    rates_point,
)
from .config import ScenarioConfig, parse_config
from .snapshot import read_snapshot, write_snapshot
from .runner import RunAborted, check_scenario, run_scenario, sweep_scenario

__version__ = "0.1.0"
