"""Fringe phase and visibility of a separated-arm atom interferometer.

Numerical model of what electric and magnetic fields do to the fringes of
a separated-arm alkali-atom interferometer: exact hyperfine-Zeeman level
structure, the polarizability (Stark), Zeeman, Sagnac, Aharonov-Casher and
He-McKellar-Wilkens phase shifts, and the three averaging mechanisms —
velocity spread, trajectory spread and the discrete sublevel sum — that
turn per-atom phases into the observed visibility and phase.
"""

from .averaging import (
    BeamModel,
    ComplexVisibility,
    direct_trajectory_average,
    fresnel_sum,
    linear_zeeman_visibility,
    moment_expansion,
    quadratic_zeeman_closed_form,
    quadratic_zeeman_visibility,
    velocity_average,
    velocity_average_expansion,
    velocity_average_fixed,
    velocity_pdf,
    visibility_correlation,
)
from .dynamics import (
    FieldGrid3D,
    cancellation_check,
    capacitor_gap_field,
    line_charge_field,
    line_charge_gradient,
    motional_fields,
    uniform_field,
    wei_force_components,
)
from .errors import (
    AtomfringeError,
    ConfigError,
    CoverageError,
    DomainError,
    IdentifiabilityError,
    NumericalError,
    TuningWarning,
)
from .geometry import (
    ArmSeparationProfile,
    CapacitorGeometry,
    FieldAssembly,
    MagneticFieldProfile,
    Profile1D,
    TrajectoryDistribution,
    defective_field,
    effective_length,
    eta_profile,
    integrate_product,
)
from .hyperfine import (
    ALL_SUBLEVELS,
    LI7,
    AtomModel,
    Sublevel,
    SublevelPopulations,
    breit_rabi_energy,
    hyperfine_zeeman_hamiltonian,
    magnetic_moment,
    population_unbalance,
    populations_from_chi,
    zeeman_slope_expansion,
)
from .phases import (
    PhaseBreakdown,
    TwoCoilModel,
    ZeemanIntegrals,
    aharonov_bohm_phase,
    aharonov_casher_phase,
    hmw_phase,
    sagnac_phase,
    stark_defect_decomposition,
    stark_phase_ideal,
    stark_phase_profile,
    two_coil_j1,
    zeeman_integrals,
    zeeman_phase,
)
from .scenario import (
    Scenario,
    ScanRecord,
    TwoCoilFit,
    difference_report,
    emit,
    fit_two_coil,
    load_scenario,
    run_scenario,
    scenario_from_dict,
)

__version__ = "0.1.0"
