"""Illustrative default geometry and ready-made scenarios.

The default interaction region puts two 48 mm capacitors (1 mm spacing,
800 V, opposite orientations across the shared septum) at the point of
largest arm separation (100 um triangle over a 1.21 m interferometer) with
a uniform 14 mT field over an 80 mm window.  These numbers are
representative, not a survey of any particular machine, and put the
largest field at 0.8 MV/m: single-arm polarizability phase ~3.6e2 rad,
stretch-state Aharonov-Casher phase ~74 mrad, He-McKellar-Wilkens phase
~27 mrad.
"""

from __future__ import annotations

import numpy as np

from .averaging import BeamModel
from .geometry import ArmSeparationProfile
from .hyperfine import LI7, Sublevel, populations_from_chi
from .scenario import (
    AveragingSwitches,
    CapacitorSpec,
    CoilSpec,
    MagneticSpec,
    ScanSpec,
    Scenario,
)

INTERACTION_CENTER = 0.605  # m, position of largest arm separation
TOTAL_LENGTH = 1.21  # m
PEAK_SEPARATION = 100e-6  # m

DEFAULT_CAPACITOR = CapacitorSpec(
    voltage=800.0, spacing=1.0e-3, half_length=24.0e-3, orientation=+1
)

DEFAULT_BEAM = BeamModel(v_m=1065.0, s_parallel=8.0)


def default_separation() -> ArmSeparationProfile:
    return ArmSeparationProfile.triangle(
        total_length=TOTAL_LENGTH, peak=PEAK_SEPARATION, peak_position=INTERACTION_CENTER
    )


def maxima_scenario(
    chi: float = 0.0,
    b_sign: int = +1,
    gradient: float = 0.0,
    velocity_averaged: bool = False,
) -> Scenario:
    """Both fields at their maxima; scan over the mean beam velocity."""
    cap_l = DEFAULT_CAPACITOR
    cap_u = CapacitorSpec(
        voltage=cap_l.voltage,
        spacing=cap_l.spacing,
        half_length=cap_l.half_length,
        orientation=-1,
    )
    return Scenario(
        atom=LI7,
        beam=BeamModel(v_m=DEFAULT_BEAM.v_m, s_parallel=DEFAULT_BEAM.s_parallel, chi=chi),
        populations=populations_from_chi(chi),
        scan=ScanSpec(variable="mean_velocity", values=np.array([DEFAULT_BEAM.v_m])),
        switches=AveragingSwitches(velocity=velocity_averaged, trajectory=False, sublevels=True),
        separation=default_separation(),
        cap_l=cap_l,
        cap_u=cap_u,
        cap_center=INTERACTION_CENTER,
        cap_ramp=2.0e-3,
        magnetic=MagneticSpec(
            center=INTERACTION_CENTER,
            window=80e-3,
            modulus=14e-3,
            gradient=gradient,
            sign=b_sign,
        ),
        echo={"preset": "maxima"},
    )


def coil_scan_scenario(
    chi: float = 0.0,
    j1_per_amp: float = 0.5,
    j2_per_amp2: float = 0.01,
    currents: np.ndarray | None = None,
    velocity_averaged: bool = False,
) -> Scenario:
    """Current scan with coil-parameterized Zeeman dephasing (no E field)."""
    if currents is None:
        currents = np.linspace(0.0, 40.0, 81)
    return Scenario(
        atom=LI7,
        beam=BeamModel(v_m=DEFAULT_BEAM.v_m, s_parallel=DEFAULT_BEAM.s_parallel, chi=chi),
        populations=populations_from_chi(chi),
        scan=ScanSpec(variable="coil_current", values=np.asarray(currents, dtype=float)),
        switches=AveragingSwitches(velocity=velocity_averaged, trajectory=False, sublevels=True),
        separation=default_separation(),
        coil=CoilSpec(j1_per_amp=j1_per_amp, j2_per_amp2=j2_per_amp2),
        reference_sublevel=Sublevel(2, 2),
        echo={"preset": "coil_scan", "j1_per_amp": j1_per_amp, "j2_per_amp2": j2_per_amp2},
    )
