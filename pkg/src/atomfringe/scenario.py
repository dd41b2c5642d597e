"""Config-driven scenario runner, two-coil fitter and tabular output.

A scenario is a YAML document (``schema_version: 1``) naming the atom
preset, the beam, the field assembly, the population source, a scan
variable and the averaging switches.  Long profiles may be given inline
or as CSV side files (SI units, mandatory header row).

Two magnetic descriptions are supported and are mutually exclusive:

* ``fields.magnetic`` — a sampled longitudinal window (modulus, transverse
  gradient); Zeeman dephasing comes from the gradient integrals;
* ``coil`` — current-parameterized integrals J1 = a|I−i0|+..., J2 ∝ I²,
  J3 ∝ |I|³, for scans over coil or compensator current (no capacitors).

Stark phases use the effective-length plane-capacitor formula (or, when
defect grids are present, the defect decomposition's mean); the sampled
arm-field profiles — trapezoids of equal area — feed the geometric line
integrals.  Inside the velocity average every dynamic component scales as
1/v at fixed geometry; the topological ones do not scale at all.

Scan points are evaluated independently and deterministically: the same
config yields byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml
from scipy import optimize as _optimize

from .averaging import (
    BeamModel,
    ComplexVisibility,
    fresnel_sum,
    moment_expansion,
    velocity_average,
    velocity_average_fixed,
)
from .errors import ConfigError, DomainError, IdentifiabilityError
from .geometry import (
    ArmSeparationProfile,
    CapacitorGeometry,
    FieldAssembly,
    MagneticFieldProfile,
    Profile1D,
    TrajectoryDistribution,
    effective_length,
)
from .hyperfine import (
    ALL_SUBLEVELS,
    LI7,
    AtomModel,
    Sublevel,
    SublevelPopulations,
    population_unbalance,
    populations_from_chi,
)
from .phases import (
    PhaseBreakdown,
    TwoCoilModel,
    ZeemanIntegrals,
    aharonov_casher_phase,
    hmw_phase,
    sagnac_phase,
    stark_defect_decomposition,
    stark_phase_ideal,
    zeeman_integrals,
    zeeman_phase,
)

SCHEMA_VERSION = 1

SCAN_VARIABLES = ("coil_current", "compensator_current", "voltage", "mean_velocity")

#: Canonical CSV column order for the per-sublevel phases.
SUBLEVEL_COLUMNS = tuple(str(s) for s in ALL_SUBLEVELS)


# ---------------------------------------------------------------------------
# Configuration objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapacitorSpec:
    voltage: float
    spacing: float
    half_length: float
    orientation: int
    grids: CapacitorGeometry | None = None  # optional defect description

    @property
    def eff_length(self) -> float:
        return effective_length(self.half_length, self.spacing)


@dataclass(frozen=True)
class MagneticSpec:
    center: float
    window: float
    modulus: float
    gradient: float = 0.0
    sign: int = +1


@dataclass(frozen=True)
class CoilSpec:
    j1_per_amp: float
    i0: float = 0.0
    a_j1c: float = 0.0
    i0c: float = 0.0
    j0_ic: float = 0.0
    j2_per_amp2: float = 0.0
    j3_per_amp3: float = 0.0
    compensator_current: float = 0.0

    def two_coil(self) -> TwoCoilModel:
        return TwoCoilModel(self.j1_per_amp, self.i0, self.a_j1c, self.i0c, self.j0_ic)


@dataclass(frozen=True)
class ScanSpec:
    variable: str
    values: np.ndarray

    def __post_init__(self):
        if self.variable not in SCAN_VARIABLES:
            raise ConfigError(f"scan.variable: must be one of {SCAN_VARIABLES}")
        vals = np.asarray(self.values, dtype=float)
        if vals.size == 0:
            raise ConfigError("scan: range is empty")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class AveragingSwitches:
    velocity: bool = False
    trajectory: bool = False
    sublevels: bool = True


@dataclass(frozen=True)
class Scenario:
    atom: AtomModel
    beam: BeamModel
    populations: SublevelPopulations
    scan: ScanSpec
    switches: AveragingSwitches
    separation: ArmSeparationProfile
    cap_l: CapacitorSpec | None = None
    cap_u: CapacitorSpec | None = None
    cap_center: float = 0.0
    cap_ramp: float = 2.0e-3
    magnetic: MagneticSpec | None = None
    coil: CoilSpec | None = None
    trajectory: TrajectoryDistribution | None = None
    reference_sublevel: Sublevel = Sublevel(2, 2)
    echo: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if (self.magnetic is not None) and (self.coil is not None):
            raise ConfigError("fields.magnetic and coil are mutually exclusive")
        if self.coil is not None and (self.cap_l or self.cap_u):
            raise ConfigError("coil mode does not support capacitors (no E fields)")
        if self.scan.variable in ("coil_current", "compensator_current") and self.coil is None:
            raise ConfigError(f"scan.variable: {self.scan.variable} requires a coil section")
        if self.scan.variable == "voltage" and self.cap_l is None:
            raise ConfigError("scan.variable: voltage requires capacitors")
        has_grids = (self.cap_l is not None and self.cap_l.grids is not None) or (
            self.cap_u is not None and self.cap_u.grids is not None
        )
        if has_grids and self.trajectory is None:
            raise ConfigError(
                "fields.capacitors.*.grids: defect grids need fields.trajectory "
                "for the transverse averages"
            )


@dataclass(frozen=True)
class ScanRecord:
    """One scan point: raw per-sublevel phases plus the averaged fringe."""

    value: float
    breakdown: PhaseBreakdown
    visibility: ComplexVisibility
    second_moment: float = 0.0
    third_moment: float = 0.0
    max_dispersion: float = 0.0


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _get(d: Mapping, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}: missing required key")
        return default
    return d[key]


def _number(d: Mapping, key: str, path: str, required: bool = True, default=None) -> float:
    val = _get(d, key, path, required, default)
    if val is None:
        return default
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {val!r}")
    return float(val)


def read_profile_csv(path: Path) -> Profile1D:
    """Two-column CSV (header mandatory): coordinate, value — SI units."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or any(_is_number(cell) for cell in rows[0]):
        raise ConfigError(f"{path}: CSV header row is mandatory")
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError(f"{path}: expected exactly 2 columns")
    return Profile1D(data[:, 0], data[:, 1])


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def read_grid_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Three-column CSV (header mandatory): y, z, value over a complete
    rectangular grid; returns (y, z, values[ny, nz])."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or any(_is_number(cell) for cell in rows[0]):
        raise ConfigError(f"{path}: CSV header row is mandatory")
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    if data.ndim != 2 or data.shape[1] != 3:
        raise ConfigError(f"{path}: expected exactly 3 columns (y, z, value)")
    y = np.unique(data[:, 0])
    z = np.unique(data[:, 1])
    if data.shape[0] != y.size * z.size:
        raise ConfigError(f"{path}: rows do not form a complete {y.size}x{z.size} grid")
    values = np.full((y.size, z.size), np.nan)
    iy = np.searchsorted(y, data[:, 0])
    iz = np.searchsorted(z, data[:, 1])
    values[iy, iz] = data[:, 2]
    if np.any(np.isnan(values)):
        raise ConfigError(f"{path}: duplicate or missing grid nodes")
    return y, z, values


def _parse_profile(node: Mapping | None, path: str, base_dir: Path) -> Profile1D | None:
    if node is None:
        return None
    if "csv" in node:
        return read_profile_csv(base_dir / node["csv"])
    x = _get(node, "x", path)
    v = _get(node, "values", path)
    return Profile1D(np.asarray(x, dtype=float), np.asarray(v, dtype=float))


def _parse_separation(node: Mapping, path: str, base_dir: Path) -> ArmSeparationProfile:
    kind = _get(node, "kind", path)
    if kind == "triangle":
        return ArmSeparationProfile.triangle(
            total_length=_number(node, "total_length", path),
            peak=_number(node, "peak", path),
            peak_position=_number(node, "peak_position", path),
        )
    if kind == "samples":
        z = np.asarray(_get(node, "z", path), dtype=float)
        dx = np.asarray(_get(node, "dx", path), dtype=float)
        return ArmSeparationProfile(Profile1D(z, dx))
    if kind == "csv":
        return ArmSeparationProfile(read_profile_csv(base_dir / _get(node, "path", path)))
    raise ConfigError(f"{path}.kind: unknown separation kind {kind!r}")


def _parse_capacitor(node: Mapping, path: str, base_dir: Path) -> CapacitorSpec:
    spec = CapacitorSpec(
        voltage=_number(node, "voltage", path),
        spacing=_number(node, "spacing", path),
        half_length=_number(node, "half_length", path),
        orientation=int(_number(node, "orientation", path, required=False, default=1)),
    )
    grids_node = node.get("grids")
    if grids_node is not None:
        arm = path.rsplit(".", 1)[-1]
        if "spacing_csv" in grids_node:
            y, z, spacing = read_grid_csv(base_dir / grids_node["spacing_csv"])
            if "contact_csv" in grids_node:
                yc, zc, contact = read_grid_csv(base_dir / grids_node["contact_csv"])
                if not (np.array_equal(y, yc) and np.array_equal(z, zc)):
                    raise ConfigError(f"{path}.grids: spacing and contact grids differ")
            else:
                contact = np.zeros_like(spacing)
            if "length_csv" in grids_node:
                lp = read_profile_csv(base_dir / grids_node["length_csv"])
                length = lp(y)
            else:
                length = np.full(
                    y.size, _number(grids_node, "length", f"{path}.grids")
                )
        else:
            y = np.asarray(grids_node["y"], dtype=float)
            z = np.asarray(grids_node["z"], dtype=float)
            spacing = np.asarray(grids_node["spacing_map"], dtype=float)
            contact = np.asarray(grids_node["contact"], dtype=float)
            length = np.asarray(grids_node["length"], dtype=float)
        grids = CapacitorGeometry.from_spacing_map(
            arm=arm,
            y=y,
            z=z,
            spacing=spacing,
            length=length,
            contact=contact,
            voltage=spec.voltage,
            orientation=spec.orientation,
        )
        spec = replace(spec, grids=grids)
    return spec


def _parse_atom(node: Mapping | None, path: str) -> AtomModel:
    if node is None:
        return LI7
    preset = _get(node, "preset", path, required=False, default="li7")
    if preset != "li7":
        raise ConfigError(f"{path}.preset: unknown preset {preset!r}")
    overrides = node.get("overrides") or {}
    allowed = {
        "hyperfine_constant",
        "g_s",
        "g_i",
        "polarizability",
        "mass",
        "sagnac_constant",
    }
    bad = set(overrides) - allowed
    if bad:
        raise ConfigError(f"{path}.overrides: unknown fields {sorted(bad)}")
    return replace(LI7, **{k: float(v) for k, v in overrides.items()})


def scenario_from_dict(doc: Mapping, base_dir: Path | str = ".") -> Scenario:
    """Validate and resolve a configuration mapping into a Scenario."""
    base_dir = Path(base_dir)
    if not isinstance(doc, Mapping):
        raise ConfigError("top level: expected a mapping")
    version = _get(doc, "schema_version", "top level")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")

    atom = _parse_atom(doc.get("atom"), "atom")

    beam_node = _get(doc, "beam", "top level")
    pop_node = doc.get("populations") or {}
    if "chi" in pop_node:
        chi = _number(pop_node, "chi", "populations")
    elif "beta_hz" in pop_node:
        chi = population_unbalance(
            2 * math.pi * _number(pop_node, "beta_hz", "populations"),
            2 * math.pi * _number(pop_node, "detuning_hz", "populations"),
            atom.hfs_angular_frequency,
        )
    else:
        chi = 0.0
    try:
        beam = BeamModel(
            v_m=_number(beam_node, "mean_velocity", "beam"),
            s_parallel=_number(beam_node, "speed_ratio", "beam"),
            chi=chi,
        )
        populations = populations_from_chi(chi)
    except DomainError as err:
        raise ConfigError(f"beam/populations: {err}") from err

    fields_node = doc.get("fields") or {}
    sep_node = fields_node.get("separation")
    if sep_node is None:
        raise ConfigError("fields.separation: missing required section")
    separation = _parse_separation(sep_node, "fields.separation", base_dir)

    cap_l = cap_u = None
    cap_center = 0.0
    cap_ramp = 2.0e-3
    caps_node = fields_node.get("capacitors")
    if caps_node is not None:
        cap_center = _number(caps_node, "center", "fields.capacitors")
        cap_ramp = _number(caps_node, "ramp", "fields.capacitors", required=False, default=2.0e-3)
        cap_l = _parse_capacitor(
            _get(caps_node, "l", "fields.capacitors"), "fields.capacitors.l", base_dir
        )
        cap_u = _parse_capacitor(
            _get(caps_node, "u", "fields.capacitors"), "fields.capacitors.u", base_dir
        )

    magnetic = None
    mag_node = fields_node.get("magnetic")
    if mag_node is not None:
        magnetic = MagneticSpec(
            center=_number(mag_node, "center", "fields.magnetic"),
            window=_number(mag_node, "window", "fields.magnetic"),
            modulus=_number(mag_node, "modulus", "fields.magnetic"),
            gradient=_number(mag_node, "gradient", "fields.magnetic", required=False, default=0.0),
            sign=int(_number(mag_node, "sign", "fields.magnetic", required=False, default=1)),
        )

    coil = None
    coil_node = doc.get("coil")
    if coil_node is not None:
        coil = CoilSpec(
            j1_per_amp=_number(coil_node, "j1_per_amp", "coil"),
            i0=_number(coil_node, "i0", "coil", required=False, default=0.0),
            a_j1c=_number(coil_node, "a_j1c", "coil", required=False, default=0.0),
            i0c=_number(coil_node, "i0c", "coil", required=False, default=0.0),
            j0_ic=_number(coil_node, "j0_ic", "coil", required=False, default=0.0),
            j2_per_amp2=_number(coil_node, "j2_per_amp2", "coil", required=False, default=0.0),
            j3_per_amp3=_number(coil_node, "j3_per_amp3", "coil", required=False, default=0.0),
            compensator_current=_number(
                coil_node, "compensator_current", "coil", required=False, default=0.0
            ),
        )

    trajectory = None
    traj_node = fields_node.get("trajectory")
    if traj_node is not None:
        if "csv" in traj_node:
            p = read_profile_csv(base_dir / traj_node["csv"])
            trajectory = TrajectoryDistribution.normalized(p.x, p.values)
        else:
            trajectory = TrajectoryDistribution.normalized(
                np.asarray(_get(traj_node, "y", "fields.trajectory"), dtype=float),
                np.asarray(_get(traj_node, "weight", "fields.trajectory"), dtype=float),
            )

    scan_node = _get(doc, "scan", "top level")
    if "values" in scan_node:
        values = np.asarray(scan_node["values"], dtype=float)
    else:
        steps = int(_number(scan_node, "steps", "scan"))
        if steps < 1:
            raise ConfigError("scan.steps: must be >= 1")
        values = np.linspace(
            _number(scan_node, "start", "scan"), _number(scan_node, "stop", "scan"), steps
        )
    scan = ScanSpec(variable=_get(scan_node, "variable", "scan"), values=values)

    avg_node = doc.get("averaging") or {}
    switches = AveragingSwitches(
        velocity=bool(avg_node.get("velocity", False)),
        trajectory=bool(avg_node.get("trajectory", False)),
        sublevels=bool(avg_node.get("sublevels", True)),
    )

    ref_node = doc.get("reference_sublevel") or {"f": 2, "m_f": 2}
    try:
        reference = Sublevel(int(ref_node["f"]), int(ref_node["m_f"]))
    except (KeyError, DomainError) as err:
        raise ConfigError(f"reference_sublevel: {err}") from err

    try:
        return Scenario(
            atom=atom,
            beam=beam,
            populations=populations,
            scan=scan,
            switches=switches,
            separation=separation,
            cap_l=cap_l,
            cap_u=cap_u,
            cap_center=cap_center,
            cap_ramp=cap_ramp,
            magnetic=magnetic,
            coil=coil,
            trajectory=trajectory,
            reference_sublevel=reference,
            echo=dict(doc),
        )
    except DomainError as err:
        raise ConfigError(str(err)) from err


def load_scenario(path: Path | str) -> Scenario:
    path = Path(path)
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return scenario_from_dict(doc, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Point evaluation
# ---------------------------------------------------------------------------


def _arm_field_profile(spec: CapacitorSpec, center: float, ramp: float) -> Profile1D:
    """Trapezoidal E_x(z) whose area equals E·L_eff of the ideal capacitor."""
    l_eff = spec.eff_length
    if not (0.0 < ramp < l_eff):
        raise ConfigError("fields.capacitors.ramp: must lie in (0, effective length)")
    plateau = l_eff - ramp
    e0 = spec.orientation * spec.voltage / spec.spacing
    z = center + np.array([-(plateau / 2 + ramp), -plateau / 2, plateau / 2, plateau / 2 + ramp])
    return Profile1D(z, np.array([0.0, e0, e0, 0.0]))


def _magnetic_profile(spec: MagneticSpec, b_scale: float) -> MagneticFieldProfile:
    half = spec.window / 2.0
    return MagneticFieldProfile.uniform_window(
        spec.center - half,
        spec.center + half,
        spec.modulus * b_scale,
        spec.gradient * b_scale,
    )


def _assembly_at(
    scn: Scenario, voltage_scale: float, e_scale: float, b_scale: float
) -> FieldAssembly:
    e_l = e_u = None
    cap_l = cap_u = None
    if scn.cap_l is not None and e_scale > 0.0:

        def rescale(spec: CapacitorSpec) -> CapacitorSpec:
            v = spec.voltage * voltage_scale * e_scale
            grids = replace(spec.grids, voltage=v) if spec.grids is not None else None
            return replace(spec, voltage=v, grids=grids)

        sl, su = rescale(scn.cap_l), rescale(scn.cap_u)
        e_l = _arm_field_profile(sl, scn.cap_center, scn.cap_ramp)
        e_u = _arm_field_profile(su, scn.cap_center, scn.cap_ramp)
        cap_l, cap_u = sl, su
    b = None
    b_sign = +1
    if scn.magnetic is not None and b_scale > 0.0:
        b = _magnetic_profile(scn.magnetic, b_scale)
        b_sign = scn.magnetic.sign

    # materialize both arms as grid objects once either carries defects,
    # so the decomposition can difference them (a defect-free arm becomes
    # an ideal grid of the same voltage and effective length)
    grids_l = grids_u = None
    if cap_l is not None and (cap_l.grids is not None or cap_u.grids is not None):
        if scn.trajectory is not None:
            half_y = 1.05 * max(
                abs(scn.trajectory.profile.support[0]),
                abs(scn.trajectory.profile.support[1]),
            )

            def materialize(arm: str, spec: CapacitorSpec) -> CapacitorGeometry:
                if spec.grids is not None:
                    return spec.grids
                return CapacitorGeometry.ideal(
                    arm,
                    spec.voltage,
                    spec.spacing,
                    spec.eff_length,
                    orientation=spec.orientation,
                    half_width_y=half_y,
                )

            grids_l = materialize("l", cap_l)
            grids_u = materialize("u", cap_u)
    return FieldAssembly(
        separation=scn.separation,
        e_l=e_l,
        e_u=e_u,
        b=b,
        b_sign=b_sign,
        cap_l=grids_l,
        cap_u=grids_u,
        trajectory=scn.trajectory,
    )


def _coil_integrals(scn: Scenario, i: float, i_c: float, v: float) -> ZeemanIntegrals:
    coil = scn.coil
    j1 = coil.two_coil()(i, i_c)
    j2 = coil.j2_per_amp2 * i * i
    j3 = coil.j3_per_amp3 * abs(i) ** 3
    # coil coefficients are quoted at the configured beam velocity
    ref = scn.beam.v_m
    return ZeemanIntegrals(j1, j2, j3, ref).scaled_to_velocity(v)


def evaluate_point(
    scn: Scenario,
    value: float,
    e_scale: float = 1.0,
    b_scale: float = 1.0,
) -> ScanRecord:
    """Evaluate one scan point; ``e_scale``/``b_scale`` dial entire field
    subsystems (used by the multi-configuration difference report)."""
    var = scn.scan.variable
    v_m = scn.beam.v_m
    voltage_scale = 1.0
    i = 0.0
    i_c = scn.coil.compensator_current if scn.coil is not None else 0.0
    if var == "mean_velocity":
        v_m = value
        if v_m <= 0:
            raise DomainError("scan velocity must be > 0")
    elif var == "voltage":
        if scn.cap_l is None or scn.cap_l.voltage == 0:
            raise ConfigError("voltage scan requires a non-zero configured voltage")
        voltage_scale = value / scn.cap_l.voltage
    elif var == "coil_current":
        i = value
    elif var == "compensator_current":
        i_c = value

    beam = BeamModel(v_m=v_m, s_parallel=scn.beam.s_parallel, chi=scn.beam.chi)
    assembly = _assembly_at(scn, voltage_scale, e_scale, b_scale)
    atom = scn.atom

    phi_sagnac = sagnac_phase(atom, v_m)

    # Stark: defect-decomposition mean when grids are present, else ideal.
    delta_profile = None
    second = third = maxdelta = 0.0
    if assembly.cap_l is not None and assembly.cap_u is not None and scn.trajectory is not None:
        deco = stark_defect_decomposition(
            assembly.cap_l, assembly.cap_u, scn.trajectory, atom, v_m
        )
        phi_stark = deco.mean_total
        delta_profile = deco.delta_total()
    elif scn.cap_l is not None and e_scale > 0.0:
        phi_stark = stark_phase_ideal(
            atom,
            scn.cap_l.voltage * voltage_scale * e_scale,
            scn.cap_l.spacing,
            scn.cap_l.eff_length,
            scn.cap_u.voltage * voltage_scale * e_scale,
            scn.cap_u.spacing,
            scn.cap_u.eff_length,
            v_m,
        )
    else:
        phi_stark = 0.0

    if scn.coil is not None:
        j = _coil_integrals(scn, i * b_scale, i_c * b_scale, v_m)
    elif assembly.b is not None:
        j = zeeman_integrals(assembly.b, scn.separation, atom, v_m)
    else:
        j = ZeemanIntegrals(0.0, 0.0, 0.0, v_m)

    zeeman = {s: zeeman_phase(s, j, atom=atom) for s in ALL_SUBLEVELS}
    if assembly.e_l is not None or assembly.e_u is not None:
        ac = {s: aharonov_casher_phase(atom, s, assembly) for s in ALL_SUBLEVELS}
        phi_hmw = hmw_phase(atom, assembly)
    else:
        ac = {s: 0.0 for s in ALL_SUBLEVELS}
        phi_hmw = 0.0

    breakdown = PhaseBreakdown.compose(phi_sagnac, phi_stark, zeeman, ac, phi_hmw)

    # trajectory layer (sublevel-independent dispersion from the capacitors)
    traj_ratio = 1.0
    traj_phase_shift = 0.0
    if scn.switches.trajectory and delta_profile is not None:
        mom = moment_expansion(scn.trajectory, delta_profile)
        traj_ratio = mom.visibility_ratio
        traj_phase_shift = -mom.third_moment / 6.0
        second, third, maxdelta = (
            mom.second_moment,
            mom.third_moment,
            mom.max_dispersion,
        )

    def phasor(s: Sublevel) -> ComplexVisibility:
        dynamic = phi_sagnac + phi_stark + zeeman[s]  # all scale as 1/v
        topo = ac[s] + phi_hmw + traj_phase_shift
        if scn.switches.velocity:
            c = velocity_average(beam, 1, dynamic, phi_offset=topo)
        else:
            c = ComplexVisibility.from_polar(1.0, dynamic + topo)
        return ComplexVisibility.from_complex(c.as_complex() * traj_ratio)

    if scn.switches.sublevels:
        vis = fresnel_sum(scn.populations, {s: phasor(s) for s in ALL_SUBLEVELS})
    else:
        vis = phasor(scn.reference_sublevel)

    return ScanRecord(
        value=float(value),
        breakdown=breakdown,
        visibility=vis,
        second_moment=second,
        third_moment=third,
        max_dispersion=maxdelta,
    )


def run_scenario(scn: Scenario) -> list[ScanRecord]:
    """Evaluate every scan point (deterministic: same config, same records)."""
    return [evaluate_point(scn, v) for v in scn.scan.values]


# ---------------------------------------------------------------------------
# Multi-configuration difference report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DifferenceReport:
    """Fringe phases of the four field configurations and their combination
    φ(E,B) − φ(E,0) − φ(0,B) + φ(0,0), which isolates the joint-field
    (geometric) phase in the small-dispersion regime."""

    phase_eb: float
    phase_e0: float
    phase_0b: float
    phase_00: float
    combination: float
    hmw_input: float
    visibility_eb: float


def difference_report(scn: Scenario, value: float | None = None, b_off: float = 1e-4) -> DifferenceReport:
    """Run the 4-configuration subtraction at one scan point.

    ``b_off`` is the residual relative B kept in the "field off"
    configurations so that the sublevel quantization axis stays defined.
    """
    if value is None:
        value = float(scn.scan.values[0])
    rec_eb = evaluate_point(scn, value)
    rec_e0 = evaluate_point(scn, value, b_scale=b_off)
    rec_0b = evaluate_point(scn, value, e_scale=0.0)
    rec_00 = evaluate_point(scn, value, e_scale=0.0, b_scale=b_off)
    comb = (
        rec_eb.visibility.phase
        - rec_e0.visibility.phase
        - rec_0b.visibility.phase
        + rec_00.visibility.phase
    )
    return DifferenceReport(
        phase_eb=rec_eb.visibility.phase,
        phase_e0=rec_e0.visibility.phase,
        phase_0b=rec_0b.visibility.phase,
        phase_00=rec_00.visibility.phase,
        combination=comb,
        hmw_input=rec_eb.breakdown.hmw,
        visibility_eb=rec_eb.visibility.modulus,
    )


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def records_to_csv(records: Sequence[ScanRecord]) -> str:
    out = io.StringIO()
    header = ["scan_var", "visibility", "phase_rad", *SUBLEVEL_COLUMNS]
    out.write(",".join(header) + "\n")
    for rec in records:
        cells = [
            _fmt(rec.value),
            _fmt(rec.visibility.modulus),
            _fmt(rec.visibility.phase),
        ]
        cells.extend(_fmt(rec.breakdown.total[s]) for s in ALL_SUBLEVELS)
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def parse_records_csv(text: str) -> list[dict[str, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    return [
        {name: float(cell) for name, cell in zip(header, row)} for row in rows[1:]
    ]


def magnitude_summary(records: Sequence[ScanRecord]) -> dict[str, float]:
    """Largest absolute value of each phase component across the scan."""
    return {
        "sagnac": max(abs(r.breakdown.sagnac) for r in records),
        "stark": max(abs(r.breakdown.stark) for r in records),
        "zeeman": max(
            abs(p) for r in records for p in r.breakdown.zeeman.values()
        ),
        "aharonov_casher": max(
            abs(p) for r in records for p in r.breakdown.aharonov_casher.values()
        ),
        "hmw": max(abs(r.breakdown.hmw) for r in records),
    }


def records_to_json(records: Sequence[ScanRecord], scn: Scenario) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(scn.echo),
        "magnitudes": magnitude_summary(records),
        "records": [
            {
                "scan_var": r.value,
                "visibility": r.visibility.modulus,
                "phase_rad": r.visibility.phase,
                "sublevel_phases": {
                    str(s): r.breakdown.total[s] for s in ALL_SUBLEVELS
                },
                "diagnostics": {
                    "second_moment": r.second_moment,
                    "third_moment": r.third_moment,
                    "max_dispersion": r.max_dispersion,
                },
            }
            for r in records
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def emit(
    records: Sequence[ScanRecord],
    scn: Scenario,
    out_path: Path | str,
    fmt: str = "csv",
) -> Path:
    """Write the scan records to ``out_path`` as CSV or JSON."""
    out_path = Path(out_path)
    if fmt == "csv":
        out_path.write_text(records_to_csv(records))
    elif fmt == "json":
        out_path.write_text(records_to_json(records, scn))
    else:
        raise ConfigError(f"output.format: unknown format {fmt!r}")
    return out_path


# ---------------------------------------------------------------------------
# Two-coil model fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoCoilFit:
    """Fit result: model, root-mean-square residual and bookkeeping flags.

    ``zero_current_j0`` is the laboratory-field integral implied by the
    smooth zero-current limit, j0_ic + a_j1|i0| + a_j1c|i0c|.
    """

    model: TwoCoilModel
    rms_residual: float
    mode: str
    compensator_absorbed: bool = False

    @property
    def zero_current_j0(self) -> float:
        m = self.model
        return m.j0_ic + m.a_j1 * abs(m.i0) + m.a_j1c * abs(m.i0c)


def _require_two_sided(values: np.ndarray, kink: float, names: tuple[str, ...]) -> None:
    left = np.sum(values < kink)
    right = np.sum(values > kink)
    if left == 0 or right == 0:
        raise IdentifiabilityError(
            "data lie on one side of the kink at "
            f"{kink:.6g}: |x - x0| is indistinguishable from a straight line; "
            f"unconstrained parameters: {', '.join(names)}",
            parameters=names,
        )


def fit_two_coil(
    data: Sequence[tuple],
    mode: str = "j1",
    chi: float = 0.0,
    beam: BeamModel | None = None,
    atom: AtomModel = LI7,
    x0: Sequence[float] | None = None,
) -> TwoCoilFit:
    """Least-squares fit of the two-coil J1 model.

    ``mode="j1"``: rows are (I, I_C, J1).  For fixed kinks the model is
    linear in (a_j1, a_j1c, j0_ic), so the fit is a derivative-free search
    over the kink positions (coarse grid seed + Nelder-Mead) with an exact
    linear solve inside — safe across the |·| kinks.

    ``mode="visibility"``: rows are (I, I_C, visibility, phase); the model
    maps J1 through the velocity-averaged linear-Zeeman fringe, so ``beam``
    (and the population unbalance ``chi``) are required.  The search over
    all five parameters is non-convex; ``x0`` seeds it when the default
    (median currents, slope from the data span) is not close enough.

    Needs at least 5 points spanning both sides of each active kink;
    otherwise an :class:`IdentifiabilityError` lists the parameters the
    data cannot constrain.  A constant compensator current degenerates its
    terms into the offset: the fit then reports ``compensator_absorbed``.
    """
    rows = np.asarray([tuple(map(float, r)) for r in data], dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 5:
        raise IdentifiabilityError(
            "need at least 5 data points", parameters=("a_j1", "i0", "a_j1c", "i0c", "j0_ic")
        )
    cur_i, cur_ic = rows[:, 0], rows[:, 1]
    ic_fixed = bool(np.all(cur_ic == cur_ic[0]))

    if mode == "j1":
        if rows.shape[1] != 3:
            raise DomainError("j1 mode expects rows (I, I_C, J1)")
        target = rows[:, 2]

        def design(i0: float, i0c: float) -> np.ndarray:
            cols = [np.abs(cur_i - i0)]
            if not ic_fixed:
                cols.append(np.abs(cur_ic - i0c))
            cols.append(np.ones_like(cur_i))
            return np.column_stack(cols)

        def ssr(kinks: np.ndarray) -> float:
            d = design(kinks[0], kinks[1] if kinks.size > 1 else 0.0)
            coeff, *_ = np.linalg.lstsq(d, target, rcond=None)
            resid = target - d @ coeff
            return float(resid @ resid)

        grid_i = np.linspace(cur_i.min(), cur_i.max(), 15)
        if ic_fixed:
            seeds = [(np.array([gi]), ssr(np.array([gi]))) for gi in grid_i]
        else:
            grid_c = np.linspace(cur_ic.min(), cur_ic.max(), 15)
            seeds = [
                (np.array([gi, gc]), ssr(np.array([gi, gc])))
                for gi in grid_i
                for gc in grid_c
            ]
        x0 = min(seeds, key=lambda t: t[1])[0]
        res = _optimize.minimize(
            ssr, x0, method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000},
        )
        i0 = float(res.x[0])
        i0c = float(res.x[1]) if not ic_fixed else float(cur_ic[0])
        d = design(i0, i0c if not ic_fixed else 0.0)
        coeff, *_ = np.linalg.lstsq(d, target, rcond=None)
        if ic_fixed:
            a_j1, j0_ic = float(coeff[0]), float(coeff[1])
            a_j1c = 0.0
        else:
            a_j1, a_j1c, j0_ic = map(float, coeff)
        _require_two_sided(cur_i, i0, ("i0", "a_j1", "j0_ic"))
        if not ic_fixed:
            _require_two_sided(cur_ic, i0c, ("i0c", "a_j1c", "j0_ic"))
        model = TwoCoilModel(a_j1=a_j1, i0=i0, a_j1c=a_j1c, i0c=i0c, j0_ic=j0_ic)
        resid = target - np.array([model(ii, cc) for ii, cc in zip(cur_i, cur_ic)])
        return TwoCoilFit(
            model=model,
            rms_residual=float(np.sqrt(np.mean(resid**2))),
            mode=mode,
            compensator_absorbed=ic_fixed,
        )

    if mode == "visibility":
        if beam is None:
            raise DomainError("visibility mode requires a beam model")
        if rows.shape[1] != 4:
            raise DomainError("visibility mode expects rows (I, I_C, visibility, phase)")
        vis_obs, phase_obs = rows[:, 2], rows[:, 3]
        pops = populations_from_chi(chi)

        def predict(j1: float) -> ComplexVisibility:
            comps = {
                s: velocity_average_fixed(
                    beam, 1, -atom.lande_g_factor(s.f) * s.m_f * j1
                )
                for s in ALL_SUBLEVELS
            }
            return fresnel_sum(pops, comps)

        def unpack(x: np.ndarray) -> TwoCoilModel:
            return TwoCoilModel(*map(float, x))

        def cost(x: np.ndarray) -> float:
            model = unpack(x)
            total = 0.0
            for ii, cc, vo, po in zip(cur_i, cur_ic, vis_obs, phase_obs):
                pred = predict(model(ii, cc))
                dphi = math.remainder(pred.phase - po, 2 * math.pi)
                total += (pred.modulus - vo) ** 2 + dphi**2
            return total

        if x0 is None:
            span = max(cur_i.max() - cur_i.min(), 1.0)
            x0 = np.array([1.0 / span, np.median(cur_i), 0.0, np.median(cur_ic), 0.0])
        res = _optimize.minimize(
            cost, np.asarray(x0, dtype=float), method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-20, "maxiter": 8000, "maxfev": 12000},
        )
        model = unpack(res.x)
        _require_two_sided(cur_i, model.i0, ("i0", "a_j1", "j0_ic"))
        return TwoCoilFit(
            model=model,
            rms_residual=float(np.sqrt(cost(res.x) / rows.shape[0])),
            mode=mode,
            compensator_absorbed=ic_fixed,
        )

    raise DomainError(f"unknown fit mode {mode!r}")
