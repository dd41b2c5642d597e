"""Per-sublevel, per-velocity phase shifts from the field and geometry maps.

Sign conventions, fixed once for the whole package:

* the interferometer circuit is traversed "arm l minus arm u", so every
  phase is φ_l − φ_u with φ_i = −(1/ħv) ∫ H_i dz along arm i;
* the beam runs along +z, the capacitor fields along ±x, the magnetic
  field along ±y (``b_sign``), and line integrals along the straight arms
  use dr = ẑ dz;
* the transverse field gradient ∂B/∂x is quoted at the mean trajectory and
  B_l − B_u = −(∂B/∂x) δx(z) with δx ≥ 0 the arm separation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import constants as _const

from .errors import CoverageError, DomainError, TuningWarning
from .geometry import (
    CapacitorGeometry,
    FieldAssembly,
    MagneticFieldProfile,
    ArmSeparationProfile,
    Profile1D,
    TrajectoryDistribution,
    eta_profile,
    integrate_product,
    merge_profiles,
)
from .hyperfine import ALL_SUBLEVELS, AtomModel, Sublevel, magnetic_moment


def sagnac_phase(atom: AtomModel, v: float) -> float:
    """Earth-rotation phase, sagnac_constant / v (rad)."""
    if v <= 0:
        raise DomainError("velocity must be > 0")
    return atom.sagnac_constant / v


def aharonov_bohm_phase(charge: float, flux: float) -> float:
    """q Φ / ħ for a charge encircling a magnetic flux (rad)."""
    return charge * flux / _const.hbar


def stark_phase_ideal(
    atom: AtomModel,
    v_l: float,
    h_l: float,
    l_l: float,
    v_u: float,
    h_u: float,
    l_u: float,
    v: float,
) -> float:
    """Polarizability phase of two ideal plane capacitors (rad).

        φ_S = (2πε₀α/ħv) [V_l² L_l / h_l² − V_u² L_u / h_u²]

    Scales as 1/v and as V²; vanishes for every v when
    V_u/V_l = sqrt(L_l h_u² / (L_u h_l²)).
    """
    if v <= 0:
        raise DomainError("velocity must be > 0")
    if h_l <= 0 or h_u <= 0 or l_l <= 0 or l_u <= 0:
        raise DomainError("capacitor spacings and lengths must be > 0")
    pref = 2.0 * np.pi * atom.epsilon0 * atom.polarizability / (atom.hbar * v)
    return pref * (v_l**2 * l_l / h_l**2 - v_u**2 * l_u / h_u**2)


def stark_phase_arm(cap: CapacitorGeometry, atom: AtomModel, v: float, y: float) -> float:
    """Single-arm phase (2πε₀α/ħv) ∫ E²(y, z) dz over the capacitor window."""
    if v <= 0:
        raise DomainError("velocity must be > 0")
    pref = 2.0 * np.pi * atom.epsilon0 * atom.polarizability / (atom.hbar * v)
    return pref * cap.field_squared_integral(y)


def stark_phase_profile(
    cap_l: CapacitorGeometry,
    cap_u: CapacitorGeometry,
    atom: AtomModel,
    v: float,
    y: float,
) -> float:
    """φ_S(y) = φ_{S,l}(y) − φ_{S,u}(y) from the exact squared-field
    z-integrals of the two (possibly defective) capacitors."""
    return stark_phase_arm(cap_l, atom, v, y) - stark_phase_arm(cap_u, atom, v, y)


@dataclass(frozen=True)
class StarkDefectDecomposition:
    """First-order split of the Stark phase into mean and dispersive parts.

    φ_S(y) ≈ mean_geometric + mean_contact + δφ_g(y) + δφ_c(y), with both
    dispersive profiles averaging to zero under the trajectory weight.
    δφ_g scales like V², δφ_c like V.
    """

    mean_geometric: float  # φ_0l − φ_0u
    mean_contact: float  # ⟨φ_Sc⟩
    delta_geometric: Profile1D  # δφ_Sg(y)
    delta_contact: Profile1D  # δφ_Sc(y)
    phi0_l: float
    phi0_u: float

    @property
    def mean_total(self) -> float:
        return self.mean_geometric + self.mean_contact

    def delta_total(self) -> Profile1D:
        return merge_profiles(self.delta_geometric, self.delta_contact, np.add)


def stark_defect_decomposition(
    cap_l: CapacitorGeometry,
    cap_u: CapacitorGeometry,
    p: TrajectoryDistribution,
    atom: AtomModel,
    v: float,
) -> StarkDefectDecomposition:
    """Mean/dispersion decomposition of the two-capacitor Stark phase.

    Valid to first order in the spacing defect and in V_c/V.  Warns (does
    not fail) when the two mean arm phases differ by more than 1e-3
    relative, since the defect terms then share a slightly wrong mean
    phase φ₀ and voltage V.
    """
    if v <= 0:
        raise DomainError("velocity must be > 0")
    pref = 2.0 * np.pi * atom.epsilon0 * atom.polarizability / (atom.hbar * v)

    def per_arm(cap: CapacitorGeometry):
        eta = eta_profile(cap, p)
        grid = eta.x
        ratio_mean = p.average(
            Profile1D(grid, np.array([cap.geometry_ratio(yy) for yy in grid]))
        )
        phi0 = pref * cap.voltage**2 * ratio_mean
        vc_bar = Profile1D(
            grid, np.array([cap.contact_window_average(yy) for yy in grid])
        )
        return eta, phi0, vc_bar

    eta_l, phi0_l, vcbar_l = per_arm(cap_l)
    eta_u, phi0_u, vcbar_u = per_arm(cap_u)

    mean_vc_l = p.average(vcbar_l)
    mean_vc_u = p.average(vcbar_u)
    phi_mean_l = phi0_l * (1.0 + 2.0 * mean_vc_l / cap_l.voltage)
    phi_mean_u = phi0_u * (1.0 + 2.0 * mean_vc_u / cap_u.voltage)
    if abs(phi_mean_l / phi_mean_u - 1.0) >= 1e-3:
        warnings.warn(
            "arm phases unbalanced beyond 1e-3; shared-mean defect terms "
            f"are first-order only (ratio {phi_mean_l / phi_mean_u:.6f})",
            TuningWarning,
            stacklevel=2,
        )

    phi0 = 0.5 * (phi0_l + phi0_u)
    v_mean = 0.5 * (cap_l.voltage + cap_u.voltage)
    mean_contact = 2.0 * phi0 * (mean_vc_l - mean_vc_u) / v_mean

    delta_g = merge_profiles(eta_l, eta_u, lambda a, b: phi0 * (a - b))
    delta_c = merge_profiles(
        vcbar_l, vcbar_u, lambda a, b: 2.0 * phi0 * (a - b) / v_mean - mean_contact
    )
    return StarkDefectDecomposition(
        mean_geometric=phi0_l - phi0_u,
        mean_contact=mean_contact,
        delta_geometric=delta_g,
        delta_contact=delta_c,
        phi0_l=phi0_l,
        phi0_u=phi0_u,
    )


@dataclass(frozen=True)
class ZeemanIntegrals:
    """The three gradient integrals entering the Zeeman phase polynomial.

    J1 = (μ_B/ħv) ∫ (∂B/∂x) δx dz
    J2 = (g_s−g_i)² μ_B²/(8Aħv) ∫ ∂(B²)/∂x δx dz
    J3 = 3 (g_s−g_i)³ μ_B³/(128A²ħv) ∫ ∂(B³)/∂x δx dz

    For a coil-produced field, J_k scales with the k-th power of the coil
    current.  Signs follow the gradient; none is assumed positive.
    """

    j1: float
    j2: float
    j3: float
    reference_velocity: float

    def scaled_to_velocity(self, v: float) -> "ZeemanIntegrals":
        """Same geometry at another velocity (all J's carry 1/v)."""
        if v <= 0:
            raise DomainError("velocity must be > 0")
        r = self.reference_velocity / v
        return ZeemanIntegrals(self.j1 * r, self.j2 * r, self.j3 * r, v)


def zeeman_integrals(
    field: MagneticFieldProfile,
    sep: ArmSeparationProfile,
    atom: AtomModel,
    v: float,
) -> ZeemanIntegrals:
    """Gradient integrals of the sampled field map against δx(z).

    The separation profile must cover the field support.  Products of the
    piecewise-linear profiles are integrated segment-exactly, so the
    result does not change under sample refinement.
    """
    if v <= 0:
        raise DomainError("velocity must be > 0")
    if not sep.profile.covers(field.gradient):
        raise CoverageError("separation profile does not cover the field support")
    mu_b, hbar = atom.bohr_magneton, atom.hbar
    a = atom.hyperfine_constant
    dg = atom.g_s - atom.g_i
    j1 = mu_b / (hbar * v) * integrate_product(field.gradient, sep.profile)
    j2 = (
        dg**2
        * mu_b**2
        / (8.0 * a * hbar * v)
        * integrate_product(field.gradient_of_power(2), sep.profile)
    )
    j3 = (
        3.0
        * dg**3
        * mu_b**3
        / (128.0 * a**2 * hbar * v)
        * integrate_product(field.gradient_of_power(3), sep.profile)
    )
    return ZeemanIntegrals(j1=j1, j2=j2, j3=j3, reference_velocity=v)


def zeeman_phase(
    s: Sublevel, j: ZeemanIntegrals, lande_g: float | None = None, atom: AtomModel | None = None
) -> float:
    """Zeeman phase polynomial of one sublevel (rad):

        φ_Z = −g_F m_F J1 ± [1 − m_F²/4] J2 ± (3m_F/4)[m_F²/4 − 1] J3

    with + for F=2.  ``lande_g`` overrides the Landé factor (e.g. ∓1/2);
    otherwise it is taken from ``atom``.
    """
    if lande_g is None:
        if atom is None:
            raise DomainError("either lande_g or atom must be given")
        lande_g = atom.lande_g_factor(s.f)
    m = s.m_f
    quad = (3.0 * m / 4.0) * (m * m / 4.0 - 1.0)
    return -lande_g * m * j.j1 + s.branch * ((1.0 - m * m / 4.0) * j.j2 + quad * j.j3)


@dataclass(frozen=True)
class TwoCoilModel:
    """Piecewise-linear model of J1 versus the two coil currents:

        J1(I, I_C) = a_j1 |I − i0| + a_j1c |I_C − i0c| + j0_ic

    Continuous everywhere, with kinks at I = i0 and I_C = i0c where it
    returns j0_ic.  j0_ic is stored as an independent parameter; the
    zero-current limit J1 → J0 of the underlying laboratory field is an
    optional fit constraint, not a hard-wired identity.
    """

    a_j1: float
    i0: float
    a_j1c: float
    i0c: float
    j0_ic: float

    def __call__(self, i: float, i_c: float = 0.0) -> float:
        return (
            self.a_j1 * abs(i - self.i0)
            + self.a_j1c * abs(i_c - self.i0c)
            + self.j0_ic
        )

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.a_j1, self.i0, self.a_j1c, self.i0c, self.j0_ic)


def two_coil_j1(model: TwoCoilModel, i: float, i_c: float = 0.0) -> float:
    """Evaluate the two-coil J1 model at currents (I, I_C)."""
    return model(i, i_c)


def _difference_field_profile(fields: FieldAssembly) -> Profile1D | None:
    """E_l(z) − E_u(z) on the merged grid (None when both arms are off)."""
    e_l, e_u = fields.e_l, fields.e_u
    if e_l is None and e_u is None:
        return None
    if e_l is None:
        return e_u.scaled(-1.0)
    if e_u is None:
        return e_l
    lo = min(e_l.support[0], e_u.support[0])
    hi = max(e_l.support[1], e_u.support[1])
    grid = np.union1d(e_l.x, e_u.x)
    grid = np.union1d(grid, [lo, hi])

    def sample(p: Profile1D, g: np.ndarray) -> np.ndarray:
        out = np.zeros_like(g)
        m = (g >= p.support[0]) & (g <= p.support[1])
        out[m] = p(g[m])
        return out

    return Profile1D(grid, sample(e_l, grid) - sample(e_u, grid))


def aharonov_casher_phase(atom: AtomModel, s: Sublevel, fields: FieldAssembly) -> float:
    """Aharonov-Casher phase −(1/ħc²) ∮ (E × μ)·dr of one sublevel (rad).

    The magnetic moment μ(F, m_F; B(z)) points along the local field
    (adiabatic following), so only the motional-field component parallel
    to B contributes.  Velocity never enters: the line integral is purely
    geometric.  Requires B > 0 wherever either arm field is non-zero.
    """
    diff = _difference_field_profile(fields)
    if diff is None or not np.any(diff.values):
        return 0.0
    if fields.b is None:
        raise DomainError("magnetic field map required: moment direction undefined at B = 0")
    b = fields.b.modulus
    if not b.covers(diff):
        raise DomainError(
            "magnetic field must cover the electric-field support (B = 0 outside)"
        )
    grid = np.union1d(diff.x, b.x[(b.x > diff.support[0]) & (b.x < diff.support[1])])
    mu = np.array([magnetic_moment(atom, s, bb) for bb in b(grid)])
    mu_profile = Profile1D(grid, mu)
    integral = integrate_product(Profile1D(grid, diff(grid)), mu_profile)
    return -fields.b_sign * integral / (atom.hbar * atom.c**2)


def hmw_phase(atom: AtomModel, fields: FieldAssembly) -> float:
    """He-McKellar-Wilkens phase (1/ħ) ∮ (B × d)·dr with d = 4πε₀αE (rad).

    Sublevel- and velocity-independent; odd under B → −B and E → −E.
    """
    diff = _difference_field_profile(fields)
    if diff is None or fields.b is None:
        return 0.0
    b = fields.b.modulus
    if not b.covers(diff):
        raise CoverageError("magnetic field map must cover the electric-field support")
    integral = integrate_product(diff, b)
    return (
        -fields.b_sign
        * 4.0
        * np.pi
        * atom.epsilon0
        * atom.polarizability
        * integral
        / atom.hbar
    )


@dataclass(frozen=True)
class PhaseBreakdown:
    """All phase contributions at one working point, per sublevel.

    ``total`` is the per-sublevel sum of the five components.
    """

    sagnac: float
    stark: float
    zeeman: Mapping[Sublevel, float]
    aharonov_casher: Mapping[Sublevel, float]
    hmw: float
    total: Mapping[Sublevel, float]

    @classmethod
    def compose(
        cls,
        sagnac: float,
        stark: float,
        zeeman: Mapping[Sublevel, float],
        aharonov_casher: Mapping[Sublevel, float],
        hmw: float,
    ) -> "PhaseBreakdown":
        total = {
            s: sagnac + stark + zeeman[s] + aharonov_casher[s] + hmw
            for s in ALL_SUBLEVELS
        }
        return cls(
            sagnac=sagnac,
            stark=stark,
            zeeman=dict(zeeman),
            aharonov_casher=dict(aharonov_casher),
            hmw=hmw,
            total=total,
        )
