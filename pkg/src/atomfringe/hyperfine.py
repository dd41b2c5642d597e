"""Hyperfine-Zeeman structure of a ²S₁/₂ alkali ground state with I = 3/2.

The Hamiltonian is

    H = A I·S − g_s μ_B S·B − g_i μ_B I·B

with the electron-spin g-factor g_s taken *negative* and the nuclear
g-factor g_i (in Bohr-magneton units) positive, so that the dimensionless
field parameter

    X = −(g_s − g_i) μ_B B / (2A)

is positive for B > 0.  For lithium-7 the slope is X ≈ 34.9 B (B in tesla).
The eight (F, m_F) energies follow from the exact two-state
diagonalization (Breit-Rabi formula); for X < 1 the +/− radical branch
belongs to F = 2 / F = 1, and larger fields are rejected rather than
re-labelled.

All quantities are SI: energies in joules, fields in tesla.  Frequency
units appear only in presets and docstrings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as _const

from .errors import DomainError

BOHR_MAGNETON = _const.physical_constants["Bohr magneton"][0]  # J/T
PLANCK = _const.h
HBAR = _const.hbar
EPSILON_0 = _const.epsilon_0
SPEED_OF_LIGHT = _const.c
ATOMIC_MASS = _const.physical_constants["atomic mass constant"][0]
BOHR_RADIUS = _const.physical_constants["Bohr radius"][0]

CHI_MIN = -0.2  # population positivity bound, F=1 empty
CHI_MAX = 1.0 / 3.0  # F=2 empty


@dataclass(frozen=True, order=True)
class Sublevel:
    """One (F, m_F) ground-state sublevel.  F ∈ {1, 2}, |m_F| ≤ F."""

    f: int
    m_f: int

    def __post_init__(self):
        if self.f not in (1, 2):
            raise DomainError(f"F must be 1 or 2, got {self.f}")
        if abs(self.m_f) > self.f:
            raise DomainError(f"|m_F| must be <= F, got m_F={self.m_f} for F={self.f}")

    @property
    def branch(self) -> int:
        """Radical-branch sign for X < 1: +1 for F=2, −1 for F=1."""
        return 1 if self.f == 2 else -1

    def __str__(self) -> str:
        return f"F{self.f}m{self.m_f}"


#: The 8 sublevels in canonical (F, m_F) order.
ALL_SUBLEVELS: tuple[Sublevel, ...] = tuple(
    Sublevel(f, m) for f in (1, 2) for m in range(-f, f + 1)
)


@dataclass(frozen=True)
class AtomModel:
    """Species parameters plus the physical constants the formulas need.

    Parameters
    ----------
    hyperfine_constant:
        Fermi-contact constant A in joules.  The zero-field F=1/F=2
        splitting is 2A.
    g_s, g_i:
        Electronic and nuclear g-factors, both in Bohr-magneton units,
        signed so that X = −(g_s − g_i) μ_B B / (2A) > 0 for B > 0.
    polarizability:
        Static electric polarizability α in m³ (Gaussian convention,
        Stark energy −2πε₀αE²).
    mass:
        Atomic mass in kg.
    sagnac_constant:
        Earth-rotation Sagnac coefficient in rad·(m/s): φ = const / v.
        Specific to one interferometer geometry and latitude.
    hfs_angular_frequency:
        ω_HFS = 2A/ħ in rad/s.  Derived when omitted; validated against
        the stored A when given.
    """

    hyperfine_constant: float
    g_s: float
    g_i: float
    polarizability: float
    mass: float
    sagnac_constant: float = 688.0
    bohr_magneton: float = BOHR_MAGNETON
    hbar: float = HBAR
    epsilon0: float = EPSILON_0
    c: float = SPEED_OF_LIGHT
    hfs_angular_frequency: float | None = None

    def __post_init__(self):
        if self.hyperfine_constant <= 0:
            raise DomainError("hyperfine constant A must be > 0")
        if self.mass <= 0:
            raise DomainError("mass must be > 0")
        if self.polarizability <= 0:
            raise DomainError("polarizability must be > 0")
        derived = 2.0 * self.hyperfine_constant / self.hbar
        if self.hfs_angular_frequency is None:
            object.__setattr__(self, "hfs_angular_frequency", derived)
        elif not math.isclose(self.hfs_angular_frequency, derived, rel_tol=1e-12):
            raise DomainError(
                "hfs_angular_frequency inconsistent with 2A/hbar: "
                f"{self.hfs_angular_frequency} vs {derived}"
            )

    @property
    def x_slope(self) -> float:
        """dX/dB = −(g_s − g_i) μ_B / (2A), in 1/T (≈ 34.9 for ⁷Li)."""
        return -(self.g_s - self.g_i) * self.bohr_magneton / (2.0 * self.hyperfine_constant)

    def x_parameter(self, b_field: float) -> float:
        """Dimensionless field parameter X for field modulus ``b_field`` (T)."""
        if b_field < 0:
            raise DomainError("field modulus must be >= 0")
        return self.x_slope * b_field

    def lande_g_factor(self, f: int) -> float:
        """Weak-field Landé factor of level F.

        g(F=2) = (g_s + 3 g_i)/4 and g(F=1) = (−g_s + 5 g_i)/4; with the
        sign convention of this module these come out ≈ −0.4997 and
        ≈ +0.5021 respectively (magnitudes match the usual tables).
        """
        if f == 2:
            return (self.g_s + 3.0 * self.g_i) / 4.0
        if f == 1:
            return (-self.g_s + 5.0 * self.g_i) / 4.0
        raise DomainError(f"F must be 1 or 2, got {f}")

    def slope_g_factor(self, f: int) -> float:
        """Leading coefficient of the X-expansion of E(F, m_F)/A.

        Defined so that dE/(A dX) = −g m_F + O(X) *exactly*, nuclear term
        included: g = ∓1/2 − 2 g_i/(g_s − g_i) with − for F=2.  Differs
        from the Landé factor by the factor −(g_s − g_i)/2 ≈ 1.0018 that
        relates the X and B scales.
        """
        half = -0.5 if f == 2 else 0.5
        return half - 2.0 * self.g_i / (self.g_s - self.g_i)


#: Default lithium-7 parameter set.  A is fixed by the 803.504 MHz
#: ground-state splitting (A/h = 401.752 MHz); polarizability 24.34e-30 m³;
#: Sagnac coefficient 688 rad·(m/s) for the reference interferometer.
LI7 = AtomModel(
    hyperfine_constant=PLANCK * 401.7520433e6,
    g_s=-2.0023193,
    g_i=+1.182213e-3,
    polarizability=24.34e-30,
    mass=7.0160034366 * ATOMIC_MASS,
    sagnac_constant=688.0,
)


def _radical(m_f: int, x: float) -> float:
    return math.sqrt(1.0 + m_f * x + x * x)


def breit_rabi_energy(atom: AtomModel, s: Sublevel, b_field: float) -> float:
    """Exact hyperfine-Zeeman energy E(F, m_F, B) in joules.

    E = −A/4 − g_i μ_B m_F B ± A √(1 + m_F X + X²), + for F=2.

    Raises :class:`DomainError` for B < 0 or X ≥ 1 (where the branch/F
    association is no longer guaranteed).
    """
    x = atom.x_parameter(b_field)
    if x >= 1.0:
        raise DomainError(f"X = {x:.3f} >= 1: branch/F association breaks; refusing")
    a = atom.hyperfine_constant
    return (
        -a / 4.0
        - atom.g_i * atom.bohr_magneton * s.m_f * b_field
        + s.branch * a * _radical(s.m_f, x)
    )


def zeeman_slope_expansion(atom: AtomModel, s: Sublevel, x: float) -> float:
    """Quadratic expansion of dE/(A dX) around X = 0.

        dE/(A dX) ≈ −g m_F ± [1 − m_F²/4] X ± (3 m_F/4)[m_F²/4 − 1] X²

    with the slope g-factors of :meth:`AtomModel.slope_g_factor` so the
    constant term is exact.  The expansion terminates for F=2, m_F=±2
    (the radical is 1 ± X there); on |X| ≤ 0.5 its accuracy is a few
    percent for m_F = ±1 and ~12 % for m_F = 0.
    """
    if abs(x) >= 1.0:
        raise DomainError("expansion requires |X| < 1")
    m = s.m_f
    g = atom.slope_g_factor(s.f)
    quad = (3.0 * m / 4.0) * (m * m / 4.0 - 1.0)
    return -g * m + s.branch * ((1.0 - m * m / 4.0) * x + quad * x * x)


def magnetic_moment(atom: AtomModel, s: Sublevel, b_field: float) -> float:
    """Field-dependent magnetic moment of one sublevel, in J/T.

    Electron-spin part of −dE/dB, exact (non-expanded):

        μ(F, m_F) = ∓ [−(g_s − g_i)/2] μ_B (m_F + 2X) / (2 √(1 + m_F X + X²))

    with − for F=2.  The small nuclear contribution +g_i μ_B m_F is *not*
    included; add it to recover the full −dE/dB.  For the stretch states
    (F=2, m_F=±2) the ratio is ±1 for every X, so |μ| sits at
    |g_s − g_i|/2 ≈ 1.0018 Bohr magnetons.
    """
    x = atom.x_parameter(b_field)
    if x >= 1.0:
        raise DomainError(f"X = {x:.3f} >= 1: branch/F association breaks; refusing")
    electron_scale = -(atom.g_s - atom.g_i) / 2.0 * atom.bohr_magneton  # ≈ +1.0018 μ_B
    return -s.branch * electron_scale * (s.m_f + 2.0 * x) / (2.0 * _radical(s.m_f, x))


def _spin_matrices(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) in the |j, m⟩ basis ordered m = j ... −j, units of ħ=1."""
    dim = int(round(2 * j)) + 1
    m = j - np.arange(dim)
    jz = np.diag(m)
    # raising operator: <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
    jp = np.zeros((dim, dim))
    for k in range(1, dim):
        jp[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jx = (jp + jp.T) / 2.0
    jy = (jp - jp.T) / (2.0j)
    return jx, jy, jz


def hyperfine_zeeman_hamiltonian(atom: AtomModel, b_field: float) -> np.ndarray:
    """8×8 matrix of A I·S − g_s μ_B S_z B − g_i μ_B I_z B (B along z).

    Basis: |m_I⟩ ⊗ |m_S⟩ with m_I = 3/2 ... −3/2, m_S = 1/2, −1/2.
    Hermitian; its eigenvalues are the Breit-Rabi energies.
    """
    ix, iy, iz = _spin_matrices(1.5)
    sx, sy, sz = _spin_matrices(0.5)
    e2 = np.eye(2)
    e4 = np.eye(4)
    idots = (
        np.kron(ix, sx) + np.kron(iy, sy) + np.kron(iz, sz)
    )
    h = (
        atom.hyperfine_constant * idots
        - atom.g_s * atom.bohr_magneton * b_field * np.kron(e4, sz)
        - atom.g_i * atom.bohr_magneton * b_field * np.kron(iz, e2)
    )
    return h


def population_unbalance(beta: float, delta_l: float, omega_hfs: float) -> float:
    """Detected-population unbalance χ of the two hyperfine levels.

    Simple transmission model of a three-grating interferometer whose
    diffraction amplitude per grating is sin(β/δ) with an F-dependent
    detuning δ(F=1) = δ_L, δ(F=2) = δ_L + ω_HFS (all rad/s):

        χ = [sin⁴(β/δ_L) − sin⁴(β/(δ_L+ω_HFS))]
            / [3 sin⁴(β/δ_L) + 5 sin⁴(β/(δ_L+ω_HFS))]

    Always within [−1/5, 1/3].  β = 0 returns 0 (both sin⁴ vanish at the
    same quartic order); other exact 0/0 points are rejected.
    """
    if beta < 0:
        raise DomainError("beta must be >= 0")
    if delta_l <= 0 or delta_l + omega_hfs <= 0:
        raise DomainError("detunings must stay away from the resonance poles (> 0)")
    if beta == 0.0:
        return 0.0
    s1 = math.sin(beta / delta_l) ** 4
    s2 = math.sin(beta / (delta_l + omega_hfs)) ** 4
    den = 3.0 * s1 + 5.0 * s2
    if den == 0.0:
        raise DomainError("transmission vanishes for both hyperfine levels")
    return (s1 - s2) / den


@dataclass(frozen=True)
class SublevelPopulations:
    """Normalized detected populations of the 8 sublevels.

    All F=1 entries are equal and all F=2 entries are equal (one-parameter
    unbalance model); probabilities sum to 1.
    """

    p_f1: float
    p_f2: float

    def __post_init__(self):
        if self.p_f1 < 0 or self.p_f2 < 0:
            raise DomainError("populations must be >= 0")
        total = 3.0 * self.p_f1 + 5.0 * self.p_f2
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"populations must sum to 1, got {total}")

    def probability(self, s: Sublevel) -> float:
        return self.p_f1 if s.f == 1 else self.p_f2

    @property
    def chi(self) -> float:
        """Unbalance parameter: P(F=1) = (1+5χ)/8, P(F=2) = (1−3χ)/8."""
        return (8.0 * self.p_f1 - 1.0) / 5.0

    def items(self):
        for s in ALL_SUBLEVELS:
            yield s, self.probability(s)


def populations_from_chi(chi: float) -> SublevelPopulations:
    """Populations (1+5χ)/8 for the 3 F=1 sublevels, (1−3χ)/8 for the 5
    F=2 sublevels.  χ must lie in [−1/5, 1/3]."""
    if not (CHI_MIN <= chi <= CHI_MAX):
        raise DomainError(f"chi must lie in [-1/5, 1/3], got {chi}")
    return SublevelPopulations(p_f1=(1.0 + 5.0 * chi) / 8.0, p_f2=(1.0 - 3.0 * chi) / 8.0)


def diamagnetic_energy_estimate(
    b_field: float, r2_total: float = 18.6 * BOHR_RADIUS**2
) -> float:
    """Order-of-magnitude diamagnetic shift e²⟨r⊥²⟩B²/(8 m_e), in joules.

    ⟨r⊥²⟩ = (2/3) of the summed electron ⟨r²⟩ (default: lithium).  The
    shift is sublevel-independent (~2.4e−32 J at 14 mT) and drops out of
    any arm-difference phase; provided for documentation only.
    """
    r_perp2 = (2.0 / 3.0) * r2_total
    return _const.e**2 * r_perp2 * b_field**2 / (8.0 * _const.m_e)
