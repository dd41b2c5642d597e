"""Sampled geometry and field maps of the interferometer.

Longitudinal quantities (arm separation, field modulus, gradients, arm
electric fields) are piecewise-linear sampled profiles.  Integrals of
products of two profiles are evaluated segment-exactly on the merged
breakpoint grid, so refining the sampling of either operand does not
change the result.

Capacitors are described by their mean spacing h̄(y), a dimensionless
spacing defect δ(y, z) whose z-average vanishes at every y, an
inter-guard length L(y) and a contact-potential map V_c(y, z); the local
field is taken to be that of a perfect plane capacitor of the local
spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CoverageError, DomainError


def _as_grid(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DomainError(f"{name} must be a 1-D array with at least 2 samples")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if not np.all(np.diff(arr) > 0):
        raise DomainError(f"{name} must be strictly increasing")
    return arr


@dataclass(frozen=True)
class Profile1D:
    """A sampled function of one coordinate, piecewise-linear in between.

    Queries outside the sampled range raise :class:`CoverageError`;
    there is no extrapolation.
    """

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_grid(self.x, "profile coordinate"))
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.x.shape:
            raise DomainError("profile values must match the coordinate grid shape")
        if not np.all(np.isfinite(vals)):
            raise DomainError("profile values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def __call__(self, x) -> np.ndarray | float:
        x_arr = np.asarray(x, dtype=float)
        lo, hi = self.support
        if np.any(x_arr < lo) or np.any(x_arr > hi):
            raise CoverageError(
                f"coordinate outside sampled range [{lo}, {hi}]"
            )
        out = np.interp(x_arr, self.x, self.values)
        return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out

    def integral(self) -> float:
        """∫ values dx over the support (trapezoid; exact for linear pieces)."""
        return float(np.trapezoid(self.values, self.x))

    def covers(self, other: "Profile1D") -> bool:
        lo, hi = self.support
        olo, ohi = other.support
        return lo <= olo and ohi <= hi

    def scaled(self, factor: float) -> "Profile1D":
        return Profile1D(self.x, self.values * factor)


def integrate_product(pa: Profile1D, pb: Profile1D) -> float:
    """∫ pa(x)·pb(x) dx over the support of ``pa``.

    ``pb`` must cover ``pa``.  The product of two linear segments is a
    quadratic, integrated exactly on the union of both breakpoint grids:
    result is invariant under refinement of either profile's sampling.
    """
    if not pb.covers(pa):
        raise CoverageError(
            f"profile support {pb.support} does not cover {pa.support}"
        )
    lo, hi = pa.support
    inner = pb.x[(pb.x > lo) & (pb.x < hi)]
    grid = np.union1d(pa.x, inner)
    fa = pa(grid)
    fb = pb(grid)
    h = np.diff(grid)
    f0, f1 = fa[:-1], fa[1:]
    g0, g1 = fb[:-1], fb[1:]
    seg = h * (f0 * g0 / 3.0 + (f0 * g1 + f1 * g0) / 6.0 + f1 * g1 / 3.0)
    return float(np.sum(seg))


def merge_profiles(
    pa: Profile1D, pb: Profile1D, op: Callable[[np.ndarray, np.ndarray], np.ndarray]
) -> Profile1D:
    """Pointwise combination of two profiles on their merged grid.

    Both must share support (``pb`` covering ``pa``'s range is enough; the
    result lives on ``pa``'s support).
    """
    if not pb.covers(pa):
        raise CoverageError("profiles do not share support")
    lo, hi = pa.support
    inner = pb.x[(pb.x > lo) & (pb.x < hi)]
    grid = np.union1d(pa.x, inner)
    return Profile1D(grid, op(pa(grid), pb(grid)))


@dataclass(frozen=True)
class ArmSeparationProfile:
    """Arm separation δx(z) ≥ 0, zero at both interferometer ends."""

    profile: Profile1D

    def __post_init__(self):
        v = self.profile.values
        if np.any(v < 0):
            raise DomainError("arm separation must be >= 0")
        peak = float(np.max(v))
        tol = 1e-12 * max(peak, 1.0)
        if abs(v[0]) > tol or abs(v[-1]) > tol:
            raise DomainError("arm separation must vanish at both ends")

    @property
    def peak(self) -> float:
        return float(np.max(self.profile.values))

    @classmethod
    def triangle(
        cls, total_length: float, peak: float, peak_position: float
    ) -> "ArmSeparationProfile":
        """Symmetric piecewise-linear separation: 0 at z=0 and z=L, maximal
        at ``peak_position``."""
        if not (0.0 < peak_position < total_length):
            raise DomainError("peak position must lie strictly inside [0, L]")
        z = np.array([0.0, peak_position, total_length])
        return cls(Profile1D(z, np.array([0.0, peak, 0.0])))

    def __call__(self, z):
        return self.profile(z)


@dataclass(frozen=True)
class MagneticFieldProfile:
    """Longitudinal map of the field modulus and its transverse gradient.

    ``modulus`` is B(z) > 0 on its support (the adiabatic-following
    premise), ``gradient`` is ∂B/∂x(z) at the mean trajectory.  Gradients
    of powers of B may be supplied; otherwise they are derived as
    n B^(n−1) ∂B/∂x and sampled on the merged breakpoints.
    """

    modulus: Profile1D
    gradient: Profile1D
    grad_b2: Profile1D | None = None
    grad_b3: Profile1D | None = None
    coil: str = ""

    def __post_init__(self):
        if np.any(self.modulus.values <= 0):
            raise DomainError("field modulus must be > 0 everywhere on its support")

    def gradient_of_power(self, n: int) -> Profile1D:
        """∂(Bⁿ)/∂x as a sampled profile (n = 1, 2, 3)."""
        if n == 1:
            return self.gradient
        if n == 2 and self.grad_b2 is not None:
            return self.grad_b2
        if n == 3 and self.grad_b3 is not None:
            return self.grad_b3
        if n not in (2, 3):
            raise DomainError(f"unsupported power {n}")
        return merge_profiles(
            self.gradient, self.modulus, lambda g, b: n * b ** (n - 1) * g
        )

    @classmethod
    def uniform_window(
        cls,
        z_lo: float,
        z_hi: float,
        b_modulus: float,
        db_dx: float = 0.0,
        coil: str = "",
    ) -> "MagneticFieldProfile":
        z = np.array([z_lo, z_hi])
        return cls(
            modulus=Profile1D(z, np.full(2, b_modulus)),
            gradient=Profile1D(z, np.full(2, db_dx)),
            coil=coil,
        )


@dataclass(frozen=True)
class TrajectoryDistribution:
    """Normalized transverse weight P(y): P ≥ 0 and ∫P dy = 1."""

    profile: Profile1D

    def __post_init__(self):
        if np.any(self.profile.values < 0):
            raise DomainError("trajectory weight must be >= 0")
        norm = self.profile.integral()
        if abs(norm - 1.0) > 1e-10:
            raise DomainError(f"trajectory weight must integrate to 1, got {norm}")

    @classmethod
    def normalized(cls, y, weights) -> "TrajectoryDistribution":
        p = Profile1D(y, weights)
        norm = p.integral()
        if norm <= 0:
            raise DomainError("weights must have positive integral")
        return cls(Profile1D(p.x, p.values / norm))

    def average(self, other: Profile1D) -> float:
        """⟨f⟩ = ∫P(y) f(y) dy (``other`` must cover the support of P)."""
        return integrate_product(self.profile, other)

    def __call__(self, y):
        return self.profile(y)


def _rational_sq_integral(n0: float, n1: float, h0: float, h1: float, w: float) -> float:
    """∫₀ʷ (N/H)² dt with N = n0 + n1·t and H = h0 + h1·t, exactly.

    Write N = αH + β with α = n1/h1, β = n0 − α·h0 (constant); then
    ∫(N/H)² = α²w + (2αβ/h1)·ln(H(w)/H0) + (β²/h1)(1/H0 − 1/Hw).
    A Taylor form takes over when the spacing is nearly constant.
    """
    if abs(h1) * w < 1e-9 * abs(h0):
        # nearly constant spacing: expand 1/H² to second order in h1 t/h0
        s = h1 / h0

        def moment(k: int) -> float:
            # ∫ N² t^k dt
            return (
                n0 * n0 * w ** (k + 1) / (k + 1)
                + 2 * n0 * n1 * w ** (k + 2) / (k + 2)
                + n1 * n1 * w ** (k + 3) / (k + 3)
            )

        return (moment(0) - 2 * s * moment(1) + 3 * s * s * moment(2)) / (h0 * h0)
    alpha = n1 / h1
    beta = n0 - alpha * h0
    hw = h0 + h1 * w
    return (
        alpha * alpha * w
        + 2.0 * alpha * beta / h1 * math.log(hw / h0)
        + beta * beta / h1 * (1.0 / h0 - 1.0 / hw)
    )


@dataclass(frozen=True)
class CapacitorGeometry:
    """Plane capacitor with slowly varying spacing and contact potentials.

    The local spacing is h(y, z) = h̄(y)[1 + δ(y, z)] where by construction
    the z-average of δ over the inter-guard window L(y) vanishes at every
    y.  The window is centred on the midpoint of the sampled z range.
    ``orientation`` is the sign of the transverse field produced by a
    positive applied voltage (+x or −x), so two capacitors sharing a
    septum carry opposite orientations.
    """

    arm: str
    y: np.ndarray
    z: np.ndarray
    mean_spacing: np.ndarray  # h̄(y), m
    defect: np.ndarray  # δ(y, z), dimensionless, shape (ny, nz)
    length: np.ndarray  # L(y), m
    contact: np.ndarray  # V_c(y, z), V, shape (ny, nz)
    voltage: float  # applied V, volts
    orientation: int = +1
    max_defect: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "y", _as_grid(self.y, "capacitor y grid"))
        object.__setattr__(self, "z", _as_grid(self.z, "capacitor z grid"))
        ny, nz = self.y.size, self.z.size
        for name in ("mean_spacing", "length"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (ny,):
                raise DomainError(f"{name} must have shape (ny,)")
            object.__setattr__(self, name, arr)
        for name in ("defect", "contact"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (ny, nz):
                raise DomainError(f"{name} must have shape (ny, nz)")
            object.__setattr__(self, name, arr)
        if np.any(self.mean_spacing <= 0):
            raise DomainError("mean spacing must be > 0")
        if np.max(np.abs(self.defect)) > self.max_defect:
            raise DomainError(
                f"|defect| exceeds the small-defect bound {self.max_defect}"
            )
        if self.orientation not in (-1, 1):
            raise DomainError("orientation must be +1 or -1")
        span = self.z[-1] - self.z[0]
        if np.any(self.length <= 0) or np.any(self.length > span + 1e-12):
            raise DomainError("inter-guard length must lie in (0, z-span]")
        for iy in range(ny):
            mean = self._window_average_row(self.defect[iy], self.length[iy])
            if abs(mean) > 1e-10:
                raise DomainError(
                    f"z-average of the spacing defect must vanish (y index {iy}: {mean})"
                )

    # -- window helpers ------------------------------------------------

    @property
    def z_center(self) -> float:
        return float(0.5 * (self.z[0] + self.z[-1]))

    def _window(self, length: float) -> tuple[float, float]:
        zc = self.z_center
        return zc - 0.5 * length, zc + 0.5 * length

    def _row_profile(self, grid_values: np.ndarray, y: float) -> np.ndarray:
        """Values of a (ny, nz) grid linearly interpolated to height y."""
        iy = np.searchsorted(self.y, y)
        if y < self.y[0] or y > self.y[-1]:
            raise CoverageError(f"y = {y} outside capacitor grid")
        if iy == 0:
            return grid_values[0].astype(float)
        i0 = min(iy, self.y.size - 1)
        t = (y - self.y[i0 - 1]) / (self.y[i0] - self.y[i0 - 1])
        return (1.0 - t) * grid_values[i0 - 1] + t * grid_values[i0]

    def _window_average_row(self, row: np.ndarray, length: float) -> float:
        lo, hi = self._window(length)
        return _window_integral(self.z, row, lo, hi) / length

    # -- public surface -------------------------------------------------

    def spacing_at(self, y: float) -> float:
        return float(np.interp(y, self.y, self.mean_spacing))

    def length_at(self, y: float) -> float:
        return float(np.interp(y, self.y, self.length))

    def field(self, y: float, z: float, voltage: float | None = None) -> float:
        """Signed transverse field E_x(y, z) = ±(V + V_c)/h in V/m."""
        if z < self.z[0] or z > self.z[-1]:
            raise CoverageError(f"z = {z} outside capacitor grid")
        v = self.voltage if voltage is None else voltage
        delta = float(np.interp(z, self.z, self._row_profile(self.defect, y)))
        vc = float(np.interp(z, self.z, self._row_profile(self.contact, y)))
        h = self.spacing_at(y) * (1.0 + delta)
        return self.orientation * (v + vc) / h

    def field_squared_integral(self, y: float, voltage: float | None = None) -> float:
        """∫ E²(y, z) dz over the inter-guard window at height y (V²/m).

        Exact for the bilinear grid interpolation: on each z segment the
        integrand is (linear/linear)², integrated in closed form.
        """
        v = self.voltage if voltage is None else voltage
        delta_row = self._row_profile(self.defect, y)
        vc_row = self._row_profile(self.contact, y)
        hbar_y = self.spacing_at(y)
        lo, hi = self._window(self.length_at(y))
        if lo < self.z[0] - 1e-12 or hi > self.z[-1] + 1e-12:
            raise CoverageError("integration window outside sampled z range")
        total = 0.0
        z = self.z
        for i in range(z.size - 1):
            a, b = max(z[i], lo), min(z[i + 1], hi)
            if b <= a:
                continue
            seg = z[i + 1] - z[i]
            ta, tb = (a - z[i]) / seg, (b - z[i]) / seg
            n_a = v + vc_row[i] + (vc_row[i + 1] - vc_row[i]) * ta
            n_b = v + vc_row[i] + (vc_row[i + 1] - vc_row[i]) * tb
            h_a = hbar_y * (1.0 + delta_row[i] + (delta_row[i + 1] - delta_row[i]) * ta)
            h_b = hbar_y * (1.0 + delta_row[i] + (delta_row[i + 1] - delta_row[i]) * tb)
            w = b - a
            total += _rational_sq_integral(n_a, (n_b - n_a) / w, h_a, (h_b - h_a) / w, w)
        return total

    def contact_window_average(self, y: float) -> float:
        """z-average of the contact potential over the window at height y."""
        vc_row = self._row_profile(self.contact, y)
        return self._window_average_row(vc_row, self.length_at(y))

    def geometry_ratio(self, y: float) -> float:
        """L(y)/h̄²(y), the geometry factor of the per-arm Stark phase."""
        h = self.spacing_at(y)
        return self.length_at(y) / (h * h)

    @classmethod
    def ideal(
        cls,
        arm: str,
        voltage: float,
        spacing: float,
        length: float,
        orientation: int = +1,
        half_width_y: float = 2.0e-3,
    ) -> "CapacitorGeometry":
        """Defect-free, contact-free capacitor of constant spacing/length."""
        y = np.array([-half_width_y, half_width_y])
        z = np.array([-0.5 * length, 0.5 * length])
        zeros = np.zeros((2, 2))
        return cls(
            arm=arm,
            y=y,
            z=z,
            mean_spacing=np.full(2, spacing),
            defect=zeros,
            length=np.full(2, length),
            contact=zeros.copy(),
            voltage=voltage,
            orientation=orientation,
        )

    @classmethod
    def from_spacing_map(
        cls,
        arm: str,
        y,
        z,
        spacing,
        length,
        contact,
        voltage: float,
        orientation: int = +1,
        max_defect: float = 0.05,
    ) -> "CapacitorGeometry":
        """Build from a raw spacing map h(y, z); h̄(y) is the window average
        of each row so the defect is centred by construction."""
        y = _as_grid(y, "capacitor y grid")
        z = _as_grid(z, "capacitor z grid")
        spacing = np.asarray(spacing, dtype=float)
        length = np.asarray(length, dtype=float)
        zc = 0.5 * (z[0] + z[-1])
        mean = np.empty(y.size)
        for iy in range(y.size):
            lo, hi = zc - 0.5 * length[iy], zc + 0.5 * length[iy]
            mean[iy] = _window_integral(z, spacing[iy], lo, hi) / length[iy]
        defect = spacing / mean[:, None] - 1.0
        return cls(
            arm=arm,
            y=y,
            z=z,
            mean_spacing=mean,
            defect=defect,
            length=length,
            contact=np.asarray(contact, dtype=float),
            voltage=voltage,
            orientation=orientation,
            max_defect=max_defect,
        )


def _window_integral(z: np.ndarray, row: np.ndarray, lo: float, hi: float) -> float:
    """∫row dz over [lo, hi] with linear interpolation at the window edges."""
    if lo < z[0] - 1e-12 or hi > z[-1] + 1e-12:
        raise CoverageError("integration window outside sampled z range")
    lo, hi = max(lo, z[0]), min(hi, z[-1])
    inner = z[(z > lo) & (z < hi)]
    grid = np.concatenate(([lo], inner, [hi]))
    vals = np.interp(grid, z, row)
    return float(np.trapezoid(vals, grid))


def effective_length(half_length_a: float, spacing_h: float) -> float:
    """Effective capacitor length 2a − 2h/π (guard-ring end correction).

    Requires a > h/π so the result is positive.
    """
    if spacing_h <= 0:
        raise DomainError("spacing must be > 0")
    out = 2.0 * half_length_a - 2.0 * spacing_h / np.pi
    if out <= 0:
        raise DomainError("effective length must be > 0 (need a > h/pi)")
    return out


def defective_field(cap: CapacitorGeometry, y: float, z: float) -> float:
    """Local capacitor field (V + V_c(y, z))/h(y, z), bilinear in the grids."""
    return cap.field(y, z)


def eta_profile(cap: CapacitorGeometry, p: TrajectoryDistribution) -> Profile1D:
    """Relative y-variation of L/h̄²:  L(y)/h̄²(y) = ⟨L/h̄²⟩ (1 + η(y)).

    ⟨·⟩ is the P(y)-weighted average; ⟨η⟩ = 0 by construction.
    """
    lo, hi = p.profile.support
    if lo < cap.y[0] or hi > cap.y[-1]:
        raise CoverageError("capacitor grid does not cover the trajectory support")
    grid = np.union1d(cap.y[(cap.y > lo) & (cap.y < hi)], p.profile.x)
    ratio = np.array([cap.geometry_ratio(yy) for yy in grid])
    ratio_profile = Profile1D(grid, ratio)
    mean = p.average(ratio_profile)
    return Profile1D(grid, ratio / mean - 1.0)


@dataclass(frozen=True)
class FieldAssembly:
    """Everything the phase formulas need along the beam.

    ``e_l``/``e_u`` are the signed transverse electric fields on the two
    arms; ``b`` the common magnetic map with ``b_sign`` giving the field
    orientation along the vertical axis; ``separation`` the arm spacing.
    Capacitor objects and a trajectory weight are optional refinements.
    """

    separation: ArmSeparationProfile
    e_l: Profile1D | None = None
    e_u: Profile1D | None = None
    b: MagneticFieldProfile | None = None
    b_sign: int = +1
    cap_l: CapacitorGeometry | None = None
    cap_u: CapacitorGeometry | None = None
    trajectory: TrajectoryDistribution | None = None

    def __post_init__(self):
        if self.b_sign not in (-1, 1):
            raise DomainError("b_sign must be +1 or -1")
