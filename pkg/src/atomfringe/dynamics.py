"""Forces on an induced electric dipole moving through static E and B maps.

The adiabatically induced dipole d = 4πε₀α(E + v×B) gives the Lagrangian
L = ½Mv² + 2πε₀α(E + v×B)².  Of the resulting force, the three mixed
E·B pieces are:

    F1 = 4πε₀α (Ė × B),  Ė = (v·∇)E for static fields
    F2 = 4πε₀α ((v×B)·∇) E
    F3 = 4πε₀α (E·∇)(v×B)

With v ∥ z and B ∥ y uniform, F3z = 0 and, because a static E is
curl-free, F1z + F2z = 0: no longitudinal force survives and the
associated interferometer phase is purely geometric.  This module checks
those identities numerically on sampled grids (central differences) and
ships closed-form field generators so oracles never depend on the
discretization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import constants as _const

from .errors import CoverageError, DomainError

EPSILON_0 = _const.epsilon_0
C_LIGHT = _const.c


def motional_fields(e: np.ndarray, b: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First-order rest-frame fields of a particle moving at v ≪ c.

    Returns (B_mot, E_mot) = (−v×E/c², v×B).
    """
    e = np.asarray(e, dtype=float)
    b = np.asarray(b, dtype=float)
    v = np.asarray(v, dtype=float)
    return -np.cross(v, e) / C_LIGHT**2, np.cross(v, b)


def _uniform_spacing(axis: np.ndarray, name: str) -> float:
    d = np.diff(axis)
    if axis.size < 3:
        raise DomainError(f"{name} axis needs at least 3 nodes for central differences")
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise DomainError(f"{name} axis must be uniformly spaced")
    return float(d[0])


@dataclass(frozen=True)
class FieldGrid3D:
    """Static E and B 3-vector fields sampled on a rectilinear grid.

    ``e`` and ``b`` have shape (nx, ny, nz, 3); the axes are uniformly
    spaced (central differences assume it).
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    e: np.ndarray
    b: np.ndarray
    static: bool = True

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        shape = (self.x.size, self.y.size, self.z.size, 3)
        for name in ("e", "b"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DomainError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        if not self.static:
            raise DomainError("only static fields are supported")
        object.__setattr__(self, "_dx", _uniform_spacing(self.x, "x"))
        object.__setattr__(self, "_dy", _uniform_spacing(self.y, "y"))
        object.__setattr__(self, "_dz", _uniform_spacing(self.z, "z"))

    @classmethod
    def from_functions(
        cls,
        x: np.ndarray,
        y: np.ndarray,
        z: np.ndarray,
        e_func: Callable[[np.ndarray], np.ndarray],
        b_func: Callable[[np.ndarray], np.ndarray],
    ) -> "FieldGrid3D":
        """Sample closed-form field functions r(3,) -> vector(3,)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        e = np.empty((x.size, y.size, z.size, 3))
        b = np.empty_like(e)
        for i, xi in enumerate(x):
            for j, yj in enumerate(y):
                for k, zk in enumerate(z):
                    r = np.array([xi, yj, zk])
                    e[i, j, k] = e_func(r)
                    b[i, j, k] = b_func(r)
        return cls(x=x, y=y, z=z, e=e, b=b)

    def nearest_node(self, r: np.ndarray) -> tuple[int, int, int]:
        r = np.asarray(r, dtype=float)
        idx = (
            int(np.argmin(np.abs(self.x - r[0]))),
            int(np.argmin(np.abs(self.y - r[1]))),
            int(np.argmin(np.abs(self.z - r[2]))),
        )
        return idx

    def _interior(self, idx: tuple[int, int, int]) -> None:
        i, j, k = idx
        if not (
            1 <= i <= self.x.size - 2
            and 1 <= j <= self.y.size - 2
            and 1 <= k <= self.z.size - 2
        ):
            raise CoverageError("point lies on or outside the grid boundary; "
                                "central differences need interior nodes")

    def gradient_tensor(self, which: str, idx: tuple[int, int, int]) -> np.ndarray:
        """∂F_j/∂x_i (rows: derivative direction) at a grid node, O(h²)."""
        self._interior(idx)
        f = self.e if which == "e" else self.b
        i, j, k = idx
        grad = np.empty((3, 3))
        grad[0] = (f[i + 1, j, k] - f[i - 1, j, k]) / (2 * self._dx)
        grad[1] = (f[i, j + 1, k] - f[i, j - 1, k]) / (2 * self._dy)
        grad[2] = (f[i, j, k + 1] - f[i, j, k - 1]) / (2 * self._dz)
        return grad

    def curl_e(self, idx: tuple[int, int, int]) -> np.ndarray:
        g = self.gradient_tensor("e", idx)  # g[i, j] = dE_j/dx_i
        return np.array(
            [g[1, 2] - g[2, 1], g[2, 0] - g[0, 2], g[0, 1] - g[1, 0]]
        )


@dataclass(frozen=True)
class WeiForces:
    """The three mixed-field force contributions at one point (newtons)."""

    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    @property
    def longitudinal_pair(self) -> tuple[float, float]:
        return float(self.f1[2]), float(self.f2[2])


def wei_force_components(
    field: FieldGrid3D, r: np.ndarray, v: np.ndarray, alpha: float
) -> WeiForces:
    """F1, F2, F3 at the grid node nearest to ``r`` (central differences).

    ``alpha`` is the polarizability in m³ (Gaussian convention, matching
    d = 4πε₀αE).
    """
    idx = field.nearest_node(r)
    field._interior(idx)
    v = np.asarray(v, dtype=float)
    pref = 4.0 * np.pi * EPSILON_0 * alpha
    ge = field.gradient_tensor("e", idx)  # ge[i, j] = dE_j/dx_i
    gb = field.gradient_tensor("b", idx)
    e_here = field.e[idx]
    b_here = field.b[idx]
    e_dot = v @ ge  # (v·∇)E
    f1 = pref * np.cross(e_dot, b_here)
    vxb = np.cross(v, b_here)
    f2 = pref * (vxb @ ge)  # ((v×B)·∇)E
    # (E·∇)(v×B): derivative of v×B along E, i.e. v × (E·∇)B
    f3 = pref * np.cross(v, e_here @ gb)
    return WeiForces(f1=f1, f2=f2, f3=f3)


@dataclass(frozen=True)
class CancellationReport:
    """Residuals of the longitudinal force cancellation along a path."""

    residuals: np.ndarray  # |F1z+F2z| / (|F1z|+|F2z|+eps) per point
    curl_residuals: np.ndarray  # |curl E| / gradient scale per point
    max_residual: float
    max_curl_residual: float


def cancellation_check(
    field: FieldGrid3D,
    path: np.ndarray,
    v: np.ndarray,
    alpha: float,
    eps: float = 1e-300,
    curl_tolerance: float = 1e-3,
    require_curl_free: bool = True,
) -> CancellationReport:
    """Verify F1z + F2z = 0 point by point along a sampled trajectory.

    The identity assumes ∇×E = 0; the curl residual (relative to the
    local gradient magnitude) is reported and, when ``require_curl_free``,
    must stay below ``curl_tolerance``.  Points must be interior to the
    grid.  The residual shrinks quadratically with the grid spacing for
    smooth curl-free fields.
    """
    path = np.atleast_2d(np.asarray(path, dtype=float))
    res = np.empty(path.shape[0])
    curls = np.empty(path.shape[0])
    for k, r in enumerate(path):
        idx = field.nearest_node(r)
        field._interior(idx)
        ge = field.gradient_tensor("e", idx)
        scale = float(np.max(np.abs(ge)))
        curl = field.curl_e(idx)
        curls[k] = float(np.max(np.abs(curl))) / (scale if scale > 0 else 1.0)
        forces = wei_force_components(field, r, v, alpha)
        f1z, f2z = forces.longitudinal_pair
        res[k] = abs(f1z + f2z) / (abs(f1z) + abs(f2z) + eps)
    if require_curl_free and np.any(curls > curl_tolerance):
        raise DomainError(
            f"electric field is not curl-free within {curl_tolerance} "
            f"(max relative curl {np.max(curls):.3e}); cancellation theorem "
            "does not apply"
        )
    return CancellationReport(
        residuals=res,
        curl_residuals=curls,
        max_residual=float(np.max(res)),
        max_curl_residual=float(np.max(curls)),
    )


# ---------------------------------------------------------------------------
# Closed-form field generators (for grids and for analytic oracles)
# ---------------------------------------------------------------------------


def uniform_field(vector) -> Callable[[np.ndarray], np.ndarray]:
    vec = np.asarray(vector, dtype=float)
    return lambda r: vec.copy()


def line_charge_field(
    linear_density: float, axis: str = "y"
) -> Callable[[np.ndarray], np.ndarray]:
    """E of an infinite straight charged wire along ``axis`` through the
    origin: E = λ/(2πε₀ρ) ρ̂ (curl-free away from the wire)."""
    perp = {"x": (1, 2), "y": (0, 2), "z": (0, 1)}[axis]
    k = linear_density / (2.0 * np.pi * EPSILON_0)

    def e_func(r: np.ndarray) -> np.ndarray:
        out = np.zeros(3)
        a, b = r[perp[0]], r[perp[1]]
        rho2 = a * a + b * b
        if rho2 == 0.0:
            raise DomainError("field requested on the wire")
        out[perp[0]] = k * a / rho2
        out[perp[1]] = k * b / rho2
        return out

    return e_func


def line_charge_gradient(
    linear_density: float, axis: str = "y"
) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form ∂E_j/∂x_i of :func:`line_charge_field` (oracle use)."""
    perp = {"x": (1, 2), "y": (0, 2), "z": (0, 1)}[axis]
    k = linear_density / (2.0 * np.pi * EPSILON_0)

    def grad(r: np.ndarray) -> np.ndarray:
        a, b = r[perp[0]], r[perp[1]]
        rho2 = a * a + b * b
        g = np.zeros((3, 3))
        daa = k * (b * b - a * a) / rho2**2
        dab = k * (-2.0 * a * b) / rho2**2
        i, j = perp
        g[i, i] = daa
        g[i, j] = dab
        g[j, i] = dab
        g[j, j] = -daa
        return g

    return grad


def capacitor_gap_field(
    voltage: float, spacing: float, half_length: float, edge_width: float
) -> tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]:
    """Plane-capacitor field with a smooth roll-off at the guard gaps.

    Derived from the potential Φ = −(V/h)·x·w(z) with
    w(z) = [tanh((z+a)/w) − tanh((z−a)/w)]/2, so E = −∇Φ is curl-free by
    construction.  Returns (field, gradient) closed forms.
    """

    def envelope(z: float) -> tuple[float, float, float]:
        t1 = np.tanh((z + half_length) / edge_width)
        t2 = np.tanh((z - half_length) / edge_width)
        w = 0.5 * (t1 - t2)
        dw = 0.5 * ((1 - t1**2) - (1 - t2**2)) / edge_width
        d2w = (
            0.5
            * (-2 * t1 * (1 - t1**2) + 2 * t2 * (1 - t2**2))
            / edge_width**2
        )
        return w, dw, d2w

    e0 = voltage / spacing

    def e_func(r: np.ndarray) -> np.ndarray:
        w, dw, _ = envelope(r[2])
        return np.array([e0 * w, 0.0, e0 * r[0] * dw])

    def grad(r: np.ndarray) -> np.ndarray:
        w, dw, d2w = envelope(r[2])
        g = np.zeros((3, 3))
        g[2, 0] = e0 * dw  # dE_x/dz
        g[0, 2] = e0 * dw  # dE_z/dx
        g[2, 2] = e0 * r[0] * d2w
        return g

    return e_func, grad
