import math

import numpy as np
import pytest
from scipy import constants as C

from atomfringe.dynamics import (
    FieldGrid3D,
    cancellation_check,
    capacitor_gap_field,
    line_charge_field,
    line_charge_gradient,
    motional_fields,
    uniform_field,
    wei_force_components,
)
from atomfringe.errors import CoverageError, DomainError
from atomfringe.hyperfine import LI7

ALPHA = LI7.polarizability
V_BEAM = np.array([0.0, 0.0, 1065.0])


class TestMotionalFields:
    def test_transverse_electric(self):
        e = np.array([0.8e6, 0.0, 0.0])
        b_mot, _ = motional_fields(e, np.zeros(3), V_BEAM)
        assert np.linalg.norm(b_mot) == pytest.approx(0.8e6 * 1065.0 / C.c**2, rel=1e-12)
        assert np.linalg.norm(b_mot) == pytest.approx(9.5e-9, rel=0.02)

    def test_parallel_field_gives_nothing(self):
        e = np.array([0.0, 0.0, 3e5])
        b_mot, _ = motional_fields(e, np.zeros(3), V_BEAM)
        assert np.allclose(b_mot, 0.0)

    def test_motional_electric(self):
        b = np.array([0.0, 14e-3, 0.0])
        _, e_mot = motional_fields(np.zeros(3), b, V_BEAM)
        assert np.linalg.norm(e_mot) == pytest.approx(1065.0 * 14e-3, rel=1e-12)

    def test_directions(self):
        e = np.array([1.0, 0.0, 0.0])
        b_mot, _ = motional_fields(e, np.zeros(3), V_BEAM)
        # -v x E = -(v z) x (E x) = -vE y
        assert b_mot[1] < 0 and b_mot[0] == 0 and b_mot[2] == 0


def _grid(e_func, b_func, spacing=1e-4, nx=5, ny=3, nz=31, x0=0.05):
    x = x0 + spacing * (np.arange(nx) - nx // 2)
    y = spacing * (np.arange(ny) - ny // 2)
    z = spacing * (np.arange(nz) - nz // 2)
    return FieldGrid3D.from_functions(x, y, z, e_func, b_func)


class TestWeiForces:
    def test_uniform_fields_no_force(self):
        grid = _grid(uniform_field([1e5, 0, 0]), uniform_field([0, 14e-3, 0]))
        forces = wei_force_components(grid, np.array([0.05, 0.0, 0.0]), V_BEAM, ALPHA)
        assert np.allclose(forces.f1, 0.0)
        assert np.allclose(forces.f2, 0.0)
        assert np.allclose(forces.f3, 0.0)

    def test_uniform_b_longitudinal_cancellation(self):
        grid = _grid(line_charge_field(2.8e-7), uniform_field([0, 14e-3, 0]))
        forces = wei_force_components(grid, np.array([0.05, 0.0, 0.0]), V_BEAM, ALPHA)
        f1z, f2z = forces.longitudinal_pair
        assert np.allclose(forces.f3, 0.0)  # B uniform
        assert abs(f1z + f2z) <= 1e-5 * (abs(f1z) + abs(f2z))

    def test_wire_field_matches_analytic_gradient_oracle(self):
        lam = 2.8e-7
        grad_oracle = line_charge_gradient(lam)
        b0 = np.array([0.0, 14e-3, 0.0])
        pref = 4 * math.pi * C.epsilon_0 * ALPHA
        r = np.array([0.05, 0.0, 5e-4])
        for spacing in (2e-4, 1e-4, 5e-5):
            grid = _grid(line_charge_field(lam), uniform_field(b0), spacing=spacing)
            forces = wei_force_components(grid, r, V_BEAM, ALPHA)
            idx = grid.nearest_node(r)
            node = np.array([grid.x[idx[0]], grid.y[idx[1]], grid.z[idx[2]]])
            ge = grad_oracle(node)
            f1_want = pref * np.cross(V_BEAM @ ge, b0)
            f2_want = pref * (np.cross(V_BEAM, b0) @ ge)
            scale = np.max(np.abs(f1_want))
            assert np.allclose(forces.f1, f1_want, atol=30 * spacing**2 * scale / 1e-8)
            assert np.allclose(forces.f2, f2_want, atol=30 * spacing**2 * scale / 1e-8)

    def test_second_order_convergence(self):
        lam = 2.8e-7
        grad_oracle = line_charge_gradient(lam)
        r = np.array([0.05, 0.0, 0.0])
        errs = []
        for spacing in (4e-4, 2e-4, 1e-4):
            grid = _grid(line_charge_field(lam), uniform_field([0, 14e-3, 0]), spacing=spacing)
            ge_fd = grid.gradient_tensor("e", grid.nearest_node(r))
            errs.append(np.max(np.abs(ge_fd - grad_oracle(r))))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)

    def test_boundary_rejected(self):
        grid = _grid(uniform_field([1e5, 0, 0]), uniform_field([0, 1e-2, 0]))
        with pytest.raises(CoverageError):
            wei_force_components(grid, np.array([0.0502, 0.0, 0.0]), V_BEAM, ALPHA)


class TestCancellationCheck:
    def _wire_grid(self, spacing):
        nz = int(round(3e-3 / spacing)) | 1
        return _grid(
            line_charge_field(2.8e-7),
            uniform_field([0, 14e-3, 0]),
            spacing=spacing,
            nz=nz,
        )

    def test_line_charge_residual_and_convergence(self):
        residuals = {}
        for spacing in (5e-5, 2.5e-5):
            grid = self._wire_grid(spacing)
            z_path = grid.z[2:-2:5]
            path = np.array([[0.05, 0.0, zz] for zz in z_path])
            rep = cancellation_check(grid, path, V_BEAM, ALPHA)
            residuals[spacing] = rep.max_residual
            assert rep.max_curl_residual < 1e-3
        assert residuals[2.5e-5] <= 1e-6
        assert residuals[5e-5] / residuals[2.5e-5] == pytest.approx(4.0, rel=0.5)

    def test_uniform_field_guarded_zero(self):
        grid = _grid(uniform_field([2e5, 0, 0]), uniform_field([0, 5e-3, 0]))
        path = np.array([[0.05, 0.0, 0.0]])
        rep = cancellation_check(grid, path, V_BEAM, ALPHA)
        assert rep.max_residual == 0.0  # 0/0 regularized to 0

    def test_injected_curl_is_detected(self):
        # E = (E0 + k z) x + E1 z: curl_y = dEx/dz - dEz/dx = k != 0
        k = 2e6  # V/m per m of curl violation

        def bad_e(r):
            return np.array([2e5 + k * r[2], 0.0, 1e5])

        grid = _grid(bad_e, uniform_field([0, 5e-3, 0]))
        path = np.array([[0.05, 0.0, 0.0]])
        with pytest.raises(DomainError):
            cancellation_check(grid, path, V_BEAM, ALPHA)
        rep = cancellation_check(grid, path, V_BEAM, ALPHA, require_curl_free=False)
        # residual of the same order as the injected curl fraction
        assert rep.max_residual == pytest.approx(1.0, rel=0.2)
        f = wei_force_components(grid, path[0], V_BEAM, ALPHA)
        f1z, f2z = f.longitudinal_pair
        pref = 4 * math.pi * C.epsilon_0 * ALPHA
        assert f1z + f2z == pytest.approx(pref * 1065.0 * 5e-3 * k, rel=1e-10)

    def test_path_through_boundary_rejected(self):
        grid = _grid(uniform_field([1e5, 0, 0]), uniform_field([0, 1e-2, 0]))
        with pytest.raises(CoverageError):
            cancellation_check(
                grid, np.array([[0.05, 0.0, grid.z[0]]]), V_BEAM, ALPHA
            )


class TestCapacitorGapField:
    def test_curl_free_by_construction(self):
        e_func, grad = capacitor_gap_field(400.0, 1e-3, 24e-3, 2e-3)
        for r in [np.array([1e-4, 0.0, 0.0]), np.array([-2e-4, 0.0, 0.0221])]:
            g = grad(r)
            assert g[2, 0] == pytest.approx(g[0, 2], rel=1e-12)

    def test_plateau_value(self):
        e_func, _ = capacitor_gap_field(400.0, 1e-3, 24e-3, 2e-3)
        inside = e_func(np.array([0.0, 0.0, 0.0]))
        assert inside[0] == pytest.approx(4e5, rel=1e-6)
        far = e_func(np.array([0.0, 0.0, 0.1]))
        assert abs(far[0]) < 1.0

    def test_gradient_matches_finite_difference(self):
        e_func, grad = capacitor_gap_field(400.0, 1e-3, 24e-3, 2e-3)
        r = np.array([2e-4, 0.0, 0.023])
        h = 1e-7
        for i in (0, 2):
            for j in (0, 2):
                rp, rm = r.copy(), r.copy()
                rp[i] += h
                rm[i] -= h
                fd = (e_func(rp)[j] - e_func(rm)[j]) / (2 * h)
                assert grad(r)[i, j] == pytest.approx(fd, rel=1e-5, abs=1e-4)
