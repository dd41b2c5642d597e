import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomfringe.errors import DomainError
from atomfringe.hyperfine import (
    ALL_SUBLEVELS,
    LI7,
    AtomModel,
    Sublevel,
    SublevelPopulations,
    breit_rabi_energy,
    diamagnetic_energy_estimate,
    hyperfine_zeeman_hamiltonian,
    magnetic_moment,
    population_unbalance,
    populations_from_chi,
    zeeman_slope_expansion,
)

A = LI7.hyperfine_constant
TWO_PI = 2.0 * math.pi


def exact_slope(s: Sublevel, x: float) -> float:
    # analytic d[E/A]/dX of the closed-form energy, nuclear term included
    nuclear = -LI7.g_i * LI7.bohr_magneton * s.m_f / (A * LI7.x_slope)
    return nuclear + s.branch * (s.m_f + 2 * x) / (2 * math.sqrt(1 + s.m_f * x + x * x))


class TestSublevels:
    def test_exactly_eight(self):
        assert len(ALL_SUBLEVELS) == 8
        assert len(set(ALL_SUBLEVELS)) == 8

    def test_invalid_rejected(self):
        with pytest.raises(DomainError):
            Sublevel(3, 0)
        with pytest.raises(DomainError):
            Sublevel(1, 2)


class TestAtomModel:
    def test_hfs_frequency_derived(self):
        assert LI7.hfs_angular_frequency == pytest.approx(2 * A / LI7.hbar, rel=1e-15)

    def test_hfs_frequency_validated(self):
        with pytest.raises(DomainError):
            AtomModel(
                hyperfine_constant=A,
                g_s=LI7.g_s,
                g_i=LI7.g_i,
                polarizability=LI7.polarizability,
                mass=LI7.mass,
                hfs_angular_frequency=1.0,
            )

    def test_x_slope_near_349(self):
        assert LI7.x_slope == pytest.approx(34.9, rel=5e-3)

    def test_lande_factors(self):
        # magnitudes of the usual table values; signs follow this module's
        # convention (g_s < 0)
        assert abs(LI7.lande_g_factor(1)) == pytest.approx(0.502053, abs=1e-5)
        assert abs(LI7.lande_g_factor(2)) == pytest.approx(0.499689, abs=1e-5)
        assert LI7.lande_g_factor(1) > 0 > LI7.lande_g_factor(2)


class TestBreitRabi:
    def test_zero_field_splitting(self):
        e2 = breit_rabi_energy(LI7, Sublevel(2, 0), 0.0)
        e1 = breit_rabi_energy(LI7, Sublevel(1, 0), 0.0)
        assert e2 == pytest.approx(0.75 * A, rel=1e-15)
        assert e1 == pytest.approx(-1.25 * A, rel=1e-15)
        split_hz = (e2 - e1) / (TWO_PI * LI7.hbar)
        assert split_hz == pytest.approx(803e6, rel=5e-3)

    def test_stretch_state_is_linear(self):
        # radical is a perfect square for m_F = +2: sqrt(1+2X+X^2) = 1+X
        b = 0.5 / LI7.x_slope  # X = 0.5
        e = breit_rabi_energy(LI7, Sublevel(2, 2), b)
        expected = -A / 4 - 2 * LI7.g_i * LI7.bohr_magneton * b + A * 1.5
        assert e == pytest.approx(expected, rel=1e-15)

    def test_direct_formula_value(self):
        # frozen via independent evaluation at X = 34.899...*B and checked
        # against the 8x8 diagonalization below
        b = 1.4e-2
        s = Sublevel(1, -1)
        x = LI7.x_slope * b
        expected = -A / 4 + LI7.g_i * LI7.bohr_magneton * b - A * math.sqrt(1 - x + x * x)
        assert breit_rabi_energy(LI7, s, b) == pytest.approx(expected, rel=1e-15)
        eig = np.linalg.eigvalsh(hyperfine_zeeman_hamiltonian(LI7, b))
        assert np.min(np.abs(eig - expected)) <= 1e-10 * abs(expected)

    def test_rejects_negative_field_and_large_x(self):
        with pytest.raises(DomainError):
            breit_rabi_energy(LI7, Sublevel(2, 2), -1e-3)
        with pytest.raises(DomainError):
            breit_rabi_energy(LI7, Sublevel(2, 2), 1.01 / LI7.x_slope)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.4e-2))
    def test_matches_diagonalization(self, b):
        eig = np.sort(np.linalg.eigvalsh(hyperfine_zeeman_hamiltonian(LI7, b)))
        formula = np.sort([breit_rabi_energy(LI7, s, b) for s in ALL_SUBLEVELS])
        assert np.max(np.abs(eig - formula) / np.abs(formula)) <= 1e-10

    def test_pair_sums_without_nuclear_term(self):
        # with g_i = 0 the radicals cancel exactly: E(2,m) + E(1,m) = -A/2
        # for each shared m, and E(2,2) + E(2,-2) = -A/2 + 2A
        from dataclasses import replace

        bare = replace(LI7, g_i=0.0)
        b = 1.0e-2
        for m in (-1, 0, 1):
            total = breit_rabi_energy(bare, Sublevel(2, m), b) + breit_rabi_energy(
                bare, Sublevel(1, m), b
            )
            assert total == pytest.approx(-A / 2, rel=1e-14)
        stretch = breit_rabi_energy(bare, Sublevel(2, 2), b) + breit_rabi_energy(
            bare, Sublevel(2, -2), b
        )
        assert stretch == pytest.approx(-A / 2 + 2 * A, rel=1e-14)

    def test_opposite_pair_shifts(self):
        # four pairs with (almost) opposite Zeeman shifts relative to B=0:
        # (2,m)/(1,m) for m = -1,0,1 and (2,2)/(2,-2).  The radical parts
        # cancel exactly; the residual is purely nuclear, -2 g_i mu_B m B
        # for the shared-m pairs and zero for the stretch pair, i.e. a
        # g_i/g_s-scale correction to the opposite-shift picture.
        b = 1.0e-2
        scale = LI7.bohr_magneton * b
        for m in (-1, 0, 1):
            da = breit_rabi_energy(LI7, Sublevel(2, m), b) - breit_rabi_energy(
                LI7, Sublevel(2, m), 0.0
            )
            db = breit_rabi_energy(LI7, Sublevel(1, m), b) - breit_rabi_energy(
                LI7, Sublevel(1, m), 0.0
            )
            assert da + db == pytest.approx(
                -2 * LI7.g_i * LI7.bohr_magneton * m * b, abs=1e-12 * scale
            )
            assert abs(da + db) <= 4 * abs(LI7.g_i) * scale
        da = breit_rabi_energy(LI7, Sublevel(2, 2), b) - breit_rabi_energy(
            LI7, Sublevel(2, 2), 0.0
        )
        db = breit_rabi_energy(LI7, Sublevel(2, -2), b) - breit_rabi_energy(
            LI7, Sublevel(2, -2), 0.0
        )
        assert da + db == pytest.approx(0.0, abs=1e-12 * scale)


class TestSlopeExpansion:
    def test_leading_term(self):
        for s in ALL_SUBLEVELS:
            got = zeeman_slope_expansion(LI7, s, 0.0)
            assert got == pytest.approx(-LI7.slope_g_factor(s.f) * s.m_f, abs=1e-15)
            assert got == pytest.approx(exact_slope(s, 0.0), rel=1e-12, abs=1e-15)

    def test_exact_for_stretch_states(self):
        for m in (-2, 2):
            s = Sublevel(2, m)
            for x in np.linspace(-0.9, 0.9, 37):
                assert zeeman_slope_expansion(LI7, s, x) == pytest.approx(
                    exact_slope(s, x), rel=1e-12
                )

    def test_three_percent_for_m1(self):
        xs = np.arange(-0.5, 0.5 + 1e-12, 0.01)
        for s in ALL_SUBLEVELS:
            if abs(s.m_f) != 1:
                continue
            exact = np.array([exact_slope(s, x) for x in xs])
            approx = np.array([zeeman_slope_expansion(LI7, s, x) for x in xs])
            assert np.max(np.abs(approx - exact)) / np.max(np.abs(exact)) <= 0.03

    def test_twelve_percent_for_m0(self):
        xs = np.arange(-0.5, 0.5 + 1e-12, 0.01)
        for f in (1, 2):
            s = Sublevel(f, 0)
            exact = np.array([exact_slope(s, x) for x in xs])
            approx = np.array([zeeman_slope_expansion(LI7, s, x) for x in xs])
            assert np.max(np.abs(approx - exact)) / np.max(np.abs(exact)) <= 0.12

    def test_specific_point_within_three_percent(self):
        s = Sublevel(1, 1)
        got = zeeman_slope_expansion(LI7, s, 0.4)
        assert abs(got - exact_slope(s, 0.4)) / abs(exact_slope(s, 0.4)) <= 0.03


class TestMagneticMoment:
    def test_zero_at_origin(self):
        assert magnetic_moment(LI7, Sublevel(2, 0), 0.0) == 0.0
        assert magnetic_moment(LI7, Sublevel(1, 0), 0.0) == 0.0

    def test_stretch_plateau(self):
        # (2+2X)/(2(1+X)) = 1 for every X: moment is flat at
        # (g_s-g_i)/2 ~ -1.0018 Bohr magnetons for (2, +2)
        vals = [
            magnetic_moment(LI7, Sublevel(2, 2), x / LI7.x_slope)
            for x in (0.0, 0.1, 0.3, 0.7)
        ]
        assert all(v == pytest.approx(vals[0], rel=1e-14) for v in vals)
        assert vals[0] == pytest.approx(-LI7.bohr_magneton, rel=2e-3)

    def test_matches_energy_derivative(self):
        # 5-point central difference of the closed-form energy, nuclear
        # term stripped
        atom = LI7
        b = 0.49 / atom.x_slope
        db = 1e-5 * b
        for s in [Sublevel(1, -1), Sublevel(2, 1), Sublevel(1, 0), Sublevel(2, -2)]:
            def e(bb):
                return breit_rabi_energy(atom, s, bb) + atom.g_i * atom.bohr_magneton * s.m_f * bb

            deriv = (e(b - 2 * db) - 8 * e(b - db) + 8 * e(b + db) - e(b + 2 * db)) / (12 * db)
            want = -deriv
            got = magnetic_moment(atom, s, b)
            if want != 0:
                assert got == pytest.approx(want, rel=1e-8)
            else:
                assert abs(got) < 1e-8 * atom.bohr_magneton

    def test_f_branches_opposite(self):
        b = 5e-3
        for m in (-1, 0, 1):
            assert magnetic_moment(LI7, Sublevel(2, m), b) == pytest.approx(
                -magnetic_moment(LI7, Sublevel(1, m), b), rel=1e-14
            )


class TestPopulationUnbalance:
    def test_zero_when_no_splitting(self):
        assert population_unbalance(3.0, 2.0, 0.0) == 0.0

    def test_zero_at_zero_power(self):
        assert population_unbalance(0.0, 2.0, 0.8) == 0.0

    def test_reference_point(self):
        # frozen: direct evaluation at beta/2pi = 3.65 GHz, detuning 2 GHz,
        # splitting 0.8035040866 GHz
        got = population_unbalance(
            TWO_PI * 3.65e9, TWO_PI * 2.0e9, LI7.hfs_angular_frequency
        )
        assert got == pytest.approx(1.9645280e-03, rel=1e-6)

    def test_rejects_bad_detuning(self):
        with pytest.raises(DomainError):
            population_unbalance(1.0, 0.0, 0.5)
        with pytest.raises(DomainError):
            population_unbalance(1.0, 1.0, -2.0)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=1e-3, max_value=50.0),
        st.floats(min_value=1e-3, max_value=50.0),
        st.floats(min_value=0.0, max_value=10.0),
    )
    def test_always_in_bounds(self, beta, delta, omega):
        try:
            chi = population_unbalance(beta, delta, omega)
        except DomainError:
            return
        assert -0.2 - 1e-12 <= chi <= 1 / 3 + 1e-12

    def test_zero_crossings_match_numerator_root(self):
        beta = TWO_PI * 3.65e9
        omega = LI7.hfs_angular_frequency
        detunings = TWO_PI * np.linspace(1e9, 4e9, 4001)
        chis = np.array([population_unbalance(beta, d, omega) for d in detunings])
        signs = np.sign(chis)
        crossings = np.nonzero(np.diff(signs) != 0)[0]
        assert crossings.size > 0
        for k in crossings:
            d = 0.5 * (detunings[k] + detunings[k + 1])
            s1 = math.sin(beta / d) ** 4
            s2 = math.sin(beta / (d + omega)) ** 4
            assert abs(s1 - s2) < 5e-3


class TestPopulationsFromChi:
    def test_balanced(self):
        pops = populations_from_chi(0.0)
        assert all(p == pytest.approx(0.125) for _, p in pops.items())

    def test_boundaries(self):
        top = populations_from_chi(1 / 3)
        assert top.p_f2 == pytest.approx(0.0, abs=1e-15)
        assert top.p_f1 == pytest.approx(1 / 3, rel=1e-12)
        bot = populations_from_chi(-0.2)
        assert bot.p_f1 == pytest.approx(0.0, abs=1e-15)
        assert bot.p_f2 == pytest.approx(0.2, rel=1e-12)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            populations_from_chi(0.34)
        with pytest.raises(DomainError):
            populations_from_chi(-0.21)

    def test_sum_and_roundtrip(self):
        pops = populations_from_chi(0.1)
        assert sum(p for _, p in pops.items()) == pytest.approx(1.0, abs=1e-12)
        assert pops.chi == pytest.approx(0.1, rel=1e-12)

    def test_direct_construction_validated(self):
        with pytest.raises(DomainError):
            SublevelPopulations(p_f1=0.2, p_f2=0.2)


def test_diamagnetic_estimate_is_negligible():
    shift = diamagnetic_energy_estimate(14e-3)
    assert 1e-33 < shift < 1e-31  # ~2.4e-32 J, tiny vs the 2.7e-25 J hyperfine scale
