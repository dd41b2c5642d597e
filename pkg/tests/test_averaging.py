import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from atomfringe.averaging import (
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
    velocity_pdf,
    visibility_correlation,
)
from atomfringe.errors import DomainError
from atomfringe.geometry import Profile1D, TrajectoryDistribution
from atomfringe.hyperfine import ALL_SUBLEVELS, LI7, populations_from_chi

BEAM = BeamModel(v_m=1065.0, s_parallel=8.0)


class TestVelocityPdf:
    def test_peak_value(self):
        want = BEAM.s_parallel / (BEAM.v_m * math.sqrt(math.pi))
        assert velocity_pdf(BEAM, BEAM.v_m) == pytest.approx(want, rel=1e-14)

    def test_normalization(self):
        lo = BEAM.v_m * (1 - 6 / BEAM.s_parallel)
        hi = BEAM.v_m * (1 + 6 / BEAM.s_parallel)
        total, _ = quad(lambda v: velocity_pdf(BEAM, v), lo, hi, epsabs=1e-13)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_fwhm(self):
        # 2 sqrt(ln 2)/S of the mean velocity, ~20.8% for S=8
        half = velocity_pdf(BEAM, BEAM.v_m) / 2
        width = 2 * math.sqrt(math.log(2)) / BEAM.s_parallel * BEAM.v_m
        assert velocity_pdf(BEAM, BEAM.v_m + width / 2) == pytest.approx(half, rel=1e-12)
        assert width / BEAM.v_m == pytest.approx(0.2081, abs=2e-4)

    def test_beam_validation(self):
        with pytest.raises(DomainError):
            BeamModel(v_m=-1.0, s_parallel=8.0)
        with pytest.raises(DomainError):
            BeamModel(v_m=1000.0, s_parallel=8.0, chi=0.5)


class TestVelocityAverage:
    def test_zero_phase(self):
        c = velocity_average(BEAM, 1, 0.0)
        assert (c.modulus, c.phase) == (1.0, 0.0)

    def test_no_dispersion_power(self):
        c = velocity_average(BEAM, 0, 2.3)
        assert c.modulus == pytest.approx(1.0, abs=1e-15)
        assert c.phase == pytest.approx(2.3, rel=1e-14)

    def test_offset_only_rotates(self):
        base = velocity_average(BEAM, 1, 1.5)
        shifted = velocity_average(BEAM, 1, 1.5, phi_offset=0.4)
        assert shifted.modulus == pytest.approx(base.modulus, rel=1e-12)
        assert shifted.phase == pytest.approx(base.phase + 0.4, rel=1e-12)

    def test_collapse_near_s_over_n(self):
        # frozen from the adaptive quadrature at phi0 = S/n = 8
        c = velocity_average(BEAM, 1, 8.0)
        assert c.modulus == pytest.approx(0.7713978918602812, rel=1e-9)
        assert c.modulus < 0.8  # substantially reduced

    def test_monotone_decrease(self):
        mods = [velocity_average(BEAM, 1, p).modulus for p in (0.0, 2.0, 4.0, 8.0)]
        assert all(a > b for a, b in zip(mods, mods[1:]))

    def test_phase_shift_linear_in_phi_over_s2(self):
        # phase - phi0 ~ n(n+1) phi0 / (4 S^2) for small phi0
        slope = 2 / (4 * BEAM.s_parallel**2)
        for phi0 in (0.5, 1.0):
            c = velocity_average(BEAM, 1, phi0)
            assert (c.phase - phi0) == pytest.approx(slope * phi0, rel=0.05)

    def test_invalid_power(self):
        with pytest.raises(DomainError):
            velocity_average(BEAM, 3, 1.0)


class TestVelocityAverageExpansion:
    def test_matches_quadrature_through_s_over_2(self):
        for phi0 in np.linspace(0.25, 4.0, 16):
            q = velocity_average(BEAM, 1, phi0)
            a = velocity_average_expansion(BEAM, 1, phi0)
            assert a.modulus == pytest.approx(q.modulus, abs=1e-3)
            assert math.remainder(a.phase - q.phase, 2 * math.pi) == pytest.approx(
                0.0, abs=1e-3
            )

    def test_n2_also_tracks(self):
        for phi0 in (0.5, 1.0, 2.0):
            q = velocity_average(BEAM, 2, phi0)
            a = velocity_average_expansion(BEAM, 2, phi0)
            assert a.modulus == pytest.approx(q.modulus, abs=3e-3)

    def test_bare_second_order_is_worse_at_the_edge(self):
        q = velocity_average(BEAM, 1, 4.0)
        bare = velocity_average_expansion(BEAM, 1, 4.0, cubic_correction=False)
        cubic = velocity_average_expansion(BEAM, 1, 4.0)
        assert abs(cubic.modulus - q.modulus) < abs(bare.modulus - q.modulus)

    def test_n0_unit_modulus(self):
        c = velocity_average_expansion(BEAM, 0, 1.2, phi_offset=0.3)
        assert c.modulus == pytest.approx(1.0, abs=1e-15)
        assert c.phase == pytest.approx(1.5, rel=1e-12)


def _weight(n=81, width=1.0):
    y = np.linspace(-width, width, n)
    return TrajectoryDistribution.normalized(y, np.exp(-((y / (0.55 * width)) ** 2)))


class TestMomentExpansion:
    def test_constant_phase(self):
        p = _weight()
        mom = moment_expansion(p, Profile1D(p.profile.x, np.full(p.profile.x.size, 0.7)))
        assert mom.visibility_ratio == pytest.approx(1.0, abs=1e-14)
        assert mom.phase == pytest.approx(0.7, rel=1e-12)
        assert mom.max_dispersion == pytest.approx(0.0, abs=1e-14)

    def test_symmetric_two_level_dispersion(self):
        # piecewise +-a dispersion: V = 1 - a^2/2, third moment vanishes
        y = np.linspace(-1, 1, 20000)  # even count: no node at y = 0
        p = TrajectoryDistribution.normalized(y, np.ones_like(y))
        a = 0.2
        phi = Profile1D(y, a * np.sign(y))
        mom = moment_expansion(p, phi)
        assert mom.visibility_ratio == pytest.approx(1 - a * a / 2, rel=1e-4)
        assert mom.phase == pytest.approx(0.0, abs=1e-12)
        assert mom.third_moment == pytest.approx(0.0, abs=1e-12)

    def test_skewed_profile_against_direct_average(self):
        p = _weight()
        y = p.profile.x
        phi = Profile1D(y, 0.25 * y + 0.18 * y**2 - 0.1 * y**3 + 0.3)
        mom = moment_expansion(p, phi)
        direct = direct_trajectory_average(p, phi)
        assert mom.visibility_ratio == pytest.approx(direct.modulus, abs=1e-3)
        assert mom.phase == pytest.approx(direct.phase, abs=1e-3)
        assert mom.third_moment != 0.0  # genuinely skewed

    def test_phase_not_additive_cross_terms(self):
        # phi_m(a+b) - phi_m(a) - phi_m(b) = -(<da^2 db> + <da db^2>)/2
        p = _weight()
        y = p.profile.x
        phi_a = Profile1D(y, 0.3 * y)
        phi_b = Profile1D(y, 0.25 * y**2)
        mom_a = moment_expansion(p, phi_a)
        mom_b = moment_expansion(p, phi_b)
        mom_ab = moment_expansion(p, Profile1D(y, phi_a.values + phi_b.values))
        mean = p.average
        da = phi_a.values - mean(phi_a)
        db = phi_b.values - mean(phi_b)
        cross = mean(Profile1D(y, da**2 * db)) + mean(Profile1D(y, da * db**2))
        discrepancy = mom_ab.phase - mom_a.phase - mom_b.phase
        assert abs(discrepancy) > 1e-5  # phases do not add
        assert discrepancy == pytest.approx(-cross / 2, rel=1e-10)


class TestVisibilityCorrelation:
    def test_uncorrelated_dispersions_factorize(self):
        y = np.linspace(-1, 1, 4001)
        p = TrajectoryDistribution.normalized(y, np.ones_like(y))
        phi_a = Profile1D(y, 0.3 * np.sign(np.sin(40 * math.pi * y)))
        phi_b = Profile1D(y, 0.2 * y)
        corr = visibility_correlation(p, phi_a, phi_b)
        assert abs(corr.correlation) < 2e-3
        assert corr.ratio_sum == pytest.approx(corr.ratio_a * corr.ratio_b, abs=5e-3)

    def test_identical_dispersions(self):
        p = _weight()
        y = p.profile.x
        phi = Profile1D(y, 0.3 * y)
        corr = visibility_correlation(p, phi, phi)
        assert corr.correlation == pytest.approx(2 * (1 - corr.ratio_a), rel=1e-10)

    def test_opposite_dispersions_cancel(self):
        p = _weight()
        y = p.profile.x
        phi = Profile1D(y, 0.4 * y + 0.1 * y**2)
        anti = Profile1D(y, -phi.values)
        corr = visibility_correlation(p, phi, anti)
        assert corr.ratio_sum == pytest.approx(1.0, abs=1e-14)  # perfect cancellation
        # while the product form keeps the spurious (1 + <da^2>) enhancement
        m2 = 2 * (1 - corr.ratio_a)
        assert corr.ratio_product_form == pytest.approx(
            corr.ratio_a**2 * (1 + m2), rel=1e-10
        )

    def test_grid_mismatch_rejected(self):
        p = _weight()
        with pytest.raises(DomainError):
            visibility_correlation(
                p,
                Profile1D([0, 1], [0, 0.1]),
                Profile1D([0, 0.5, 1], [0, 0.1, 0.2]),
            )


class TestFresnelSum:
    def test_common_phase_passes_through(self):
        pops = populations_from_chi(0.07)
        comps = {s: ComplexVisibility.from_polar(0.8, 0.3) for s in ALL_SUBLEVELS}
        total = fresnel_sum(pops, comps)
        assert total.modulus == pytest.approx(0.8, rel=1e-12)
        assert total.phase == pytest.approx(0.3, rel=1e-12)

    def test_symmetric_pair(self):
        pops = populations_from_chi(0.0)
        phi = 0.6
        comps = {}
        for s in ALL_SUBLEVELS:
            sign = 1 if s.m_f >= 0 else -1
            comps[s] = ComplexVisibility.from_polar(1.0, sign * phi * (s.m_f != 0))
        # each +-m pair contributes cos(phi); m=0 levels contribute 1
        total = fresnel_sum(pops, comps)
        want = (2 + 6 * math.cos(phi)) / 8
        assert total.modulus == pytest.approx(want, rel=1e-12)
        assert total.phase == pytest.approx(0.0, abs=1e-15)

    def test_accepts_polar_tuples(self):
        pops = populations_from_chi(0.0)
        comps = {s: (1.0, 0.0) for s in ALL_SUBLEVELS}
        assert fresnel_sum(pops, comps).modulus == pytest.approx(1.0, abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=-0.2, max_value=1 / 3), st.floats(-20, 20))
    def test_modulus_never_exceeds_one(self, chi, j1):
        vis = linear_zeeman_visibility(j1, chi)
        assert vis.modulus <= 1.0 + 1e-9


class TestLinearZeemanVisibility:
    def test_zero_dephasing(self):
        vis = linear_zeeman_visibility(0.0, 0.0)
        assert (vis.modulus, vis.phase) == (1.0, 0.0)

    def test_exact_revivals_with_half_integer_g(self):
        for k in (1, 2):
            vis = linear_zeeman_visibility(4 * math.pi * k, 0.0, approximate_g=True)
            assert vis.modulus == pytest.approx(1.0, abs=1e-14)

    def test_revival_with_exact_g(self):
        vis = linear_zeeman_visibility(4 * math.pi, 0.0)
        assert 0.999 <= vis.modulus < 1.0

    def test_result_is_real(self):
        # +-m pairing inside each F level makes the phasor sum real
        for j1 in np.linspace(0, 8 * math.pi, 40):
            for chi in (-0.1, 0.0, 0.1):
                vis = linear_zeeman_visibility(j1, chi)
                assert abs(vis.im) <= 5e-3
                assert abs(vis.im) <= 1e-15  # in fact exactly real

    def test_phase_locked_to_zero_or_pi(self):
        for j1 in np.linspace(0, 30, 61):
            vis = linear_zeeman_visibility(j1, 0.1)
            assert min(abs(vis.phase), abs(abs(vis.phase) - math.pi)) < 1e-12

    def test_velocity_average_damps_revival(self):
        # frozen quadrature value; revival drops well below the zero-field
        # visibility once the beam velocity spread is averaged over
        vis = linear_zeeman_visibility(4 * math.pi, 0.0, BEAM, velocity_averaged=True)
        assert vis.modulus == pytest.approx(0.8093798664517573, rel=1e-8)
        zero = linear_zeeman_visibility(0.0, 0.0, BEAM, velocity_averaged=True)
        assert vis.modulus < zero.modulus == 1.0

    def test_unbalance_matters_most_at_low_visibility(self):
        # scan the first visibility trough: the chi = +-0.1 phase splitting
        # is much larger there than near the revival
        j_grid = np.linspace(0.1, 4 * math.pi, 120)
        vis0 = np.array(
            [linear_zeeman_visibility(j, 0.0, BEAM, True).modulus for j in j_grid]
        )
        trough = j_grid[int(np.argmin(vis0))]
        peak = j_grid[int(np.argmax(vis0[60:])) + 60]

        def phase_split(j1):
            a = linear_zeeman_visibility(j1, +0.1, BEAM, True).phase
            b = linear_zeeman_visibility(j1, -0.1, BEAM, True).phase
            return abs(math.remainder(a - b, 2 * math.pi))

        assert phase_split(trough) > 10 * phase_split(peak)

    def test_requires_beam_for_averaging(self):
        with pytest.raises(DomainError):
            linear_zeeman_visibility(1.0, 0.0, None, velocity_averaged=True)


class TestQuadraticZeemanVisibility:
    def test_reduces_to_linear_form_at_zero_j2(self):
        for j1 in (0.0, 1.7, 4 * math.pi):
            for chi in (-0.1, 0.0, 0.2):
                closed = quadratic_zeeman_closed_form(j1, 0.0, chi)
                want = 0.25 * ((1 + chi) * (1 + 2 * math.cos(j1 / 2)) + (1 - 3 * chi) * math.cos(j1))
                assert closed.re == pytest.approx(want, rel=1e-14)
                assert closed.im == 0.0

    def test_closed_form_real_at_balanced_populations(self):
        for j1, j2 in [(0.3, 0.7), (5.0, 1.2), (12.0, -0.8)]:
            assert quadratic_zeeman_closed_form(j1, j2, 0.0).im == 0.0

    @settings(max_examples=150, deadline=None)
    @given(
        st.floats(min_value=-10, max_value=10),
        st.floats(min_value=-2, max_value=2),
        st.floats(min_value=-0.2, max_value=1 / 3),
    )
    def test_direct_sum_matches_closed_form(self, j1, j2, chi):
        both = quadratic_zeeman_visibility(j1, j2, chi)
        assert both.value.re == pytest.approx(both.closed_form.re, abs=1e-12)
        assert abs(both.value.im) == pytest.approx(abs(both.closed_form.im), abs=1e-12)
        # with the default sign convention the match is componentwise
        assert both.value.im == pytest.approx(both.closed_form.im, abs=1e-12)

    def test_branch_convention_flips_imaginary_part(self):
        a = quadratic_zeeman_visibility(2.0, 0.8, 0.1, printed_sign_convention=True)
        b = quadratic_zeeman_visibility(2.0, 0.8, 0.1, printed_sign_convention=False)
        assert a.value.re == pytest.approx(b.value.re, abs=1e-15)
        assert a.value.im == pytest.approx(-b.value.im, abs=1e-15)

    def test_nuclear_term_leaves_small_imaginary_residue(self):
        # with exact Lande factors the chi = 0 imaginary part no longer
        # vanishes, but stays tiny
        both = quadratic_zeeman_visibility(6.0, 1.0, 0.0, exact_g=True)
        assert both.value.im != 0.0
        assert abs(both.value.im) < 5e-3

    def test_current_sweep_family(self):
        # J1 = 0.5 I, J2 = 0.01 I^2: visibility collapses and the phase
        # grows toward ~1 rad where the real part is small (chi != 0)
        for chi in (0.0, 0.1, -0.1):
            res = [
                quadratic_zeeman_visibility(0.5 * i, 0.01 * i * i, chi).value
                for i in np.linspace(0.0, 40.0, 81)
            ]
            assert res[0].modulus == pytest.approx(1.0, abs=1e-14)
            assert min(r.modulus for r in res) < 0.2
        big_phase = max(
            abs(quadratic_zeeman_visibility(0.5 * i, 0.01 * i * i, 0.1).value.phase)
            for i in np.linspace(0.0, 40.0, 81)
        )
        assert big_phase > 0.5
