"""Self-contained acceptance checks for the whole package.

Each criterion re-derives its expected numbers from an independent route
(dense quadrature, matrix diagonalization, finite differences, brute-force
re-evaluation) and compares at a fixed tolerance.  ``run_all`` prints one
PASS/FAIL line per criterion; the same checks back the CLI ``check`` verb
and the pytest acceptance module.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate as _integrate

from .averaging import (
    BeamModel,
    direct_trajectory_average,
    linear_zeeman_visibility,
    moment_expansion,
    quadratic_zeeman_visibility,
    velocity_average,
    velocity_average_expansion,
    visibility_correlation,
)
from .dynamics import (
    FieldGrid3D,
    cancellation_check,
    line_charge_field,
    uniform_field,
)
from .geometry import Profile1D, TrajectoryDistribution
from .hyperfine import (
    ALL_SUBLEVELS,
    LI7,
    Sublevel,
    breit_rabi_energy,
    hyperfine_zeeman_hamiltonian,
    population_unbalance,
    zeeman_slope_expansion,
)
from .phases import TwoCoilModel, sagnac_phase, stark_phase_ideal
from .scenario import (
    evaluate_point,
    fit_two_coil,
    records_to_csv,
    run_scenario,
)
from . import presets


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str


def _exact_slope(s: Sublevel, x: float) -> float:
    """Analytic dE/(A dX) of the closed-form energy (independent route)."""
    atom = LI7
    nuclear = -atom.g_i * atom.bohr_magneton * s.m_f / (
        atom.hyperfine_constant * atom.x_slope
    )
    radical = s.branch * (s.m_f + 2.0 * x) / (2.0 * math.sqrt(1.0 + s.m_f * x + x * x))
    return nuclear + radical


def criterion_01_hyperfine_splitting() -> CriterionResult:
    split_hz = 2.0 * LI7.hyperfine_constant / (2.0 * math.pi * LI7.hbar)
    slope = LI7.x_slope
    ok1 = abs(split_hz / 803e6 - 1.0) <= 5e-3
    ok2 = abs(slope / 34.9 - 1.0) <= 5e-3
    return CriterionResult(
        1,
        "hyperfine splitting and field-parameter slope",
        ok1 and ok2,
        f"2A/h = {split_hz/1e6:.3f} MHz (803 +/- 0.5%), X/B = {slope:.3f} /T (34.9 +/- 0.5%)",
    )


def criterion_02_expansion_tolerances() -> CriterionResult:
    xs = np.arange(-0.5, 0.5 + 1e-12, 0.01)
    worst = {}
    for s in ALL_SUBLEVELS:
        exact = np.array([_exact_slope(s, x) for x in xs])
        approx = np.array([zeeman_slope_expansion(LI7, s, x) for x in xs])
        err = np.max(np.abs(approx - exact))
        scale = np.max(np.abs(exact))
        if s.f == 2 and abs(s.m_f) == 2:
            rel = np.max(np.abs(approx - exact) / np.abs(exact))
            worst["stretch"] = max(worst.get("stretch", 0.0), rel)
        elif abs(s.m_f) == 1:
            worst["m1"] = max(worst.get("m1", 0.0), err / scale)
        else:
            worst["m0"] = max(worst.get("m0", 0.0), err / scale)
    ok = worst["stretch"] <= 1e-12 and worst["m1"] <= 0.03 and worst["m0"] <= 0.12
    return CriterionResult(
        2,
        "quadratic expansion error bounds on |X| <= 0.5",
        ok,
        f"stretch {worst['stretch']:.2e} (<=1e-12), m=+-1 {worst['m1']:.4f} (<=3%), "
        f"m=0 {worst['m0']:.4f} (<=12%)",
    )


def criterion_03_breit_rabi_vs_diagonalization() -> CriterionResult:
    rng = np.random.default_rng(20120713)
    worst = 0.0
    for b in rng.uniform(0.0, 14e-3, size=100):
        eig = np.sort(np.linalg.eigvalsh(hyperfine_zeeman_hamiltonian(LI7, b)))
        formula = np.sort([breit_rabi_energy(LI7, s, b) for s in ALL_SUBLEVELS])
        worst = max(worst, float(np.max(np.abs(eig - formula) / np.abs(formula))))
    ok = worst <= 1e-10
    return CriterionResult(
        3,
        "closed-form energies vs 8x8 diagonalization",
        ok,
        f"max relative deviation {worst:.2e} over 100 random fields in [0, 14 mT]",
    )


def criterion_04_sagnac() -> CriterionResult:
    val = sagnac_phase(LI7, 1065.0)
    ok = abs(val / 0.646 - 1.0) <= 5e-3
    return CriterionResult(4, "Sagnac phase at 1065 m/s", ok, f"688/1065 = {val:.5f} rad")


def criterion_05_stark_magnitude_and_null() -> CriterionResult:
    geom = presets.DEFAULT_CAPACITOR
    single = stark_phase_ideal(
        LI7, geom.voltage, geom.spacing, geom.eff_length, 0.0, geom.spacing,
        geom.eff_length, 1065.0,
    )
    ok_mag = 250.0 <= single <= 400.0
    h_l, h_u = geom.spacing, 1.25 * geom.spacing
    l_l, l_u = geom.eff_length, 0.93 * geom.eff_length
    v_l = geom.voltage
    v_u = v_l * math.sqrt(l_l * h_u**2 / (l_u * h_l**2))
    worst = max(
        abs(stark_phase_ideal(LI7, v_l, h_l, l_l, v_u, h_u, l_u, v))
        for v in (800.0, 1065.0, 1400.0)
    )
    ok_null = worst <= 1e-10
    return CriterionResult(
        5,
        "single-arm Stark magnitude and voltage-ratio null",
        ok_mag and ok_null,
        f"single-arm {single:.1f} rad in [250, 400]; tuned residual {worst:.2e} rad over 3 velocities",
    )


def criterion_06_visibility_revivals() -> CriterionResult:
    full = [
        linear_zeeman_visibility(j1, 0.0, approximate_g=True).modulus
        for j1 in (4 * math.pi, 8 * math.pi)
    ]
    ok_exact = all(abs(v - 1.0) <= 1e-14 for v in full)
    exact_g = linear_zeeman_visibility(4 * math.pi, 0.0).modulus
    ok_g = exact_g >= 0.999
    beam = BeamModel(v_m=1065.0, s_parallel=8.0)
    zero = linear_zeeman_visibility(0.0, 0.0, beam, velocity_averaged=True).modulus
    revived = linear_zeeman_visibility(
        4 * math.pi, 0.0, beam, velocity_averaged=True
    ).modulus
    ok_damped = revived < zero
    return CriterionResult(
        6,
        "full and damped visibility revivals",
        ok_exact and ok_g and ok_damped,
        f"revivals {full[0]:.15f}, {full[1]:.15f}; exact-g {exact_g:.6f} (>=0.999); "
        f"velocity-averaged {revived:.4f} < {zero:.4f}",
    )


def criterion_07_closed_form_cross_check() -> CriterionResult:
    rng = np.random.default_rng(19940321)
    worst_re = worst_im = 0.0
    for _ in range(1000):
        j1 = rng.uniform(-10, 10)
        j2 = rng.uniform(-2, 2)
        chi = rng.uniform(-0.2, 1 / 3)
        both = quadratic_zeeman_visibility(j1, j2, chi)
        worst_re = max(worst_re, abs(both.value.re - both.closed_form.re))
        worst_im = max(worst_im, abs(abs(both.value.im) - abs(both.closed_form.im)))
    ok = worst_re <= 1e-12 and worst_im <= 1e-12
    return CriterionResult(
        7,
        "direct 8-sublevel sum vs closed form (1000 random draws)",
        ok,
        f"max |dRe| = {worst_re:.2e}, max ||Im|-|Im|| = {worst_im:.2e}",
    )


def _random_phase_profile(rng, scale: float) -> tuple[TrajectoryDistribution, Profile1D]:
    y = np.linspace(-1.0, 1.0, 41)
    w = 1.0 + 0.5 * np.cos(math.pi * y) + 0.2 * rng.standard_normal(y.size) ** 2
    p = TrajectoryDistribution.normalized(y, w)
    phi = scale * (rng.standard_normal() * y + rng.standard_normal() * y**2
                   + 0.5 * rng.standard_normal() * np.sin(3 * y))
    phi = phi - phi.mean()
    phi = phi * (scale / max(scale, np.max(np.abs(phi))))
    return p, Profile1D(y, phi + rng.uniform(-0.5, 0.5))


def criterion_08_moment_expansion() -> CriterionResult:
    rng = np.random.default_rng(8)
    worst_v = worst_p = worst_corr = 0.0
    for _ in range(50):
        p, phi = _random_phase_profile(rng, 0.3)
        mom = moment_expansion(p, phi)
        direct = direct_trajectory_average(p, phi)
        worst_v = max(worst_v, abs(mom.visibility_ratio - direct.modulus))
        worst_p = max(
            worst_p, abs(math.remainder(mom.phase - direct.phase, 2 * math.pi))
        )
        _, phi_b = _random_phase_profile(rng, 0.3)
        corr = visibility_correlation(p, phi, phi_b)
        worst_corr = max(worst_corr, abs(corr.ratio_sum - corr.ratio_product_form))
    ok = worst_v <= 1e-3 and worst_p <= 1e-3 and worst_corr <= 5e-2
    return CriterionResult(
        8,
        "moment expansion vs direct trigonometric averaging",
        ok,
        f"max |dV| = {worst_v:.2e}, max |dphi| = {worst_p:.2e} rad; "
        f"product-form residual {worst_corr:.2e} (4th order in the moments)",
    )


def criterion_09_velocity_averaging() -> CriterionResult:
    beam = BeamModel(v_m=1065.0, s_parallel=8.0)
    worst_v = worst_p = 0.0
    for phi0 in np.linspace(0.25, 4.0, 16):
        quad = velocity_average(beam, 1, phi0)
        ana = velocity_average_expansion(beam, 1, phi0)
        worst_v = max(worst_v, abs(quad.modulus - ana.modulus))
        worst_p = max(
            worst_p, abs(math.remainder(quad.phase - ana.phase, 2 * math.pi))
        )
    ok = worst_v <= 1e-3 and worst_p <= 1e-3
    return CriterionResult(
        9,
        "closed-form velocity average vs adaptive quadrature (phi <= 4 rad)",
        ok,
        f"max |dV| = {worst_v:.2e}, max |dphi| = {worst_p:.2e} rad",
    )


def criterion_10_topological_invariances() -> CriterionResult:
    scn = presets.maxima_scenario()
    rec_v = evaluate_point(scn, 1065.0)
    rec_10v = evaluate_point(scn, 10650.0)
    s_ref = Sublevel(2, 2)
    ok_v = (
        rec_v.breakdown.hmw == rec_10v.breakdown.hmw
        and rec_v.breakdown.aharonov_casher[s_ref]
        == rec_10v.breakdown.aharonov_casher[s_ref]
    )
    flipped = presets.maxima_scenario(b_sign=-1)
    rec_flip = evaluate_point(flipped, 1065.0)
    ok_odd = rec_flip.breakdown.hmw == -rec_v.breakdown.hmw
    ac = abs(rec_v.breakdown.aharonov_casher[s_ref])
    hmw = abs(rec_v.breakdown.hmw)
    ok_mag = (0.056 <= ac <= 0.084) and (0.02295 <= hmw <= 0.03105)
    return CriterionResult(
        10,
        "velocity independence, B-parity and magnitudes of the geometric phases",
        ok_v and ok_odd and ok_mag,
        f"AC(2,2) = {ac*1e3:.1f} mrad (70 +/- 20%), HMW = {hmw*1e3:.1f} mrad (27 +/- 15%); "
        "bit-identical at v and 10v; HMW odd under B -> -B",
    )


def criterion_11_force_cancellation() -> CriterionResult:
    alpha = LI7.polarizability
    e_func = line_charge_field(2.8e-7, axis="y")
    b_func = uniform_field([0.0, 14e-3, 0.0])
    v = np.array([0.0, 0.0, 1065.0])
    residuals = {}
    for spacing in (5e-5, 2.5e-5):
        x = 0.05 + spacing * np.arange(-2, 3)
        y = spacing * np.arange(-1, 2)
        z = spacing * np.arange(-60, 61)
        grid = FieldGrid3D.from_functions(x, y, z, e_func, b_func)
        path = np.array([[0.05, 0.0, zz] for zz in z[5:-5:10]])
        rep = cancellation_check(grid, path, v, alpha)
        residuals[spacing] = rep.max_residual
    fine = residuals[2.5e-5]
    shrink = residuals[5e-5] / max(fine, 1e-300)
    ok = fine <= 1e-6 and 2.0 <= shrink <= 8.0
    return CriterionResult(
        11,
        "longitudinal force cancellation for a charged-wire field",
        ok,
        f"residual {fine:.2e} at 25 um grid (<=1e-6); refinement ratio {shrink:.2f} (~4 expected)",
    )


def criterion_12_fit_round_trip() -> CriterionResult:
    import time

    truth = TwoCoilModel(a_j1=0.5, i0=0.2, a_j1c=0.1, i0c=-0.3, j0_ic=0.05)
    rng = np.random.default_rng(12)
    cur_i = np.linspace(-1.0, 1.5, 20)
    cur_ic = rng.permutation(np.linspace(-1.2, 0.8, 20))
    data = [(i, c, truth(i, c)) for i, c in zip(cur_i, cur_ic)]
    t0 = time.perf_counter()
    fit = fit_two_coil(data, mode="j1")
    elapsed = time.perf_counter() - t0
    recovered = np.array(fit.model.as_tuple())
    expected = np.array(truth.as_tuple())
    rel = np.max(np.abs(recovered - expected) / np.abs(expected))
    ok = rel <= 0.01 and elapsed <= 10.0
    return CriterionResult(
        12,
        "noiseless two-coil fit round trip",
        ok,
        f"max parameter error {rel:.2e} (<=1%), rms {fit.rms_residual:.2e}, {elapsed:.2f} s",
    )


def criterion_13_population_unbalance() -> CriterionResult:
    two_pi = 2 * math.pi
    beta, dl, w = 3.65e9 * two_pi, 2.0e9 * two_pi, LI7.hfs_angular_frequency
    got = population_unbalance(beta, dl, w)
    s1 = math.sin(beta / dl) ** 4
    s2 = math.sin(beta / (dl + w)) ** 4
    brute = (s1 - s2) / (3 * s1 + 5 * s2)
    ok_val = abs(got - brute) <= 1e-12 * abs(brute) and -0.2 <= got <= 1 / 3
    sweep = np.linspace(1e9 * two_pi, 4e9 * two_pi, 2001)
    chis = np.array([population_unbalance(beta, d, w) for d in sweep])
    jumps = np.max(np.abs(np.diff(chis)))
    ok_cont = bool(np.all((-0.2 <= chis) & (chis <= 1 / 3)) and jumps < 5e-3)
    return CriterionResult(
        13,
        "population unbalance value, bounds and continuity",
        ok_val and ok_cont,
        f"chi = {got:.6e} (brute force {brute:.6e}); sweep max step {jumps:.2e}, "
        "all within [-1/5, 1/3]",
    )


def criterion_14_determinism() -> CriterionResult:
    scn = presets.coil_scan_scenario()
    text_a = records_to_csv(run_scenario(scn))
    text_b = records_to_csv(run_scenario(presets.coil_scan_scenario()))
    ok = text_a == text_b
    return CriterionResult(
        14,
        "byte-identical CSV for repeated runs",
        ok,
        f"{len(text_a)} bytes, {'identical' if ok else 'DIFFER'}",
    )


ALL_CRITERIA: tuple[Callable[[], CriterionResult], ...] = (
    criterion_01_hyperfine_splitting,
    criterion_02_expansion_tolerances,
    criterion_03_breit_rabi_vs_diagonalization,
    criterion_04_sagnac,
    criterion_05_stark_magnitude_and_null,
    criterion_06_visibility_revivals,
    criterion_07_closed_form_cross_check,
    criterion_08_moment_expansion,
    criterion_09_velocity_averaging,
    criterion_10_topological_invariances,
    criterion_11_force_cancellation,
    criterion_12_fit_round_trip,
    criterion_13_population_unbalance,
    criterion_14_determinism,
)


def run_all(verbose: bool = True) -> list[CriterionResult]:
    results = []
    for fn in ALL_CRITERIA:
        res = fn()
        results.append(res)
        if verbose:
            print(f"{'PASS' if res.passed else 'FAIL'}  {res.number:2d}  {res.name}: {res.detail}")
    return results
