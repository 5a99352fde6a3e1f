import math

import numpy as np
import pytest
from hypothesis import assume, given
from scipy.integrate import trapezoid
from hypothesis import strategies as st

from crowqed.errors import ExceptionalPointError, SingularSystemError, ValidationError
from crowqed.model import ModelParams, PopulationProfile, bare_dispersion, build_k_grid
from crowqed.oracle import build_single_excitation_h, lehmann_atom_gf, lehmann_photon_gf
from crowqed.spectral import (
    atom_gf,
    band_structure,
    branch_amplitudes,
    branch_dispersion,
    evaluate_gf,
    inverse_fft_response,
    photon_gf,
    poles_damped,
    poles_undamped,
    solve_appendix_a_system,
    time_response,
    track_poles,
)

from .conftest import inversions, model_params, wavenumbers

K_MID = math.pi / 2


def eom_reference(grid, profile, params, omega):
    """Both propagator blocks from the 2N mean-field equations of motion, solved without elimination."""
    n = len(grid)
    m = profile.kspace_matrix(grid)
    a = params.omega_a - 1j * params.gamma
    b = bare_dispersion(grid.values, params) - 1j * params.kappa
    k_mat = np.block([[np.diag(b), params.g * np.eye(n)], [-params.g * m.T, a * np.eye(n)]])
    source = np.block([[np.eye(n), np.zeros((n, n))], [np.zeros((n, n)), -m.T]])
    g_full = np.linalg.solve(omega * np.eye(2 * n) - k_mat, source)
    return g_full[:n, :n], g_full[n:, n:]


# ---- poles -----------------------------------------------------------------


def test_poles_decoupled_limit():
    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.0)
    for k in np.linspace(0, 2 * math.pi, 13):
        plus, minus = poles_undamped(k, p, -1.0)
        omega_k = bare_dispersion(k, p)
        assert plus == pytest.approx(max(omega_k, 1.5), abs=1e-14)
        assert minus == pytest.approx(min(omega_k, 1.5), abs=1e-14)


def test_poles_vacuum_rabi_doublet():
    p = ModelParams(omega_c=1.7, omega_a=1.7, g=0.3)
    plus, minus = poles_undamped(K_MID, p, -1.0)
    assert plus == pytest.approx(2.0, abs=1e-14)
    assert minus == pytest.approx(1.4, abs=1e-14)


def test_poles_fig4a_values(fig4a):
    br = branch_dispersion(K_MID, fig4a, -10.0)
    assert br.omega_d == pytest.approx(1.75, abs=1e-14)
    assert br.epsilon_k.real == pytest.approx(0.5 * math.sqrt(0.25 + 0.4), abs=1e-14)
    assert br.omega_plus.real == pytest.approx(2.15311, abs=1e-5)
    assert br.omega_minus.real == pytest.approx(1.34689, abs=1e-5)


def test_double_pole_is_flagged():
    # s_z > 0 lets the radicand vanish: (Omega_k - omega_a)^2 = 4 g^2 s_z
    p = ModelParams(omega_c=2.0, omega_a=1.0, g=0.5, n_atoms=2)
    poles = poles_undamped(K_MID, p, 1.0)
    assert poles.degenerate
    with pytest.raises(ExceptionalPointError):
        branch_amplitudes(K_MID, p, 1.0)
    assert not poles_undamped(K_MID, p, -1.0).degenerate


def test_inverted_population_gives_complex_pair():
    p = ModelParams(omega_c=1.0, omega_a=1.0, g=0.2, n_atoms=2)
    plus, minus = poles_undamped(K_MID, p, 1.0)
    assert plus.imag == pytest.approx(0.2, abs=1e-14) and minus.imag == pytest.approx(-0.2, abs=1e-14)


def test_damped_reduces_to_undamped():
    p = ModelParams(g=0.4, n_atoms=3)
    for k in np.linspace(0, 6, 7):
        assert poles_damped(k, p, -2.0) == poles_undamped(k, p, -2.0)


def test_damped_decoupled_limit():
    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.0, kappa=0.1, gamma=0.3)
    for k in np.linspace(0, 6, 9):
        got = sorted(poles_damped(k, p, -1.0), key=lambda z: (z.real, z.imag))
        want = sorted([bare_dispersion(k, p) - 0.1j, 1.5 - 0.3j], key=lambda z: (z.real, z.imag))
        np.testing.assert_allclose(got, want, atol=1e-14)


def test_damped_special_case_matches_f_factor():
    gamma, kappa, g = 1.0, 0.01, 0.1
    p = ModelParams(omega_c=1.5, omega_a=1.5, g=g, gamma=gamma, kappa=kappa, n_atoms=5)
    for s in (0.1, 0.5, 1.0, 2.0):
        plus, minus = poles_damped(K_MID, p, s)
        f = math.sqrt(1 + 4 * s * g**2 / gamma**2)
        assert abs(plus.imag - 0.5 * (f * gamma - gamma - kappa)) <= kappa
        assert abs(minus.imag + 0.5 * (f * gamma + gamma + kappa)) <= kappa


def test_damped_sign_of_loss_asymmetry():
    # the Lambda term enters as (Delta_k + i Lambda); the opposite sign would swap the decays at g -> 0
    p = ModelParams(omega_c=2.5, omega_a=1.0, g=1e-6, kappa=0.05, gamma=0.4)
    plus, minus = poles_damped(K_MID, p, -1.0)
    assert plus.imag == pytest.approx(-0.05, abs=1e-9)
    assert minus.imag == pytest.approx(-0.4, abs=1e-9)


@given(model_params(damped=True), wavenumbers, inversions)
def test_trace_and_determinant_identities(p, k, s):
    plus, minus = poles_damped(k, p, s)
    a = p.omega_a - 1j * p.gamma
    b = bare_dispersion(k, p) - 1j * p.kappa
    assert abs(plus + minus - (a + b)) < 1e-12
    assert abs(plus * minus - (a * b + p.g**2 * s)) < 1e-12


@given(model_params(damped=True), wavenumbers, inversions)
def test_amplitudes_sum_to_one(p, k, s):
    poles = poles_damped(k, p, s)
    assume(not poles.degenerate and abs(poles.plus - poles.minus) > 1e-6)
    amp_a, amp_b = branch_amplitudes(k, p, s)
    assert abs(amp_a + amp_b - 1) < 1e-12


def test_amplitude_examples():
    p = ModelParams(omega_c=1.5, omega_a=1.5, g=0.2, n_atoms=10)
    assert branch_amplitudes(K_MID, p, -3.0) == pytest.approx((0.5, 0.5), abs=1e-14)
    for delta in (-0.7, 0.3, 1.2):
        q = p.replace(delta=delta)
        varkappa = math.sqrt(delta**2 + 4 * 0.04 * 10)
        amp_a, amp_b = branch_amplitudes(K_MID, q, -10.0)
        assert amp_a == pytest.approx((delta + varkappa) / (2 * varkappa), abs=1e-13)
        assert amp_b == pytest.approx((-delta + varkappa) / (2 * varkappa), abs=1e-13)
    far = p.replace(delta=100.0)
    amp_a, amp_b = branch_amplitudes(K_MID, far, -1.0)
    assert amp_a.real > 0.9999 and amp_b.real < 1e-4 and amp_a.imag == 0
    br = branch_dispersion(K_MID, far, -1.0)
    assert br.atom_amplitudes == (br.amp_b, br.amp_a)


def test_track_poles_continuity_constant():
    rng = np.random.default_rng(3)
    for _ in range(100):
        s = -rng.uniform(0.1, 10)
        g = rng.uniform(0.05, 1.0)
        lam = math.sqrt(2 * g**2 * abs(s)) * rng.uniform(0, 1)
        kappa = rng.uniform(0, 0.3)
        p = ModelParams(omega_c=rng.uniform(0, 3), omega_a=rng.uniform(0, 3), g=g, kappa=kappa, gamma=kappa + lam,
                        n_atoms=10)
        ks = np.linspace(0, 2 * math.pi, 2001)
        poles = track_poles(ks, p, s)
        bound = 2 * p.j_hop * p.ell * (ks[1] - ks[0]) * (1 + 1e-9)
        for branch in poles:
            assert np.abs(np.diff(branch)).max() <= bound


def test_track_poles_fixes_principal_branch_jumps():
    # inverted population: the radicand circles the origin and the principal root flips sign
    p = ModelParams(omega_c=1.0, omega_a=1.0, g=0.3, kappa=0.05, gamma=0.2, n_atoms=2)
    ks = np.linspace(0, 2 * math.pi, 4001)
    principal = np.asarray(poles_damped(ks, p, 1.0).plus)
    tracked = track_poles(ks, p, 1.0).plus
    assert np.abs(np.diff(principal)).max() > 0.1
    assert np.abs(np.diff(tracked)).max() < 0.01
    # both descriptions give the same pair at every k
    pair = np.sort(np.stack([tracked, track_poles(ks, p, 1.0).minus]), axis=0)
    ref = np.sort(np.stack([principal, np.asarray(poles_damped(ks, p, 1.0).minus)]), axis=0)
    np.testing.assert_allclose(pair, ref, atol=1e-14)


def test_band_structure_is_consistent():
    p = ModelParams(g=0.3, n_sites=16, n_atoms=4, kappa=0.01, gamma=0.1)
    bands = band_structure(build_k_grid(p).values, p, -4.0)
    for br in bands:
        assert abs(br.amp_a + br.amp_b - 1) < 1e-12
        assert abs(br.omega_plus - br.omega_minus - 2 * br.epsilon_k) < 1e-14


# ---- Green functions --------------------------------------------------------


def test_free_propagators():
    p = ModelParams(g=0.0)
    w = np.linspace(-3, 6, 50)
    for k in (0.0, 1.0, 3.0):
        np.testing.assert_allclose(photon_gf(k, w, p, -1.0, 1e-3), 1 / (w - bare_dispersion(k, p) + 1e-3j), rtol=1e-14)
        np.testing.assert_allclose(atom_gf(k, w, p, -0.4, 1e-3), 0.4 / (w - p.omega_a + 1e-3j), rtol=1e-14)


def test_photon_gf_asymptotics():
    p = ModelParams(g=0.5, n_atoms=4)
    for w in (1e4, 1e6):
        assert photon_gf(0.3, w, p, -3.0) * w == pytest.approx(1.0, rel=1e-3)


@given(model_params(damped=True), wavenumbers, inversions, st.floats(-10, 10), st.floats(1e-4, 1.0))
def test_rational_and_branch_forms_agree(p, k, s, w, eps):
    poles = poles_damped(k, p, s)
    assume(abs(poles.plus - poles.minus) > 1e-3)
    for fn in (photon_gf, atom_gf):
        r = fn(k, w, p, s, eps)
        assert abs(r - fn(k, w, p, s, eps, form="branch")) <= 1e-10 * max(1.0, abs(r))


def test_rational_and_branch_forms_agree_bulk(rng):
    # 10^4 random (k, omega) points
    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.4, kappa=0.02, gamma=0.1, n_atoms=10)
    ks = rng.uniform(0, 2 * math.pi, 10_000)
    ws = rng.uniform(-2, 6, 10_000)
    for fn in (photon_gf, atom_gf):
        a = fn(ks, ws, p, -5.0, 1e-3)
        b = np.array([fn(k, w, p, -5.0, 1e-3, form="branch") for k, w in zip(ks[:500], ws[:500])])
        assert np.abs(a[:500] - b).max() < 1e-10
    with pytest.raises(ValidationError):
        photon_gf(0.0, 1.0, p, -1.0, form="nope")
    with pytest.raises(ValidationError):
        photon_gf(0.0, 1.0, p, -1.0, eps=0.0)


@given(model_params(damped=True), wavenumbers, st.floats(-10.0, 0.0), st.floats(-10, 10))
def test_spectral_positivity_without_inversion(p, k, s, w):
    assert photon_gf(k, w, p, s).imag <= 0
    assert atom_gf(k, w, p, s).imag <= 0


def test_spectral_peaks_at_fig4a_poles(fig4a):
    w = np.linspace(1.0, 2.5, 150_001)
    spec = -photon_gf(K_MID, w, fig4a, -10.0, 1e-3).imag / math.pi
    inner = (spec[1:-1] > spec[:-2]) & (spec[1:-1] > spec[2:])
    peaks = w[1:-1][inner]
    np.testing.assert_allclose(sorted(peaks), [1.34689, 2.15311], atol=2e-5)


def test_atom_gf_far_detuned_limit():
    p = ModelParams(omega_c=1.5 + 20.0, omega_a=1.5, g=0.1, n_atoms=10)
    minus = poles_undamped(K_MID, p, -10.0).minus
    w = np.linspace(minus - 0.05, minus + 0.05, 101)
    approx = 10.0 / (w - minus + 1e-3j)
    assert np.abs(atom_gf(K_MID, w, p, -10.0) - approx).max() / np.abs(approx).max() < 1e-3


def test_residues_sum_to_commutators():
    p = ModelParams(g=0.4, n_atoms=6, kappa=0.01, gamma=0.05)
    for s in (-6.0, -1.0, 2.5):
        amp_a, amp_b = branch_amplitudes(0.8, p, s)
        assert abs((amp_a + amp_b) - 1) < 1e-13
        # atom residues -s (B, A)
        assert abs(-s * (amp_b + amp_a) - (-s)) < 1e-13


def test_spectral_sum_rule(fig4a):
    centre = 1.75
    w = np.linspace(centre - 50, centre + 50, 2_000_001)
    spec = -photon_gf(K_MID, w, fig4a, -10.0, 1e-3).imag / math.pi
    area = trapezoid(spec, w)
    assert abs(area - 1) < 1e-2
    # the truncation loss is about (2/pi) eps / 50 per pole
    assert abs(area - 1) < 1e-4


def test_evaluate_gf_columns(fig4a):
    w = np.linspace(0, 3, 11)
    ev = evaluate_gf(K_MID, w, fig4a, -10.0, 1e-3)
    cols = ev.columns()
    assert list(cols) == ["omega", "re_photon", "im_photon", "re_atom", "im_atom"]
    np.testing.assert_allclose(cols["re_photon"] + 1j * cols["im_photon"], photon_gf(K_MID, w, fig4a, -10.0, 1e-3))
    np.testing.assert_allclose(ev.spectral_function("atom"), -ev.atom_gf.imag / math.pi)


# ---- coupled k-space solve --------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64])
def test_dense_solve_homogeneous(n):
    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.3, n_sites=n, n_atoms=3, kappa=0.02, gamma=0.05)
    grid = build_k_grid(p)
    profile = PopulationProfile.uniform(-2.0, n, 3)
    for w in (0.3 + 1e-3j, 1.7 + 1e-3j, 4.0 + 0.1j):
        photon, atom = solve_appendix_a_system(grid, profile, p, w)
        np.testing.assert_allclose(np.diag(photon), photon_gf(grid.values, w.real, p, -2.0, w.imag), atol=1e-10)
        np.testing.assert_allclose(np.diag(atom), atom_gf(grid.values, w.real, p, -2.0, w.imag), atol=1e-10)
        assert np.abs(photon - np.diag(np.diag(photon))).max() < 1e-10
        assert np.abs(atom - np.diag(np.diag(atom))).max() < 1e-10


def test_dense_solve_single_mode_is_jaynes_cummings():
    p = ModelParams(omega_c=1.0, omega_a=3.0, g=0.5, n_sites=1)
    grid = build_k_grid(p)
    w = 2.6 + 1e-3j
    photon, atom = solve_appendix_a_system(grid, PopulationProfile(np.array([-1.0])), p, w)
    omega_0 = 1.0 + 2.0
    assert photon[0, 0] == pytest.approx((w - 3.0) / ((w - 3.0) * (w - omega_0) - 0.25), abs=1e-13)
    assert atom[0, 0] == pytest.approx((w - omega_0) / ((w - 3.0) * (w - omega_0) - 0.25), abs=1e-13)


@pytest.mark.parametrize("profile_spec", ["defect:0:1", "defect:2:0.5", [0.3, -1.0, 0.8, -0.2]])
def test_dense_solve_matches_equations_of_motion(profile_spec):
    from crowqed.model import parse_profile

    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.4, n_sites=4, kappa=0.01, gamma=0.03)
    grid = build_k_grid(p)
    profile = parse_profile(profile_spec, 4)
    for w in (1.0 + 1e-3j, 1.6 + 1e-2j, 2.9 + 1e-3j):
        photon, atom = solve_appendix_a_system(grid, profile, p, w)
        ref_photon, ref_atom = eom_reference(grid, profile, p, w)
        np.testing.assert_allclose(photon, ref_photon, atol=1e-10)
        np.testing.assert_allclose(atom, ref_atom, atol=1e-10)
    assert np.abs(atom - np.diag(np.diag(atom))).max() > 1e-3


def test_dense_solve_all_ground_matches_lehmann():
    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.3, n_sites=4)
    grid = build_k_grid(p)
    h = build_single_excitation_h(p)
    profile = PopulationProfile.uniform(-1.0, 4)
    for w in np.linspace(0.0, 4.0, 9):
        photon, atom = solve_appendix_a_system(grid, profile, p, w + 1e-3j)
        for i, k in enumerate(grid.values):
            assert abs(photon[i, i] - lehmann_photon_gf(h, k, w, 1e-3)) < 1e-10
            assert abs(atom[i, i] - lehmann_atom_gf(h, k, w, 1e-3)) < 1e-10


def test_dense_solve_errors():
    p = ModelParams(n_sites=4, g=0.2)
    grid = build_k_grid(p)
    profile = PopulationProfile.uniform(-1.0, 4)
    with pytest.raises(SingularSystemError):
        solve_appendix_a_system(grid, profile, p, complex(bare_dispersion(0.0, p)))
    with pytest.raises(SingularSystemError):
        solve_appendix_a_system(grid, profile, p, complex(p.omega_a))
    with pytest.raises(ValidationError):
        solve_appendix_a_system(grid, profile, p, 1.0 + 1j, max_sites=2)


def test_evaluate_gf_inhomogeneous_uses_dense_solve():
    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.4, n_sites=4)
    grid = build_k_grid(p)
    profile = PopulationProfile.defect(1, 1.0, 4)
    w = np.linspace(0.5, 3.5, 7)
    ev = evaluate_gf(grid.values[1], w, p, profile, 1e-2)
    for j, x in enumerate(w):
        ref_photon, ref_atom = eom_reference(grid, profile, p, x + 1e-2j)
        assert abs(ev.photon_gf[j] - ref_photon[1, 1]) < 1e-10
        assert abs(ev.atom_gf[j] - ref_atom[1, 1]) < 1e-10
    with pytest.raises(ValidationError):
        evaluate_gf(0.3, w, p, profile)


# ---- time domain ------------------------------------------------------------


def test_time_response_causal_and_bare_decay():
    p = ModelParams(g=0.0, kappa=0.2, gamma=0.5)
    t = np.linspace(-5, 10, 301)
    g_t = time_response(0.4, p, -1.0, t)
    assert np.all(g_t[t < 0] == 0)
    after = t > 0
    np.testing.assert_allclose(np.abs(g_t[after]), np.exp(-0.2 * t[after]), rtol=1e-12)
    assert abs(g_t[t == 0][0]) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        time_response(0.4, p, -1.0, t, kind="phonon")


def test_time_response_atom_weights():
    p = ModelParams(g=0.0, gamma=0.5)
    t = np.linspace(0.1, 5, 20)
    np.testing.assert_allclose(np.abs(time_response(0.4, p, -0.6, t, kind="atom")), 0.6 * np.exp(-0.5 * t), rtol=1e-12)


@pytest.mark.parametrize(
    "kind, k, s",
    [("photon", K_MID, -10.0), ("photon", 0.4, -3.0), ("atom", K_MID, -10.0), ("atom", 2.5, -1.0)],
)
def test_inverse_fft_matches_residue_sum(kind, k, s):
    p = ModelParams(omega_c=2.0, omega_a=1.5, g=0.1, kappa=0.02, gamma=0.05, n_atoms=10)
    t, values = inverse_fft_response(k, p, s, eps=1e-3, kind=kind)
    ref = time_response(k, p, s, t, eps=1e-3, kind=kind)
    half = t < t[-1] / 2
    use = half & (t > 0) & (np.abs(ref) > 1e-8)
    rel = np.abs(values[use] - ref[use]) / np.abs(ref[use])
    assert rel.max() < 1e-6


def test_inverse_fft_rejects_growing_response():
    p = ModelParams(omega_c=1.5, omega_a=1.5, g=0.1, kappa=1e-4, gamma=1.0, n_atoms=2)
    with pytest.raises(ValidationError):
        inverse_fft_response(K_MID, p, 1.0, eps=1e-3)
    inverse_fft_response(K_MID, p, 1.0, eps=0.05, n_points=2**12)
