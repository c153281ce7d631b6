import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svlab import pseudospin as ps
from svlab.gaussian import DomainError
from svlab.svetlichny import quantum_bound

from oracles import dense_correlator, dense_state, ladder_operator

SQRT2 = math.sqrt(2)
ZX = (math.pi / 2, 0.0)


def brute_force_f(n):
    """Exact shell residual at infinite squeezing, summed with rational arithmetic where possible."""
    def amp(k):
        total = sum(k)
        if min(k) < 0 or total % 2:
            return 0.0
        h = total // 2
        return math.factorial(2 * h) / (math.factorial(h) * 6 ** h) / math.sqrt(
            math.prod(math.factorial(x) for x in k)
        )

    def image(x):
        return x + 1 if x % 2 == 0 else x - 1

    total = 0.0
    for k1 in range(2 * n + 1):
        for k2 in range(2 * n + 1 - k1):
            k3 = 2 * n - k1 - k2
            total += (amp((k1, k2, k3)) - amp((k1, image(k2), image(k3)))) ** 2
    return total


# state construction


def test_vacuum_state():
    state = ps.ghz_state_fock(0.0)
    assert state.cutoff == 0
    amps = state.amplitudes
    assert amps[0, 0, 0] == 1.0
    assert np.count_nonzero(amps) == 1


def test_cutoff_meets_tolerance_at_r1():
    assert ps.ghz_state_fock(1.0, 60).norm_deficit < 1e-8


def test_shell_one_ratio():
    amps = ps.ghz_state_fock(0.7, 4, check_tail=False).amplitudes
    assert amps[2, 0, 0] / amps[1, 1, 0] == pytest.approx(SQRT2 / 2, rel=1e-14)


@pytest.mark.parametrize("r,cutoff", [(0.3, 6), (0.8, 8), (1.2, 10)])
def test_amplitudes_against_plain_factorials(r, cutoff):
    state = ps.ghz_state_fock(r, cutoff, check_tail=False)
    assert np.allclose(state.amplitudes, dense_state(r, cutoff), rtol=1e-13, atol=1e-300)


@pytest.mark.parametrize("r", [0.4, 1.0, 1.6])
def test_norm_deficit_matches_tensor(r):
    cutoff = ps.auto_cutoff(r) if r < 1.5 else 120
    state = ps.ghz_state_fock(r, cutoff, check_tail=False)
    assert 1.0 - np.sum(state.amplitudes ** 2) == pytest.approx(state.norm_deficit, abs=1e-14)
    assert state.norm_deficit >= 0


def test_state_invariants(ghz_states):
    amps = ps.ghz_state_fock(1.1, 24, check_tail=False).amplitudes
    idx = np.indices(amps.shape).sum(axis=0)
    assert np.all(amps[idx % 2 == 1] == 0)
    for perm in itertools.permutations(range(3)):
        assert np.array_equal(np.transpose(amps, perm), amps)
    assert np.isrealobj(amps)
    for state in ghz_states.values():
        assert 0 <= state.norm_deficit < state.tail_tol


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0])
def test_auto_cutoff_policy(r):
    c = ps.auto_cutoff(r)
    assert c % 2 == 0
    assert ps.norm_deficit(r, c) < ps.TAIL_TOL
    assert ps.norm_deficit(r, c - 2) >= ps.TAIL_TOL / ps.CUTOFF_HEADROOM


def test_state_errors():
    with pytest.raises(DomainError):
        ps.ghz_state_fock(-0.1)
    with pytest.raises(DomainError):
        ps.ghz_state_fock(1.0, 7)
    with pytest.raises(ps.TailToleranceError):
        ps.ghz_state_fock(2.0, 4)


# single-mode operators


def test_zz_sign_on_even_levels():
    tensor = np.zeros((4, 4, 4))
    tensor[0, 0, 0] = 1.0
    out, leak = ps.apply_pseudospin(tensor, "a", (0.0, 0.0))
    assert out[0, 0, 0] == -1.0 and leak == 0.0


def test_raising_kills_odd_levels():
    up = ladder_operator(math.pi / 2, 0.0, 6) + ladder_operator(math.pi / 2, math.pi / 2, 6) * 1j
    # (Zx + i Zy)/2 with Zy at phi = pi/2 recovers the raising part
    raise_op = 0.5 * up
    for m in range(3):
        assert np.allclose(raise_op @ np.eye(6)[2 * m + 1], 0)
    tensor = np.zeros((6, 1, 1), dtype=complex)
    tensor[3, 0, 0] = 1.0
    out, _ = ps.apply_pseudospin(tensor, 0, (math.pi / 2, 0.3))
    assert out[4, 0, 0] == 0 and abs(out[2, 0, 0]) == pytest.approx(1.0)


@given(st.floats(-4, 4), st.floats(-4, 4), st.integers(0, 2))
@settings(max_examples=40)
def test_unit_square_and_hermitian(theta, phi, mode):
    rng = np.random.default_rng(0)
    shape = (6, 4, 8)
    psi = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    chi = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    once, leak = ps.apply_pseudospin(psi, mode, (theta, phi))
    twice, _ = ps.apply_pseudospin(once, mode, (theta, phi))
    assert leak == 0.0
    assert np.allclose(twice, psi, atol=1e-12)
    z_chi, _ = ps.apply_pseudospin(chi, mode, (theta, phi))
    assert np.vdot(chi, once) == pytest.approx(np.vdot(z_chi, psi), abs=1e-10)


def test_matrix_against_dense_operator():
    for theta, phi in [(0.3, 1.1), (2.0, -0.4), (math.pi / 2, math.pi)]:
        dense = ladder_operator(theta, phi, 4)
        assert np.allclose(dense[:2, :2], ps.pseudospin_matrix(theta, phi), atol=1e-15)
        assert np.allclose(dense[2:, 2:], ps.pseudospin_matrix(theta, phi), atol=1e-15)


def test_bloch_vector_matches_matrix():
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    for theta, phi in [(0.3, 1.1), (2.0, -0.4), (1.0, 3.0)]:
        v = ps.bloch_vector(theta, phi)
        assert np.allclose(sum(c * p for c, p in zip(v, paulis)), ps.pseudospin_matrix(theta, phi))


def test_leakage_reported_on_odd_axis():
    tensor = np.zeros((5, 1, 1))
    tensor[4, 0, 0] = 1.0
    _, leak = ps.apply_pseudospin(tensor, 0, (0.5, 0.0))
    assert leak == pytest.approx(math.sin(0.5))
    with pytest.warns(ps.LeakageWarning):
        ps.warn_on_leakage(leak)


def test_parity_superselection():
    state = ps.ghz_state_fock(0.9, 12, check_tail=False)
    psi = state.amplitudes
    idx = np.indices(psi.shape).sum(axis=0)
    zz, _ = ps.apply_pseudospin(psi, 1, (0.0, 0.0))
    assert np.all(zz[idx % 2 == 1] == 0)
    zx, _ = ps.apply_pseudospin(psi, 1, (math.pi / 2, 0.7))
    assert np.allclose(zx[idx % 2 == 0], 0)


@given(st.floats(-3, 3), st.floats(-10, 10))
def test_canonical_angles_equivalent(theta, phi):
    t, p = ps.canonical_angles(theta, phi)
    assert 0 <= t <= math.pi and -math.pi < p <= math.pi
    assert np.allclose(ps.pseudospin_matrix(t, p), ps.pseudospin_matrix(theta, phi), atol=1e-12)


def test_setting_set_shape_and_fixed():
    fixed = ps.PseudospinSettingSet.fixed()
    assert fixed.angles.shape == (3, 2, 2)
    assert fixed.setting("b", 1) == pytest.approx((3 * math.pi / 4, math.pi / 2))
    with pytest.raises(ValueError):
        ps.PseudospinSettingSet(np.full((3, 2, 2), np.nan))


# correlators


def test_total_parity_correlator(ghz_states):
    for state in ghz_states.values():
        assert ps.correlation(state, [(0.0, 0.0)] * 3) == pytest.approx(-1.0, abs=1e-9)


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
@settings(max_examples=30)
def test_vacuum_correlator(xs):
    state = ps.ghz_state_fock(0.0)
    settings_ = [(xs[0], xs[1]), (xs[2], xs[3]), (xs[4], xs[5])]
    expected = -math.cos(xs[0]) * math.cos(xs[2]) * math.cos(xs[4])
    assert ps.correlation(state, settings_) == pytest.approx(expected, abs=1e-12)


def test_mode_permutation_invariance():
    state = ps.ghz_state_fock(1.3)
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = [tuple(x) for x in rng.uniform(-3, 3, (3, 2))]
        assert ps.correlation(state, [s[0], s[2], s[1]]) == pytest.approx(ps.correlation(state, s), abs=1e-12)
        assert ps.correlation(state, [s[1], s[0], s[2]]) == pytest.approx(ps.correlation(state, s), abs=1e-12)


@pytest.mark.parametrize("r,cutoff", [(0.5, 4), (0.8, 6), (1.5, 8)])
def test_dense_operator_oracle(r, cutoff):
    state = ps.ghz_state_fock(r, cutoff, check_tail=False)
    psi = dense_state(r, cutoff)
    rng = np.random.default_rng(cutoff)
    for _ in range(15):
        angles = rng.uniform(-math.pi, math.pi, (3, 2))
        dense = dense_correlator(psi, angles)
        assert abs(dense.imag) < 1e-12
        assert ps.correlation(state, angles) == pytest.approx(dense.real, abs=1e-12)


@pytest.mark.parametrize("r", [0.6, 1.4])
def test_closed_form_pair_matrix_matches_tensor(r):
    cutoff = 40
    state = ps.ghz_state_fock(r, cutoff, check_tail=False)
    explicit = ps.state_from_tensor(state.amplitudes)
    assert np.allclose(state.pair_matrix, explicit.pair_matrix, atol=1e-14)
    assert ps.zx_zx_expectation(state) == pytest.approx(ps.zx_zx_expectation(explicit), abs=1e-13)


def test_tensor_correlator_path():
    state = ps.ghz_state_fock(0.9, 10, check_tail=False)
    angles = [(0.4, 1.0), (1.3, -0.2), (2.2, 0.5)]
    value, leak = ps.correlation_from_tensor(state.amplitudes, angles)
    assert leak == 0.0
    assert value == pytest.approx(ps.correlation(state, angles), abs=1e-13)


# Svetlichny values


def test_product_state_is_local():
    state = ps.ghz_state_fock(0.0)
    rng = np.random.default_rng(9)
    for _ in range(200):
        s = ps.PseudospinSettingSet(rng.uniform(-math.pi, math.pi, (3, 2, 2)))
        assert abs(ps.svetlichny_pseudospin(state, s)) <= 1 + 1e-12


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0, 3.0])
def test_fixed_settings_identity(r, ghz_states):
    state = ghz_states[r]
    fixed = ps.svetlichny_fixed_settings(state)
    general = ps.svetlichny_pseudospin(state, ps.PseudospinSettingSet.fixed())
    assert fixed == pytest.approx(general, abs=1e-9)
    assert fixed - SQRT2 / 4 == pytest.approx(3 * SQRT2 / 4 * ps.zx_zx_expectation(state), abs=1e-10)


def test_fixed_settings_values(ghz_states):
    assert ps.svetlichny_fixed_settings(ghz_states[0.0]) == pytest.approx(SQRT2 / 4, abs=1e-15)
    assert ps.svetlichny_fixed_settings(ghz_states[2.0]) > ps.svetlichny_fixed_settings(ghz_states[1.0])


def test_fixed_settings_monotone_and_bounded(ghz_states, regression):
    values = [ps.svetlichny_fixed_settings(ghz_states[r]) for r in sorted(ghz_states)]
    assert np.all(np.diff(values) > 0)
    assert max(values) < SQRT2
    for r, value in zip(sorted(ghz_states), values):
        assert value == pytest.approx(regression["s3_fixed"][str(r)], abs=1e-12)


def test_fixed_settings_parity_violation():
    tensor = np.zeros((2, 2, 2))
    tensor[0, 0, 0] = tensor[1, 0, 0] = 1 / SQRT2
    with pytest.raises(ps.ParityViolationError):
        ps.svetlichny_fixed_settings(ps.state_from_tensor(tensor))


@pytest.mark.parametrize("r", [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
def test_cutoff_stability(r):
    assert ps.cutoff_stability(r) < ps.TAIL_TOL


# residual norm and shell sums


def test_residual_vacuum():
    assert ps.residual_norm(0.0) == pytest.approx(SQRT2, abs=1e-15)


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0, 3.0])
def test_residual_identity(r, ghz_states):
    state = ghz_states[r]
    res = ps.residual_norm(r)
    assert res ** 2 + 2 * ps.zx_zx_expectation(state) == pytest.approx(2.0, abs=1e-9)
    assert res >= 0


def test_residual_decreases():
    assert ps.residual_norm(3.0) < ps.residual_norm(2.0) < ps.residual_norm(1.0)


@pytest.mark.parametrize("r,cutoff", [(0.7, 6), (1.3, 8)])
def test_residual_against_dense_vector(r, cutoff):
    psi = dense_state(r, cutoff)
    psi /= np.linalg.norm(psi)
    # pad so that lowered and raised images stay inside the box
    padded = np.zeros((cutoff + 4,) * 3)
    padded[: cutoff + 2, : cutoff + 2, : cutoff + 2] = psi
    image, _ = ps.apply_pseudospin(padded, 1, ZX)
    image, _ = ps.apply_pseudospin(image, 2, ZX)
    expected = np.linalg.norm(padded - image)
    assert ps.residual_norm(r, cutoff, tail_tol=math.inf) == pytest.approx(expected, abs=1e-12)


def test_f_zero():
    assert ps.shell_term_f(0) == pytest.approx(4 / 9, abs=1e-15)
    assert Fraction(4, 9) == Fraction(2, 3) ** 2


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13])
def test_f_against_brute_force(n):
    assert ps.shell_term_f(n) == pytest.approx(brute_force_f(n), rel=1e-12)


def test_f_pruning_is_lossless():
    for n in (40, 150):
        pruned = ps.shell_residual_sum(2 * n, 0.0)
        full = ps.shell_residual_sum(2 * n, 0.0, margin=None)
        assert pruned == pytest.approx(full, rel=1e-14)


def test_f_positive_and_decreasing():
    fs = ps.f_sequence(range(0, 301))
    assert np.all(fs > 0)
    assert np.all(np.diff(fs[2:]) < 0)


def test_f_sequence_executor_order():
    from concurrent.futures import ThreadPoolExecutor

    ns = [7, 3, 50, 0]
    with ThreadPoolExecutor(3) as pool:
        assert np.array_equal(ps.f_sequence(ns, pool), ps.f_sequence(ns))


def test_f_regression(regression):
    for n, value in regression["f"].items():
        assert ps.shell_term_f(int(n)) == pytest.approx(value, rel=1e-12)


def test_precision_guard():
    with pytest.raises(ps.PrecisionError):
        ps.shell_residual_sum(2000, 5.0)
    with pytest.raises(DomainError):
        ps.shell_term_f(-1)


def test_fit_power_law_exact():
    ns = np.arange(1, 50)
    prefactor, exponent = ps.fit_power_law(ns, 2.0 * ns ** -1.5, window=(1, 49))
    assert prefactor == pytest.approx(2.0, abs=1e-10)
    assert exponent == pytest.approx(-1.5, abs=1e-10)


def test_fit_power_law_errors():
    with pytest.raises(ValueError):
        ps.fit_power_law([1, 2], [1.0, 0.5])
    with pytest.raises(ValueError):
        ps.fit_power_law([1, 2, 3], [1.0, -0.5, 0.2], window=(0, 10))


def test_f_power_law_and_window_sensitivity():
    ns = np.arange(100, 1001)
    fs = ps.f_sequence(ns)
    prefactor, exponent = ps.fit_power_law(ns, fs, window=(100, 1000))
    assert exponent == pytest.approx(-1.5, abs=0.05)
    assert prefactor == pytest.approx(0.282, abs=0.02)
    _, exponent_200 = ps.fit_power_law(ns, fs, window=(200, 1000))
    assert abs(exponent_200 - exponent) < 0.02
    assert np.all(fs * ns ** 1.5 > 0.25)


# angle optimization


def test_optimizer_product_state():
    assert ps.optimize_pseudospin_settings(ps.ghz_state_fock(0.0), n_starts=5).s_opt <= 1 + 1e-6


@pytest.fixture(scope="module")
def optimized(ghz_states):
    return {r: ps.optimize_pseudospin_settings(state) for r, state in ghz_states.items() if r > 0}


def test_optimizer_dominates_fixed(optimized, ghz_states):
    for r, opt in optimized.items():
        state = ghz_states[r]
        assert opt.s_opt >= ps.svetlichny_fixed_settings(state) - 1e-9
        assert opt.s_opt == pytest.approx(ps.svetlichny_pseudospin(state, opt.settings), abs=1e-12)
        assert opt.s_opt <= quantum_bound(3) + 1e-9


def test_optimizer_monotone(optimized):
    values = [optimized[r].s_opt for r in sorted(optimized)]
    assert np.all(np.diff(values) >= -1e-9)


def test_optimizer_regression(optimized, regression):
    for r, opt in optimized.items():
        assert opt.s_opt == pytest.approx(regression["s3_optimized"][str(r)], abs=1e-7)


def test_optimizer_deterministic():
    state = ps.ghz_state_fock(1.0)
    a = ps.optimize_pseudospin_settings(state, n_starts=4, seed=3)
    b = ps.optimize_pseudospin_settings(state, n_starts=4, seed=3)
    assert a.s_opt == b.s_opt and np.array_equal(a.settings.angles, b.settings.angles)


def test_optimized_value_near_quantum_bound_at_r3(optimized):
    # expected to fail: the computed value is 1.34906, about 0.065 below sqrt(2)
    assert abs(optimized[3.0].s_opt - SQRT2) < 0.02
