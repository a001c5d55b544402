import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from epchiral import dynamics, model, schedule
from epchiral.dynamics import IntegratorOptions
from epchiral.errors import (BranchTrackingFailed, RegimeError, StepTooCoarse,
                             UndersampledCarrier)
from epchiral.schedule import LoopSpec

from conftest import OMEGA, OMEGA_0


def _classical_rk4(f, y, t, dt):
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def test_step_matrix_equals_textbook_rk4():
    rng = np.random.default_rng(1)
    M0, M1 = rng.normal(size=(2, 3, 3)) + 1j * rng.normal(size=(2, 3, 3))
    gen = lambda t: M0 + np.sin(np.asarray(t))[..., None, None] * M1
    y = rng.normal(size=3) + 1j * rng.normal(size=3)
    t = np.array([0.0, 0.3, 1.7])
    P = dynamics.rk4_step_matrices(gen, t, 0.05)
    for k, tk in enumerate(t):
        ref = _classical_rk4(lambda s, v: gen(s) @ v, y, tk, 0.05)
        np.testing.assert_allclose(P[k] @ y, ref, rtol=1e-13)


def test_propagate_constant_generator_matches_expm():
    rng = np.random.default_rng(2)
    G = rng.normal(size=(2, 2)) * 0.3 + 1j * rng.normal(size=(2, 2)) * 0.3
    gen = lambda t: np.broadcast_to(G, np.shape(t) + (2, 2))
    y0 = np.array([1.0, 0.5j])
    times, states, log_scale = dynamics.propagate(gen, y0, 0.0, 5.0, 5000, record_stride=1000)
    np.testing.assert_allclose(times, [0, 1, 2, 3, 4, 5])
    for t, s, ls in zip(times, states, log_scale):
        np.testing.assert_allclose(s * np.exp(ls), expm(G * t) @ y0, rtol=1e-10)


def test_propagate_rescales_growing_solutions():
    G = np.diag([300.0, 299.0])
    gen = lambda t: np.broadcast_to(G, np.shape(t) + (2, 2))
    times, states, log_scale = dynamics.propagate(gen, np.array([1.0, 1.0]), 0.0, 3.0, 30000)
    assert np.all(np.isfinite(states))
    assert log_scale[-1] > 600
    # ratio of the components is unaffected by the rescaling
    assert states[-1, 1] / states[-1, 0] == pytest.approx(np.exp(-3.0), rel=1e-6)


def test_record_stride_includes_end():
    gen = lambda t: np.zeros(np.shape(t) + (1, 1))
    times, states, _ = dynamics.propagate(gen, np.array([1.0]), 0.0, 1.0, 10, record_stride=4)
    np.testing.assert_allclose(times, [0.0, 0.4, 0.8, 1.0])


def test_static_hamiltonian_eigenstate_evolves_by_phase(params):
    # a_theta = a_gamma = 0 freezes H; an eigenvector only picks up exp(-i lambda t)
    spec = LoopSpec(OMEGA / 2, 0.0, 0.0, OMEGA / 8, theta_center=0.3)
    for label in dynamics.LABELS:
        traj = dynamics.integrate_envelope(params, spec, label, IntegratorOptions(record_stride=100))
        frame = traj.frame(0)
        lam = frame.eigenvalue(label)
        expected = np.exp(-1j * lam * traj.times)[:, None] * frame.right(label)[None, :]
        np.testing.assert_allclose(traj.psi, expected, atol=1e-8)
        other = traj.c_minus if label == "plus" else traj.c_plus
        assert np.max(np.abs(other)) < 1e-8


def test_hermitian_norm_conserved(params):
    spec = LoopSpec(0.0, 0.0, np.pi / 6, OMEGA / 8)
    traj = dynamics.integrate_envelope(params, spec, "plus", IntegratorOptions(record_stride=200))
    norms = np.linalg.norm(traj.psi, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-9)


def test_envelope_matches_adaptive_solver(params, loop_spec):
    spec = loop_spec.with_direction(schedule.CW)
    traj = dynamics.integrate_envelope(params, spec, "minus", IntegratorOptions(record_stride=500))
    rhs = lambda t, y: -1j * model.build_hamiltonian(
        OMEGA, schedule.gamma_at(spec, t), schedule.theta_at(spec, t)) @ y
    ref = solve_ivp(rhs, (0, spec.duration), traj.states[0], method="DOP853",
                    rtol=1e-11, atol=1e-13, t_eval=traj.times)
    np.testing.assert_allclose(traj.psi, ref.y.T, rtol=1e-7, atol=1e-9 * np.abs(ref.y).max())


def test_coefficients_reconstruct_state(loop_runs):
    traj = loop_runs[schedule.CW, "minus"]
    r_plus, r_minus = model.eigenvectors(traj.alpha)
    rebuilt = traj.c_plus[:, None] * r_plus + traj.c_minus[:, None] * r_minus
    np.testing.assert_allclose(rebuilt, traj.states, atol=1e-12 * np.abs(traj.states).max())


def test_initial_coefficients(loop_runs):
    for (direction, label), traj in loop_runs.items():
        c = (traj.c_plus[0], traj.c_minus[0])
        assert abs(c[0] - (label == "plus")) < 1e-14 and abs(c[1] - (label == "minus")) < 1e-14
        assert traj.initial_label == label
        assert traj.times[-1] == pytest.approx(traj.spec.duration, rel=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.complex_numbers(max_magnitude=0.2, allow_nan=False, allow_infinity=False))
def test_diagonal_shift_only_changes_global_factor(params, loop_spec, shift):
    opts = IntegratorOptions(dt=loop_spec.period / 4000, record_stride=400)
    a = dynamics.integrate_envelope(params, loop_spec, "plus", opts)
    b = dynamics.integrate_envelope(params, loop_spec, "plus", opts, shift=shift)
    factor = np.exp(-1j * shift * a.times)[:, None]
    np.testing.assert_allclose(b.psi, a.psi * factor, rtol=1e-9, atol=1e-12)
    ratio_a = np.abs(a.c_plus / a.c_minus)
    ratio_b = np.abs(b.c_plus / b.c_minus)
    np.testing.assert_allclose(ratio_a, ratio_b, rtol=1e-9)


def test_integrate_envelope_guards(params, loop_spec):
    with pytest.raises(StepTooCoarse):
        dynamics.integrate_envelope(params, loop_spec, "plus", IntegratorOptions(dt=loop_spec.period / 10))
    with pytest.raises(ValueError):
        dynamics.integrate_envelope(params, loop_spec, "up")
    with pytest.raises(ValueError):
        IntegratorOptions(method="euler")
    with pytest.raises(ValueError):
        IntegratorOptions(dt=-1.0)
    # grazing the EP, the eigenbasis turns by pi/2 within a sliver of theta
    graze = schedule.straight_path(OMEGA, gamma_0=OMEGA * (1 - 1e-6))
    with pytest.raises(BranchTrackingFailed):
        dynamics.integrate_envelope(params, graze, "plus")


def test_explicit_initial_state(params, loop_spec):
    a = dynamics.integrate_envelope(params, loop_spec, "plus", IntegratorOptions(record_stride=1000))
    b = dynamics.integrate_envelope(params, loop_spec, a.states[0], IntegratorOptions(record_stride=1000))
    np.testing.assert_array_equal(a.states, b.states)
    assert b.initial_label is None


# -- full mechanical dynamics --------------------------------------------------

def test_full_dynamics_static_trap_matches_expm(params):
    spec = LoopSpec(0.0, 0.0, 0.0, OMEGA / 8, theta_center=0.2)
    x0 = np.array([1.0, 0.0, 0.0, 0.3])
    fine = IntegratorOptions(dt=2 * np.pi / (400 * OMEGA_0))
    run = dynamics.integrate_full(params, spec, x0, fine, t_end=2.0)
    G = dynamics.full_generator(params, spec)(np.array([0.0]))[0]
    exact = expm(G * run.times[-1]) @ x0
    scale = np.array([1, 1, OMEGA_0, OMEGA_0])
    np.testing.assert_allclose(run.states[-1] / scale, exact / scale, atol=1e-7)


def test_full_dynamics_energy_conserved_without_gain(params):
    spec = LoopSpec(0.0, 0.0, 0.0, OMEGA / 8, theta_center=0.2)
    fine = IntegratorOptions(dt=2 * np.pi / (400 * OMEGA_0))
    run = dynamics.integrate_full(params, spec, [1.0, 0.5, 0.0, 0.0], fine, t_end=5.0)
    eff = model.effective_frequencies(params, 0.2)
    x, y, vx, vy = run.states.T
    energy = 0.5 * (vx ** 2 + vy ** 2 + eff.omega_x ** 2 * x ** 2 + eff.omega_y ** 2 * y ** 2) \
        + eff.eta * x * y
    np.testing.assert_allclose(energy, energy[0], rtol=1e-7)


def test_full_step_guard(params, loop_spec):
    with pytest.raises(StepTooCoarse):
        dynamics.integrate_full(params, loop_spec, [1, 0, 0, 0], IntegratorOptions(dt=0.2 / OMEGA_0))


def test_demodulate_recovers_envelope():
    t = np.linspace(0, 20, 200001)
    A = np.column_stack([0.3 * np.exp(-1j * 0.2 * t), (0.1 + 0.2j) * np.exp(0.01 * t)])
    x = 2 * (A * np.exp(1j * OMEGA_0 * t)[:, None]).real
    dA = np.column_stack([-0.2j * A[:, 0], 0.01 * A[:, 1]])
    v = 2 * ((dA + 1j * OMEGA_0 * A) * np.exp(1j * OMEGA_0 * t)[:, None]).real
    run = dynamics.MechSamples(t, np.column_stack([x, v]))
    dem = dynamics.demodulate(run, OMEGA_0, OMEGA)
    inner = slice(20000, -20000)
    np.testing.assert_allclose(dem.states[inner], A[inner], atol=0.01)
    raw = dynamics.demodulate(run, OMEGA_0, cutoff=0)
    np.testing.assert_allclose(raw.states[inner], A[inner], atol=0.02)


def test_demodulate_rejects_undersampling():
    t = np.arange(0, 10, 1 / 30)
    run = dynamics.MechSamples(t, np.zeros((t.size, 4)))
    with pytest.raises(UndersampledCarrier):
        dynamics.demodulate(run, OMEGA_0, OMEGA)


def test_mech_from_envelope_roundtrip():
    psi = np.array([0.3 + 0.1j, -0.2j])
    dpsi = np.array([0.01j, 0.02])
    mech = dynamics.mech_from_envelope(psi, dpsi, OMEGA_0)
    np.testing.assert_allclose(mech[:2], 2 * psi.real)
    # the demodulation formula returns psi up to a correction of order dpsi / omega_0
    a = (mech[:2] - 1j * mech[2:] / OMEGA_0) / 2
    np.testing.assert_allclose(a, psi - 1j * dpsi.real / OMEGA_0, atol=1e-15)


def test_verify_regime_guard():
    strong = model.SystemParams.from_detuning(2 * np.pi, 2 * np.pi * 0.5)
    spec = schedule.encircling_loop(strong.Omega)
    with pytest.raises(RegimeError):
        dynamics.verify_envelope_reduction(strong, spec)


def test_rk4_fourth_order(params, loop_spec):
    spec = loop_spec.with_direction(schedule.CW)
    gen = dynamics.envelope_generator(OMEGA, spec)
    y0 = model.eigenframe(OMEGA, schedule.gamma_at(spec, 0), schedule.theta_at(spec, 0)).r_plus
    t1 = spec.period / 4
    end = lambda n: dynamics.propagate(gen, y0, 0.0, t1, n)[1][-1]
    ref = end(64 * 16)
    e1 = np.linalg.norm(end(64) - ref)
    e2 = np.linalg.norm(end(128) - ref)
    assert e1 / e2 > 12


def test_initial_state_and_projection():
    f = model.eigenframe(1.0, 0.0, np.pi / 4)
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(dynamics.initial_state(f, "plus"), [-s, s])
    np.testing.assert_allclose(dynamics.initial_state(f, "minus"), [s, s])
    g = model.eigenframe(OMEGA, 0.4 * OMEGA, 0.5)
    assert dynamics.project_coefficients(dynamics.initial_state(g, "plus"), g) == pytest.approx((1, 0))
    assert dynamics.project_coefficients(g.r_plus + g.r_minus, g) == pytest.approx((1, 1))
    with pytest.raises(ValueError):
        dynamics.initial_state(g, "zero")


@settings(max_examples=100)
@given(st.floats(0.01, 2.0), st.floats(0.0, 3.0), st.floats(0.0, np.pi),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_projection_matches_linear_solve(Omega, g, theta, a, b):
    Gamma = g * Omega
    if abs(Gamma - Omega) < 1e-3 * Omega and abs(np.cos(2 * theta)) < 1e-3:
        return
    f = model.eigenframe(Omega, Gamma, theta)
    psi = np.array([a, b])
    c = np.linalg.solve(np.column_stack([f.r_plus, f.r_minus]), psi)
    got = np.array(dynamics.project_coefficients(psi, f))
    cond = np.linalg.cond(np.column_stack([f.r_plus, f.r_minus]))
    np.testing.assert_allclose(got, c, atol=1e-12 * cond * (1 + np.abs(psi).max()))
    rebuilt = got[0] * f.r_plus + got[1] * f.r_minus
    np.testing.assert_allclose(rebuilt, psi, atol=1e-12 * (1 + np.abs(psi).max()))
    assert f.r_plus @ f.r_plus == pytest.approx(1, abs=1e-12)
    assert f.r_minus @ f.r_minus == pytest.approx(1, abs=1e-12)


def test_static_hermitian_norm_over_ten_periods(params):
    spec = LoopSpec(0.0, 0.0, 0.0, OMEGA / 10, theta_center=0.4)  # T = 10 * 2 pi / Omega
    psi0 = np.array([0.6, 0.8j])
    traj = dynamics.integrate_envelope(params, spec, psi0, IntegratorOptions(record_stride=100))
    np.testing.assert_allclose(np.linalg.norm(traj.psi, axis=1), 1.0, atol=1e-10)


def test_decoupled_eigenstate_phase(params):
    spec = LoopSpec(0.0, 0.0, 0.0, OMEGA / 8, theta_center=0.0)
    traj = dynamics.integrate_envelope(params, spec, "plus", IntegratorOptions(record_stride=100))
    expected = np.exp(-0.5j * OMEGA * traj.times)[:, None] * np.array([0, 1])[None, :]
    np.testing.assert_allclose(traj.psi, expected, atol=1e-8)


def test_linearity(params, loop_spec):
    opts = IntegratorOptions(record_stride=1000)
    a = dynamics.integrate_envelope(params, loop_spec, np.array([0.3, -0.2j]), opts)
    b = dynamics.integrate_envelope(params, loop_spec, (2 - 1j) * np.array([0.3, -0.2j]), opts)
    np.testing.assert_allclose(b.psi, (2 - 1j) * a.psi, rtol=1e-10)


def test_plus_dominates_on_stable_cw_run(loop_runs):
    traj = loop_runs[schedule.CW, "plus"]
    assert np.all(np.abs(traj.c_plus) > np.abs(traj.c_minus))


def test_free_oscillator(params):
    spec = LoopSpec(0.0, 0.0, 0.0, OMEGA / 8, theta_center=0.0)
    fine = IntegratorOptions(dt=2 * np.pi / (1000 * OMEGA_0))
    t_end = 10 * 2 * np.pi / params.omega_x0
    run = dynamics.integrate_full(params, spec, [0.7, 0.0, 0.0, 0.0], fine, t_end=t_end)
    np.testing.assert_allclose(run.x, 0.7 * np.cos(params.omega_x0 * run.times), atol=1e-6 * 0.7)
    assert np.all(run.y == 0)


def test_damped_oscillator_envelope(params):
    gamma = 0.05
    spec = LoopSpec(gamma, 0.0, 0.0, OMEGA / 8, theta_center=0.0)
    run = dynamics.integrate_full(params, spec, [1.0, 0.0, 0.0, 0.0], t_end=5 / gamma)
    amp = np.hypot(run.x, run.vx / params.omega_x0)
    inner = run.times > 1.0
    np.testing.assert_allclose(amp[inner], np.exp(-gamma * run.times[inner] / 2), rtol=0.01)


@pytest.mark.parametrize("detune", [0.0, OMEGA / 2])
def test_demodulate_carriers(detune):
    a = 0.4
    t = np.arange(0, 40, 2 * np.pi / (50 * OMEGA_0))
    w = OMEGA_0 + detune
    x = 2 * a * np.cos(w * t)
    v = -2 * a * w * np.sin(w * t)
    run = dynamics.MechSamples(t, np.column_stack([x, np.zeros_like(t), v, np.zeros_like(t)]))
    dem = dynamics.demodulate(run, OMEGA_0, OMEGA)
    inner = slice(t.size // 10, -t.size // 10)
    A = dem.states[inner, 0]
    np.testing.assert_allclose(np.abs(A), a, rtol=0.01)
    phase = np.unwrap(np.angle(A))
    slope = np.polyfit(t[inner], phase, 1)[0]
    assert slope == pytest.approx(detune, abs=1e-3 * OMEGA)


def test_verify_static_hermitian(params):
    spec = LoopSpec(0.0, 0.0, 0.0, OMEGA / 8, theta_center=0.3)
    report = dynamics.verify_envelope_reduction(params, spec, "plus")
    assert report.passed and report.rms_error < 1e-3


def test_verify_encircling_loop(params, loop_spec):
    report = dynamics.verify_envelope_reduction(params, loop_spec.with_direction(schedule.CW), "minus")
    assert report.passed and report.rms_error < 0.05
    assert set(report.to_dict()) == {"rms_error", "max_error", "pass", "tol"}
