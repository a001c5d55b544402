"""
Time integration of the envelope equation and the full mechanical equations.

Both systems are linear, ``dy/dt = G(t) y``, so a classical RK4 step is a
matrix ``P_k`` built from ``G`` at ``t_k``, ``t_k + dt/2`` and ``t_k + dt``.
The step matrices are assembled in vectorized chunks and applied in a plain
loop, which keeps fixed-step RK4 cheap enough for dense parameter sweeps.

Envelope states are complex 2-vectors ``Psi = (A_x, A_y)``; mechanical states
are real 4-vectors ``(x, y, vx, vy)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import model, schedule
from .errors import (AmbiguousBranch, BranchTrackingFailed, NonFinite,
                     StepTooCoarse, UndersampledCarrier)

ENVELOPE_STEPS_PER_PERIOD = 20000
FULL_STEPS_PER_CARRIER = 50
RESCALE_THRESHOLD = 1e100
LABELS = ("plus", "minus")

_CHUNK = 4096
_RESCALE_EVERY = 64


@dataclass(frozen=True)
class IntegratorOptions:
    """Fixed-step integration settings.

    ``dt=None`` selects the default for the run: ``T/20000`` for envelope runs
    and ``2 pi / (50 omega_0)`` for full runs. The step is shrunk slightly so
    that an integer number of steps ends exactly on the run length.
    """

    dt: float | None = None
    method: str = "rk4"
    record_stride: int = 1

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}; only 'rk4'")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")


def rk4_step_matrices(generator, t, dt):
    """RK4 one-step propagators for ``dy/dt = G(t) y`` at step starts ``t``.

    ``generator`` maps an array of times to an array of ``G`` matrices of
    shape ``(len(t), d, d)``.
    """
    G1 = generator(t)
    G2 = generator(t + dt / 2)
    G4 = generator(t + dt)
    eye = np.eye(G1.shape[-1])
    K1 = G1
    K2 = G2 @ (eye + (dt / 2) * K1)
    K3 = G2 @ (eye + (dt / 2) * K2)
    K4 = G4 @ (eye + dt * K3)
    return eye + (dt / 6) * (K1 + 2 * K2 + 2 * K3 + K4)


def propagate(generator, y0, t0, t1, n_steps, record_stride=1, rescale=True):
    """Integrate a linear ODE with fixed-step RK4 from ``t0`` to ``t1``.

    Returns
    -------
    times : ndarray
        Recorded times, every ``record_stride`` steps plus the final time.
    states : ndarray
        Recorded states, divided by ``exp(log_scale)``.
    log_scale : ndarray
        Natural log of the accumulated rescaling factor at each record.
    """
    y = np.array(y0, dtype=np.result_type(y0, complex) if np.iscomplexobj(y0) else float)
    dt = (t1 - t0) / n_steps
    rec_idx = np.arange(0, n_steps + 1, record_stride)
    if rec_idx[-1] != n_steps:
        rec_idx = np.append(rec_idx, n_steps)
    states = np.empty((rec_idx.size, y.size), dtype=y.dtype)
    log_scale = np.zeros(rec_idx.size)
    states[0] = y
    log_s = 0.0
    r = 1
    for start in range(0, n_steps, _CHUNK):
        stop = min(start + _CHUNK, n_steps)
        P = rk4_step_matrices(generator, t0 + dt * np.arange(start, stop), dt)
        for j in range(stop - start):
            y = P[j] @ y
            k = start + j + 1
            if rescale and k % _RESCALE_EVERY == 0:
                peak = np.abs(y).max()
                if peak > RESCALE_THRESHOLD:
                    y = y / peak
                    log_s += np.log(peak)
            if r < rec_idx.size and k == rec_idx[r]:
                states[r] = y
                log_scale[r] = log_s
                r += 1
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"state overflowed before t={t0 + dt * stop:g}")
    return t0 + dt * rec_idx, states, log_scale


def envelope_generator(Omega, spec, shift=0.0):
    """``G(t) = -i (H(theta(t), Gamma(t)) + shift)`` as a batched callable."""
    def gen(t):
        H = model.build_hamiltonian(Omega, schedule.gamma_at(spec, t), schedule.theta_at(spec, t))
        if shift:
            H = H + shift * np.eye(2)
        return -1j * H
    return gen


def full_generator(params, spec):
    """First-order form of the coupled oscillator equations, state (x, y, vx, vy)."""
    def gen(t):
        eff = model.effective_frequencies(params, schedule.theta_at(spec, t))
        gamma = schedule.gamma_at(spec, t)
        G = np.zeros((np.size(t), 4, 4))
        G[:, 0, 2] = 1.0
        G[:, 1, 3] = 1.0
        G[:, 2, 0] = -eff.omega_x ** 2
        G[:, 2, 1] = -eff.eta
        G[:, 2, 2] = -gamma
        G[:, 3, 0] = -eff.eta
        G[:, 3, 1] = -eff.omega_y ** 2
        G[:, 3, 3] = gamma
        return G
    return gen


def initial_state(frame, which):
    """Envelope state equal to one eigenvector of ``frame``."""
    if which not in LABELS:
        raise ValueError(f"which must be 'plus' or 'minus', got {which!r}")
    return np.array(frame.right(which), dtype=complex)


def project_coefficients(state, frame):
    """Expansion coefficients ``(c_plus, c_minus)`` in the biorthogonal frame."""
    state = np.asarray(state)
    return complex(frame.l_plus @ state), complex(frame.l_minus @ state)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded envelope run.

    ``states`` are stored divided by ``exp(log_scale)`` so gain phases cannot
    overflow; coefficient ratios and NAT times are unaffected.
    """

    times: np.ndarray
    states: np.ndarray
    log_scale: np.ndarray
    coeffs: np.ndarray
    alpha: np.ndarray
    branch_id: np.ndarray
    lambda_plus: np.ndarray
    thetas: np.ndarray
    gammas: np.ndarray
    spec: schedule.LoopSpec
    Omega: float
    initial_label: str | None = None
    _frames: list = field(default=None, repr=False)

    def __len__(self):
        return self.times.size

    @property
    def c_plus(self):
        return self.coeffs[:, 0]

    @property
    def c_minus(self):
        return self.coeffs[:, 1]

    @property
    def lambda_minus(self):
        return -self.lambda_plus

    @property
    def psi(self):
        """Unscaled envelope states."""
        return self.states * np.exp(self.log_scale)[:, None]

    @property
    def schedule_values(self):
        return np.column_stack([self.thetas, self.gammas])

    def frame(self, i):
        alpha = self.alpha[i]
        r_plus, r_minus = model.eigenvectors(alpha)
        lam = complex(self.lambda_plus[i])
        return model.EigenFrame(lam, -lam, complex(alpha), r_plus, r_minus,
                                int(self.branch_id[i]), Omega=self.Omega,
                                Gamma=float(self.gammas[i]), theta=float(self.thetas[i]))

    @property
    def frames(self):
        if self._frames is None:
            object.__setattr__(self, "_frames", [self.frame(i) for i in range(len(self))])
        return self._frames


def _max_rate(Omega, spec):
    return 0.5 * np.hypot(Omega, spec.max_gamma)


def integrate_envelope(params, spec, init, opts=None, shift=0.0):
    """Solve ``i dPsi/dt = H(theta(t), Gamma(t)) Psi`` over the whole loop.

    Parameters
    ----------
    params : SystemParams
        Only the detuning ``Omega`` enters the envelope equation.
    spec : LoopSpec
    init : {"plus", "minus"} or array_like
        Eigenvector of the cold-started frame at t = 0, or an explicit state.
    opts : IntegratorOptions, optional
    shift : complex
        Constant added to the diagonal of ``H``; only a global factor results.

    Raises
    ------
    BranchTrackingFailed
        The step is too coarse to follow the eigenbasis continuously.
    NonFinite
        The state overflowed despite rescaling.
    """
    opts = opts or IntegratorOptions()
    Omega = params.Omega
    dt = opts.dt if opts.dt is not None else spec.period / ENVELOPE_STEPS_PER_PERIOD
    n_steps = max(1, int(np.ceil(spec.duration / dt - 1e-9)))
    dt = spec.duration / n_steps
    if dt * (_max_rate(Omega, spec) + abs(shift)) >= 0.1:
        raise StepTooCoarse("dt * max|lambda| must stay below 0.1")

    all_t = dt * np.arange(n_steps + 1)
    thetas = schedule.theta_at(spec, all_t)
    gammas = schedule.gamma_at(spec, all_t)
    try:
        branch = model.track_branch(Omega, gammas, thetas)
    except AmbiguousBranch as exc:
        raise BranchTrackingFailed(f"{exc}; halve dt") from exc

    label = None
    if isinstance(init, str):
        if init not in LABELS:
            raise ValueError(f"init must be 'plus', 'minus' or a state, got {init!r}")
        label = init
        r_plus, r_minus = model.eigenvectors(branch.alpha[0])
        psi0 = (r_plus if init == "plus" else r_minus).astype(complex)
    else:
        psi0 = np.asarray(init, dtype=complex)

    times, states, log_scale = propagate(
        envelope_generator(Omega, spec, shift), psi0, 0.0, spec.duration, n_steps,
        opts.record_stride)
    idx = np.rint(times / dt).astype(int)
    alpha = branch.alpha[idx]
    r_plus, r_minus = model.eigenvectors(alpha)
    coeffs = np.column_stack([np.sum(r_plus * states, axis=1),
                              np.sum(r_minus * states, axis=1)])
    return Trajectory(times, states, log_scale, coeffs, alpha, branch.branch_id[idx],
                      branch.lambda_plus[idx], thetas[idx], gammas[idx], spec, Omega, label)


@dataclass(frozen=True, eq=False)
class MechSamples:
    """Recorded full-dynamics run, ``states[:, k]`` = (x, y, vx, vy)."""

    times: np.ndarray
    states: np.ndarray

    @property
    def x(self):
        return self.states[:, 0]

    @property
    def y(self):
        return self.states[:, 1]

    @property
    def vx(self):
        return self.states[:, 2]

    @property
    def vy(self):
        return self.states[:, 3]


def integrate_full(params, spec, init, opts=None, t_end=None):
    """Integrate the coupled second-order equations of the two modes.

    ``x'' + Gamma x' + omega_x^2 x + eta y = 0`` and
    ``y'' - Gamma y' + omega_y^2 y + eta x = 0`` with the rotated-trap
    frequencies and the scheduled ``Gamma(t)``. ``init`` is (x, y, vx, vy).
    """
    opts = opts or IntegratorOptions()
    dt = opts.dt if opts.dt is not None else 2 * np.pi / (params.omega_0 * FULL_STEPS_PER_CARRIER)
    if dt * params.omega_0 >= 0.2:
        raise StepTooCoarse("dt * omega_0 must stay below 0.2 to resolve the carrier")
    t_end = spec.duration if t_end is None else t_end
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    times, states, log_scale = propagate(
        full_generator(params, spec), np.asarray(init, float), 0.0, t_end, n_steps,
        opts.record_stride, rescale=False)
    return MechSamples(times, states)


@dataclass(frozen=True, eq=False)
class EnvelopeSamples:
    times: np.ndarray
    states: np.ndarray  # (N, 2) complex


def demodulate(samples, omega_0, Omega=None, cutoff=None):
    """Recover slowly varying envelopes from carrier-frequency motion.

    ``A = (x - i vx / omega_0) / 2 * exp(-i omega_0 t)`` per sample, then a
    second-order Butterworth low-pass applied forward and backward. The cutoff
    defaults to ``sqrt(Omega * omega_0)``, or ``omega_0 / 10`` without
    ``Omega``; pass ``cutoff=0`` to skip filtering.
    """
    t = samples.times
    if t.size < 2:
        raise ValueError("need at least two samples")
    fs = 1.0 / np.median(np.diff(t))
    if fs <= 4 * omega_0 / (2 * np.pi):
        raise UndersampledCarrier(
            f"sampling rate {fs:g} Hz must exceed 4x the carrier {omega_0 / (2 * np.pi):g} Hz")
    carrier = np.exp(-1j * omega_0 * t)
    a = np.column_stack([
        (samples.x - 1j * samples.vx / omega_0) / 2 * carrier,
        (samples.y - 1j * samples.vy / omega_0) / 2 * carrier,
    ])
    if cutoff is None:
        cutoff = np.sqrt(Omega * omega_0) if Omega else omega_0 / 10
    if cutoff:
        b, den = signal.butter(2, cutoff / (np.pi * fs))
        padlen = min(a.shape[0] - 1, int(6 * fs * 2 * np.pi / cutoff))
        a = (signal.filtfilt(b, den, a.real, axis=0, padlen=padlen)
             + 1j * signal.filtfilt(b, den, a.imag, axis=0, padlen=padlen))
    return EnvelopeSamples(t, a)


def mech_from_envelope(psi, dpsi, omega_0):
    """Mechanical state matching envelope ``psi`` with envelope derivative ``dpsi`` at t = 0."""
    psi, dpsi = np.asarray(psi), np.asarray(dpsi)
    pos = 2 * psi.real
    vel = 2 * (dpsi + 1j * omega_0 * psi).real
    return np.array([pos[0], pos[1], vel[0], vel[1]])


@dataclass(frozen=True)
class VerificationReport:
    rms_error: float
    max_error: float
    passed: bool
    tol: float

    def to_dict(self):
        return {"rms_error": self.rms_error, "max_error": self.max_error,
                "pass": self.passed, "tol": self.tol}


def _normalized_magnitudes(coeffs):
    mag = np.abs(coeffs)
    return mag / np.linalg.norm(mag, axis=1, keepdims=True)


def verify_envelope_reduction(params, spec, init_label="plus", tol=0.05,
                              env_opts=None, full_opts=None):
    """Compare the envelope model against demodulated full dynamics.

    Both runs start from the same eigenvector; the comparison uses the
    normalized coefficient magnitudes ``|c_pm| / ||c||`` in the envelope run's
    tracked frames, over the whole loop.

    Raises
    ------
    RegimeError
        If ``Omega / omega_0`` is outside the weak-coupling regime.
    """
    params.check_regime()
    env = integrate_envelope(params, spec, init_label, env_opts)
    psi0 = env.states[0]
    H0 = model.build_hamiltonian(params.Omega, env.gammas[0], env.thetas[0])
    mech0 = mech_from_envelope(psi0, -1j * H0 @ psi0, params.omega_0)
    full = integrate_full(params, spec, mech0, full_opts)
    dem = demodulate(full, params.omega_0, params.Omega)

    a = np.column_stack([
        np.interp(env.times, dem.times, dem.states[:, k].real)
        + 1j * np.interp(env.times, dem.times, dem.states[:, k].imag)
        for k in range(2)])
    r_plus, r_minus = model.eigenvectors(env.alpha)
    coeffs_full = np.column_stack([np.sum(r_plus * a, axis=1), np.sum(r_minus * a, axis=1)])
    diff = _normalized_magnitudes(coeffs_full) - _normalized_magnitudes(env.coeffs)
    rms = float(np.sqrt(np.mean(diff ** 2)))
    worst = float(np.max(np.abs(diff)))
    return VerificationReport(rms, worst, rms < tol, tol)
