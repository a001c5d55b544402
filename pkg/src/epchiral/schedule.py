"""
Time-dependent parameter loops in the (theta, Gamma) plane.

The rotation angle follows a triangle wave of amplitude ``a_theta`` around
``theta_center`` at constant speed ``(2 a_theta / pi) |omega_c|``; the rate
follows ``Gamma(t) = gamma_0 + a_gamma sin(omega_c t + pi/2 + gamma_phase)``.
``omega_c > 0`` runs the loop counterclockwise, ``omega_c < 0`` clockwise, and
``a_gamma = 0`` collapses the loop to a straight segment traversed back and
forth.

``gamma_phase`` shifts where on the Gamma oscillation the loop starts. With
the default 0 the loop starts at its largest Gamma; ``pi`` starts it at the
smallest, which for an EP-encircling loop puts the start on the branch cut.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import AmbiguousBranch, StepTooCoarse

CW = "CW"
CCW = "CCW"


@dataclass(frozen=True)
class LoopSpec:
    gamma_0: float
    a_gamma: float
    a_theta: float
    omega_c: float
    theta_center: float = np.pi / 4
    n_periods: int = 1
    gamma_phase: float = 0.0

    def __post_init__(self):
        if self.a_gamma < 0:
            raise ValueError("a_gamma must be non-negative")
        if not 0 <= self.a_theta <= np.pi / 2:
            raise ValueError("a_theta must lie in [0, pi/2]")
        if self.gamma_0 - self.a_gamma < 0:
            raise ValueError("gamma_0 - a_gamma must be non-negative")
        if self.omega_c == 0 or not np.isfinite(self.omega_c):
            raise ValueError("omega_c must be finite and nonzero")
        if int(self.n_periods) != self.n_periods or self.n_periods < 1:
            raise ValueError("n_periods must be a positive integer")

    @property
    def period(self):
        return 2 * np.pi / abs(self.omega_c)

    @property
    def duration(self):
        return self.n_periods * self.period

    @property
    def direction(self):
        return CCW if self.omega_c > 0 else CW

    @property
    def max_gamma(self):
        return self.gamma_0 + self.a_gamma

    def with_direction(self, direction):
        """Copy with the sign of ``omega_c`` set for ``"CW"`` or ``"CCW"``."""
        direction = direction.upper()
        if direction not in (CW, CCW):
            raise ValueError(f"unknown direction {direction!r}")
        sign = 1.0 if direction == CCW else -1.0
        return dataclasses.replace(self, omega_c=sign * abs(self.omega_c))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class CutCrossing:
    """Passage of the path through the real-spectrum (exact PT) segment.

    ``entering_loss`` is True when the continuity-tracked plus state moves
    onto the loss sheet at this crossing; the minus state then moves onto the
    gain sheet, and vice versa.
    """

    time: float
    entering_loss: bool


@dataclass(frozen=True, eq=False)
class PathSamples:
    times: np.ndarray
    thetas: np.ndarray
    gammas: np.ndarray


def _triangle(phase):
    # unit triangle wave: 0 -> 1 at 1/4 -> -1 at 3/4 -> 0 at 1
    return np.where(phase < 0.25, 4 * phase,
                    np.where(phase < 0.75, 2 - 4 * phase, 4 * phase - 4))


def theta_at(spec, t):
    """Rotation angle at time(s) ``t``, evaluated in closed form."""
    phase = np.mod(np.asarray(t, float) / spec.period, 1.0)
    theta = spec.theta_center + np.sign(spec.omega_c) * spec.a_theta * _triangle(phase)
    return float(theta) if np.ndim(theta) == 0 else theta


def gamma_at(spec, t):
    gamma = spec.gamma_0 + spec.a_gamma * np.sin(
        spec.omega_c * np.asarray(t, float) + np.pi / 2 + spec.gamma_phase)
    return float(gamma) if np.ndim(gamma) == 0 else gamma


def sample_path(spec, dt):
    """Uniform samples of the closed path over all periods.

    The step is shrunk slightly so that the last sample lands exactly on the
    end of the run.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt >= spec.period / 8:
        raise StepTooCoarse(f"dt={dt:g} must be below T/8={spec.period / 8:g}")
    n = int(np.ceil(spec.duration / dt - 1e-9))
    times = np.linspace(0.0, spec.duration, n + 1)
    return PathSamples(times, theta_at(spec, times), gamma_at(spec, times))


def _cut_times(spec):
    """Times in [0, duration) where cos(2 theta) changes sign."""
    if spec.a_theta == 0:
        return np.array([])
    T = spec.period
    sigma = np.sign(spec.omega_c)
    lo, hi = spec.theta_center - spec.a_theta, spec.theta_center + spec.a_theta
    k_lo = int(np.ceil((lo - np.pi / 4) / (np.pi / 2)))
    k_hi = int(np.floor((hi - np.pi / 4) / (np.pi / 2)))
    times = []
    for k in range(k_lo, k_hi + 1):
        u = (np.pi / 4 + k * np.pi / 2 - spec.theta_center) / (sigma * spec.a_theta)
        if abs(u) >= 1 - 1e-12:
            continue  # touches the cut at a turning point without crossing
        local = [(2 - u) * T / 4]
        local.append(u * T / 4 if u >= 0 else (4 + u) * T / 4)
        for p in range(spec.n_periods):
            times.extend(p * T + t for t in local)
    times = np.array(sorted(times))
    times = times[times < spec.duration - 1e-12 * T]
    if times.size:
        keep = np.concatenate([[True], np.diff(times) > 1e-12 * T])
        times = times[keep]
    return times


def track_schedule(spec, Omega, times, samples_per_period=4000):
    """Continuity-tracked eigen-data at ``times``, cold-started at t = 0.

    The path is sampled on a dense uniform grid merged with ``times``; the grid
    is refined automatically if the branch choice becomes ambiguous.
    """
    times = np.asarray(times, float)
    for attempt in range(6):
        m = samples_per_period * 2 ** attempt * spec.n_periods
        grid = np.union1d(np.linspace(0.0, spec.duration, m + 1), times)
        try:
            branch = model.track_branch(Omega, gamma_at(spec, grid), theta_at(spec, grid))
        except AmbiguousBranch:
            continue
        idx = np.searchsorted(grid, times)
        return model.TrackedBranch(branch.alpha[idx], branch.branch_id[idx],
                                   branch.lambda_plus[idx])
    raise AmbiguousBranch("could not resolve branch continuity along the schedule")


def cut_crossings(spec, Omega):
    """Branch-cut crossings of the path, in ascending time order.

    A crossing is a time where ``cos 2theta`` changes sign while
    ``Gamma < Omega``. A path that starts on the cut reports ``t = 0``.
    """
    if not Omega > 0:
        raise ValueError("Omega must be positive")
    times = _cut_times(spec)
    times = times[gamma_at(spec, times) < Omega] if times.size else times
    if not times.size:
        return []
    # look just past each crossing to see which sheet the plus state lands on
    gaps = np.diff(np.concatenate([times, [spec.duration]]))
    probe = times + np.minimum(1e-3 * spec.period, gaps / 2)
    branch = track_schedule(spec, Omega, probe)
    return [CutCrossing(float(t), bool(lam.imag < 0))
            for t, lam in zip(times, branch.lambda_plus)]


def encircling_loop(Omega, omega_c=None, a_gamma=None, a_theta=np.pi / 30,
                    start_on_cut=True, **kw):
    """Small loop around the EP at (Omega, pi/4), centered on it.

    Defaults: ``omega_c = Omega/8`` (counterclockwise), ``a_gamma = Omega/30``.
    ``start_on_cut`` starts at the low-Gamma side, on the real-spectrum segment.
    """
    return LoopSpec(gamma_0=Omega,
                    a_gamma=Omega / 30 if a_gamma is None else a_gamma,
                    a_theta=a_theta,
                    omega_c=Omega / 8 if omega_c is None else omega_c,
                    gamma_phase=np.pi if start_on_cut else 0.0, **kw)


def straight_path(Omega, gamma_0=None, a_theta=np.pi / 6, omega_c=None, **kw):
    """Straight segment at fixed ``gamma_0`` (default ``2 Omega / 3``) crossing the cut."""
    return LoopSpec(gamma_0=2 * Omega / 3 if gamma_0 is None else gamma_0,
                    a_gamma=0.0, a_theta=a_theta,
                    omega_c=Omega / 17 if omega_c is None else omega_c, **kw)
