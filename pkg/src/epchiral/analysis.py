"""
Observables extracted from envelope trajectories.

A nonadiabatic transition (NAT) is registered where the magnitudes of the two
expansion coefficients cross and the new dominant coefficient keeps its lead
for a hold time. Its delay is measured from the latest branch-cut crossing at
which the then-occupied state moved onto the loss sheet.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, schedule
from .errors import NoCrossingReference, ZeroState

AXES = ("a_theta", "a_gamma", "gamma_0", "omega_c")
DEFAULT_TIE_RATIO = 10.0
DEFAULT_HOLD_FRACTION = 0.01
MIN_SAMPLES_PER_PERIOD = 1000


def expected_final_label(direction):
    """Label a chiral loop ends on: minus for CW, plus for CCW."""
    return "minus" if direction == schedule.CW else "plus"


def _other(label):
    return "minus" if label == "plus" else "plus"


@dataclass(frozen=True)
class NatEvent:
    time: float
    preceding_crossing: float | None
    delay: float | None
    from_label: str
    to_label: str

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ChiralityReport:
    """Outcome of one loop run.

    ``final_label`` is None when the final state is not dominated by one
    initial-frame eigenvector by at least the tie ratio; ``dominant_label``
    is always the larger of the two.
    """

    direction: str
    initial_label: str | None
    final_label: str | None
    dominant_label: str
    final_overlap_ratio: float
    nat_events: tuple = ()
    tie_ratio: float = DEFAULT_TIE_RATIO

    @property
    def verdict(self):
        if self.final_label is None:
            return "undetermined"
        return "chiral" if self.final_label == expected_final_label(self.direction) else "nonchiral"

    @property
    def determinate(self):
        return self.final_label is not None

    def to_dict(self):
        return {
            "direction": self.direction,
            "initial_label": self.initial_label,
            "final_label": self.final_label,
            "dominant_label": self.dominant_label,
            "final_overlap_ratio": self.final_overlap_ratio,
            "tie_ratio": self.tie_ratio,
            "verdict": self.verdict,
            "nat_events": [e.to_dict() for e in self.nat_events],
        }


def _dominance_switches(times, diff, hold):
    """Indices where the sign of ``diff`` flips and then persists for ``hold``."""
    sign = np.where(diff >= 0, 1, -1)
    changes = np.flatnonzero(sign[1:] != sign[:-1]) + 1
    confirmed = sign[0]
    switches = []
    for n, i in enumerate(changes):
        if sign[i] == confirmed:
            continue
        next_change = changes[n + 1] if n + 1 < changes.size else None
        if next_change is None or times[next_change] - times[i] >= hold:
            switches.append(i)
            confirmed = sign[i]
    return switches, sign[0]


def _starts_in_loss(traj, label):
    im = traj.lambda_plus.imag
    mag = np.abs(traj.lambda_plus)
    off_cut = np.flatnonzero(np.abs(im) > 1e-9 * mag)
    if not off_cut.size:
        return False
    plus_loses = im[off_cut[0]] < 0
    return plus_loses if label == "plus" else not plus_loses


def detect_nats(traj, crossings=None, hold_fraction=DEFAULT_HOLD_FRACTION, strict=True):
    """Find NATs as persistent crossings of ``|c_plus|`` and ``|c_minus|``.

    Parameters
    ----------
    traj : Trajectory
        Must be recorded with at least 1000 samples per period.
    crossings : list of CutCrossing, optional
        Computed from the trajectory's loop when omitted.
    hold_fraction : float
        A switch counts only if the new dominant coefficient keeps its lead for
        this fraction of the period (or until the run ends).
    strict : bool
        If False, events with no delay reference get ``delay=None`` instead of
        raising.

    Raises
    ------
    NoCrossingReference
        A NAT precedes every loss-entry crossing and the run did not start on
        the loss sheet. The exception's ``events`` holds the events found.
    """
    spec = traj.spec
    T = spec.period
    if (len(traj) - 1) / spec.n_periods < MIN_SAMPLES_PER_PERIOD:
        raise ValueError("trajectory too sparse: need at least 1000 samples per period")
    if crossings is None:
        crossings = schedule.cut_crossings(spec, traj.Omega)

    t = traj.times
    diff = np.abs(traj.c_plus) - np.abs(traj.c_minus)
    switches, first_sign = _dominance_switches(t, diff, hold_fraction * T)

    # occupied label as a function of time, piecewise constant between switches
    start_label = "plus" if first_sign > 0 else "minus"
    switch_times = []
    for i in switches:
        d0, d1 = diff[i - 1], diff[i]
        frac = d0 / (d0 - d1) if d0 != d1 else 0.0
        switch_times.append(t[i - 1] + frac * (t[i] - t[i - 1]))

    def occupied_at(time):
        n = int(np.searchsorted(switch_times, time, side="right"))
        return start_label if n % 2 == 0 else _other(start_label)

    events = []
    missing = None
    for k, te in enumerate(switch_times):
        before = start_label if k % 2 == 0 else _other(start_label)
        ref = None
        for c in crossings:
            if c.time >= te:
                break
            occ = occupied_at(c.time)
            if c.entering_loss == (occ == "plus"):
                ref = c.time
        if ref is None and k == 0 and _starts_in_loss(traj, before):
            ref = 0.0
        if ref is None and missing is None:
            missing = te
        events.append(NatEvent(float(te), ref, None if ref is None else float(te - ref),
                               before, _other(before)))
    if missing is not None and strict:
        exc = NoCrossingReference(missing)
        exc.events = events
        raise exc
    return events


def final_overlaps(traj, initial_frame=None):
    """``(|l_+(0)^T Psi(end)|, |l_-(0)^T Psi(end)|)`` in the fixed initial frame."""
    frame = initial_frame if initial_frame is not None else traj.frame(0)
    psi = traj.states[-1]
    return abs(frame.l_plus @ psi), abs(frame.l_minus @ psi)


def classify_final(traj, initial_frame=None, tie_ratio=DEFAULT_TIE_RATIO, crossings=None):
    """Final-state label after the loop, with the NATs met on the way."""
    if not tie_ratio > 1:
        raise ValueError("tie_ratio must exceed 1")
    spec = traj.spec
    if not np.isclose(traj.times[-1], spec.duration, rtol=1e-12):
        raise ValueError("trajectory must span an integer number of periods")
    plus, minus = final_overlaps(traj, initial_frame)
    dominant = "plus" if plus >= minus else "minus"
    big, small = max(plus, minus), min(plus, minus)
    ratio = float(big / small) if small > 0 else float("inf")
    events = detect_nats(traj, crossings, strict=False)
    return ChiralityReport(
        direction=spec.direction,
        initial_label=traj.initial_label,
        final_label=dominant if ratio > tie_ratio else None,
        dominant_label=dominant,
        final_overlap_ratio=ratio,
        nat_events=tuple(events),
        tie_ratio=tie_ratio,
    )


def riemann_trajectory(traj):
    """Population-weighted eigenvalue along the run, for drawing on the sheets."""
    w_plus = np.abs(traj.c_plus) ** 2
    w_minus = np.abs(traj.c_minus) ** 2
    total = w_plus + w_minus
    if np.any(total < 1e-300):
        raise ZeroState("both coefficients vanish")
    values = (w_minus * traj.lambda_minus + w_plus * traj.lambda_plus) / total
    return traj.times, values


def default_sweep_values(axis, Omega, points=25):
    lo, hi = {
        "a_theta": (np.pi / 60, np.pi / 4),
        "a_gamma": (Omega / 300, Omega / 10),
        "gamma_0": (Omega / 3, 0.99 * Omega),
        "omega_c": (Omega / 17, Omega / 8),
    }[axis]
    return np.linspace(lo, hi, points)


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis_name: str
    axis_values: np.ndarray
    delay_times: list
    nat_times: list
    chiral_flags: list
    errors: list = field(default_factory=list)

    @property
    def no_nat(self):
        return [len(d) == 0 for d in self.delay_times]

    def __len__(self):
        return len(self.axis_values)


def _spec_for(template, axis, value, direction):
    if axis == "omega_c":
        spec = template.replace(omega_c=np.sign(template.omega_c) * abs(value))
    else:
        spec = template.replace(**{axis: float(value)})
    return spec.with_direction(direction) if direction else spec


def _sweep_point(args):
    params, template, axis, value, direction, init_label, opts = args
    try:
        spec = _spec_for(template, axis, value, direction)
        traj = dynamics.integrate_envelope(params, spec, init_label, opts)
        report = classify_final(traj)
    except Exception as exc:  # recorded per point
        return [], [], False, f"{type(exc).__name__}: {exc}"
    delays = [e.delay for e in report.nat_events]
    times = [e.time for e in report.nat_events]
    chiral = report.dominant_label == expected_final_label(spec.direction)
    return delays, times, chiral, None


def sweep_delay(params, spec_template, axis, values, init_label="minus", direction=None,
                opts=None, workers=1):
    """Delay times of the NATs as one loop parameter is varied.

    Each point runs an envelope integration and NAT detection. A point's
    ``chiral_flag`` is True when its dominant final label matches the one the
    traversal direction selects. Failures are recorded in ``errors`` and do
    not stop the sweep. Point order follows ``values`` for any ``workers``.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    values = np.atleast_1d(np.asarray(values, float))
    if values.size == 0:
        raise ValueError("values must be non-empty")
    jobs = [(params, spec_template, axis, v, direction, init_label, opts) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    delays, times, flags, errors = (list(col) for col in zip(*results))
    return SweepResult(axis, values, delays, times, flags, errors)


def chirality_matrix(params, spec, opts=None, tie_ratio=DEFAULT_TIE_RATIO):
    """Reports for both directions and both initial eigenstates.

    Returns a dict keyed by ``(direction, initial_label)``.
    """
    table = {}
    for direction in (schedule.CW, schedule.CCW):
        oriented = spec.with_direction(direction)
        for label in dynamics.LABELS:
            traj = dynamics.integrate_envelope(params, oriented, label, opts)
            table[direction, label] = classify_final(traj, tie_ratio=tie_ratio)
    return table
