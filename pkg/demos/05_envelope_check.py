"""
Does the two-mode envelope model describe the oscillators themselves?

The full equations for x(t) and y(t) oscillate at about 10 Hz while the loop
takes more than a minute. We integrate them directly, strip the carrier, and
compare the eigenbasis populations with the envelope run.

    python3 demos/05_envelope_check.py
"""

import numpy as np

from epchiral import dynamics, model, schedule
from epchiral.errors import RegimeError

from _common import OMEGA, PARAMS, parse_args

parse_args(__doc__)

loop = schedule.encircling_loop(OMEGA)
for direction in (schedule.CW, schedule.CCW):
    for label in dynamics.LABELS:
        rep = dynamics.verify_envelope_reduction(PARAMS, loop.with_direction(direction), label)
        print(f"{direction:>3} from {label:>5}: rms {rep.rms_error:.4f}, max {rep.max_error:.4f}")

# The residual mismatch is of order Omega / omega_0 = 1%, the size of the terms
# the envelope model drops.

strong = model.SystemParams.from_detuning(2 * np.pi, np.pi)
try:
    dynamics.verify_envelope_reduction(strong, schedule.encircling_loop(strong.Omega))
except RegimeError as exc:
    print("\nOmega = omega_0 / 2 is refused:", exc)
