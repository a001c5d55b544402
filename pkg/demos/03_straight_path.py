"""
A straight path across the branch cut, far from the exceptional point.

With a_Gamma = 0 the parameters sweep back and forth along a segment at
Gamma_0 = 2 Omega / 3. The path crosses the cut at t = 0 and t = T/2 and never
encloses the EP, yet the final state still depends on the direction.

    python3 demos/03_straight_path.py
"""

import numpy as np

from epchiral import analysis, schedule

from _common import OMEGA, PARAMS, parse_args

parse_args(__doc__)

line = schedule.straight_path(OMEGA)
T = line.period
print("cut crossings:", [(round(c.time / T, 3), c.entering_loss)
                         for c in schedule.cut_crossings(line.with_direction(schedule.CW), OMEGA)],
      "(t/T, plus state enters loss)\n")

for (direction, label), rep in analysis.chirality_matrix(PARAMS, line).items():
    print(f"{direction:>3} from r_{'+' if label == 'plus' else '-'}: ends {rep.final_label:>5}, "
          f"ratio {rep.final_overlap_ratio:9.1f}")
    for e in rep.nat_events:
        print(f"      NAT {e.from_label} -> {e.to_label} at {e.time / T:.3f} T, "
              f"delay {e.delay / T:.3f} T after the crossing at {e.preceding_crossing / T:.3f} T")

# Starting on the gain sheet, the state rides it until the crossing at T/2 puts
# it on the loss sheet; it falls back after a delay. Starting on the loss sheet
# it jumps almost at once, and again after T/2.
