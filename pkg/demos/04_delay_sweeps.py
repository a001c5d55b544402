"""
How long the state lingers on the loss sheet.

The delay t_d between entering the loss sheet and the nonadiabatic jump decides
whether conversion completes within a period. Here it is swept against the loop
size and against the distance of a straight path from the EP.

    python3 demos/04_delay_sweeps.py [--plot delays.png]
"""

import numpy as np

from epchiral import analysis, schedule

from _common import OMEGA, PARAMS, parse_args, pyplot

args = parse_args(__doc__)

results = {}
for k in (8, 12, 17):
    base = schedule.encircling_loop(OMEGA, omega_c=OMEGA / k)
    values = np.linspace(np.pi / 60, np.pi / 4, 13)
    res = analysis.sweep_delay(PARAMS, base, "a_theta", values, "minus", schedule.CW)
    delays = [d[0] / base.period for d in res.delay_times]
    results[k] = (values, delays)
    print(f"omega_c = Omega/{k:<2}  t_d/T over a_theta in [pi/60, pi/4]: "
          f"{min(delays):.3f} .. {max(delays):.3f}")

# All delays stay well below half a period, so each loop converts.

line = schedule.straight_path(OMEGA)
g0 = np.linspace(OMEGA / 3, 0.99 * OMEGA, 12)
for label, tag in (("minus", "t_d(b1)"), ("plus", "t_d(a)")):
    res = analysis.sweep_delay(PARAMS, line, "gamma_0", g0, label, schedule.CW)
    cells = ["  --  " if not d else f"{d[0] / line.period:6.3f}" for d in res.delay_times]
    print(f"\n{tag} / T along Gamma_0 / Omega:")
    print("  ".join(f"{v / OMEGA:6.2f}" for v in g0))
    print("  ".join(cells))

# Moving the path toward the EP shortens every delay. At Gamma_0 = Omega/3 the
# gain-sheet start never jumps at all, so no conversion happens there.

if args.plot:
    plt = pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k, (values, delays) in results.items():
        ax.plot(values / np.pi, delays, "o-", label=f"omega_c = Omega/{k}")
    ax.axhline(0.5, color="gray", ls=":")
    ax.set_xlabel("a_theta / pi")
    ax.set_ylabel("t_d / T")
    ax.legend()
    fig.savefig(args.plot, dpi=120, bbox_inches="tight")
    print("saved", args.plot)
