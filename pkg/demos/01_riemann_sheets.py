"""
Eigenvalue sheets of the effective Hamiltonian near an exceptional point.

We evaluate the two eigenvalues on a grid in (Gamma, theta), locate the
coalescence at Gamma = Omega, theta = pi/4, and follow one eigenvalue around a
small loop to see it come back as the other one.

    python3 demos/01_riemann_sheets.py [--plot sheets.png]
"""

import numpy as np

from epchiral import model, schedule

from _common import OMEGA, parse_args, pyplot

args = parse_args(__doc__)

# On the line cos(2 theta) = 0 the spectrum is real below Gamma = Omega and
# purely imaginary above it. The two regimes meet at the EP.
print("Gamma/Omega   lambda_+ / Omega on theta = pi/4")
for g in (0.0, 0.5, 0.9, 0.99, 1.0, 1.01, 1.5):
    lp, _ = model.eigenvalues(OMEGA, g * OMEGA, np.pi / 4)
    print(f"{g:8.2f}      {lp.real / OMEGA:+.4f} {lp.imag / OMEGA:+.4f}i   "
          f"{model.classify_phase(OMEGA, g * OMEGA, np.pi / 4).value}")

grid = model.surface_grid(OMEGA, (0.0, 2 * OMEGA), (0.0, np.pi / 2), 201)
gap = np.abs(grid.lambda_plus - grid.lambda_minus)
i, j = np.unravel_index(np.argmin(gap), gap.shape)
print(f"\nsmallest gap on a 201x201 grid: {gap[i, j] / OMEGA:.2e} Omega "
      f"at Gamma = {grid.gammas[i] / OMEGA:.3f} Omega, theta = {grid.thetas[j] / np.pi:.3f} pi")
print("EPs:", [(g / OMEGA, t / np.pi) for g, t in model.ep_locations(OMEGA)], "(Gamma/Omega, theta/pi)")

# Continuing the eigenbasis around a loop that encloses the EP adds pi to the
# mixing angle alpha, which swaps r_+ and r_-.
loop = schedule.encircling_loop(OMEGA)
t = np.linspace(0, loop.period, 4001)
branch = model.track_branch(OMEGA, schedule.gamma_at(loop, t), schedule.theta_at(loop, t))
lam0, lam1 = branch.lambda_plus[0], branch.lambda_plus[-1]
print(f"\naround the loop: alpha changes by {(branch.alpha[-1] - branch.alpha[0]).real / np.pi:+.3f} pi")
print(f"lambda_+ at start {lam0 / OMEGA:.4f} Omega, continued to the end {lam1 / OMEGA:.4f} Omega")

# A loop that stays clear of the EP brings every eigenvalue home.
away = loop.replace(gamma_0=OMEGA / 2, gamma_phase=0.0)
t = np.linspace(0, away.period, 4001)
branch = model.track_branch(OMEGA, schedule.gamma_at(away, t), schedule.theta_at(away, t))
print(f"loop around Gamma = Omega/2: alpha changes by "
      f"{(branch.alpha[-1] - branch.alpha[0]).real / np.pi:+.3f} pi")

if args.plot:
    plt = pyplot()
    G, TH = np.meshgrid(grid.gammas / OMEGA, grid.thetas / np.pi, indexing="ij")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), subplot_kw={"projection": "3d"})
    for ax, part, name in ((axes[0], np.real, "Re"), (axes[1], np.imag, "Im")):
        ax.plot_surface(G, TH, part(grid.lambda_plus) / OMEGA, cmap="viridis", alpha=0.8)
        ax.plot_surface(G, TH, part(grid.lambda_minus) / OMEGA, cmap="magma", alpha=0.8)
        ax.set_xlabel("Gamma / Omega")
        ax.set_ylabel("theta / pi")
        ax.set_zlabel(f"{name} lambda / Omega")
    fig.savefig(args.plot, dpi=120, bbox_inches="tight")
    print("saved", args.plot)
