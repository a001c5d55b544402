"""Chiral state conversion in a two-mode non-Hermitian oscillator driven around parameter loops."""

__version__ = "0.1.0"

from .model import (EigenFrame, EffectiveFrequencies, PhaseClass, SystemParams,
                    build_hamiltonian, classify_phase, effective_frequencies, eigenframe,
                    eigenvalues, ep_locations, surface_grid)
from .schedule import (CCW, CW, CutCrossing, LoopSpec, cut_crossings, encircling_loop,
                       gamma_at, sample_path, straight_path, theta_at)
from .dynamics import (IntegratorOptions, Trajectory, demodulate, initial_state,
                       integrate_envelope, integrate_full, project_coefficients,
                       verify_envelope_reduction)
from .analysis import (ChiralityReport, NatEvent, SweepResult, chirality_matrix,
                       classify_final, detect_nats, riemann_trajectory, sweep_delay)
from .config import RunConfig, parse_config, serialize_config
