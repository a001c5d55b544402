"""
Effective two-mode non-Hermitian Hamiltonian and its eigensystem.

The two orthogonal motion modes of a trapped particle, rotated by an angle
``theta`` relative to the trap axes, couple through the off-diagonal stiffness
``eta``. One mode is damped and the other amplified at rate ``Gamma``. In the
rotating frame of the mean carrier ``omega_0`` the envelope obeys
``i dPsi/dt = H Psi`` with

    H = [[-i Gamma/2 - (Omega/2) cos 2theta,        -(Omega/2) sin 2theta],
         [       -(Omega/2) sin 2theta,    i Gamma/2 + (Omega/2) cos 2theta]]

whose eigenvalues ``lambda_pm = +-1/2 sqrt(Omega^2 - Gamma^2 + 2i Omega Gamma cos 2theta)``
coalesce at the exceptional points ``Gamma = Omega``, ``theta = pi/4, 3pi/4``.

Eigenvectors are written with a complex mixing angle ``alpha``

    r_+ = (-sin(alpha/2), cos(alpha/2)),   r_- = (cos(alpha/2), sin(alpha/2)),

with ``tan(alpha) = (Omega/2) sin 2theta / ((Omega/2) cos 2theta + i Gamma/2)``.
Because ``H`` is complex symmetric the left eigenvectors equal the right ones
under the unconjugated transpose. Shifting ``alpha`` by ``pi`` swaps the two
labels, so label continuity along a path is tracked through ``alpha``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (AmbiguousBranch, DegenerateModel, ExceptionalPointError,
                     RegimeError)

# relative size below which an imaginary part counts as zero when labeling
_REAL_TOL = 1e-12
# relative eigenvalue size below which the frame is treated as defective; the
# eigenvalues are square roots of a discriminant known to about machine
# precision, so nothing finer than sqrt(eps) can be resolved
_EP_TOL = 1e-7


@dataclass(frozen=True)
class SystemParams:
    """Static physics of the two-mode oscillator.

    Parameters
    ----------
    omega_x0, omega_y0 : float
        Bare angular frequencies of the x and y modes (rad/s), with
        ``omega_x0 >= omega_y0``.
    gamma : float
        Common damping/gain rate ``Gamma`` (rad/s).
    max_detuning_ratio : float
        Upper bound on ``Omega / omega_0`` for the envelope reduction to apply.
    """

    omega_x0: float
    omega_y0: float
    gamma: float = 0.0
    max_detuning_ratio: float = 0.1

    def __post_init__(self):
        if not (self.omega_x0 > 0 and self.omega_y0 > 0):
            raise ValueError("mode frequencies must be positive")
        if self.omega_x0 < self.omega_y0:
            raise ValueError("omega_x0 must not be below omega_y0 (Omega >= 0)")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.max_detuning_ratio <= 0:
            raise ValueError("max_detuning_ratio must be positive")

    @classmethod
    def from_detuning(cls, omega_0, Omega, gamma=0.0, max_detuning_ratio=0.1):
        """Build from mean carrier ``omega_0`` and detuning ``Omega``."""
        return cls(omega_0 + Omega / 2, omega_0 - Omega / 2, gamma, max_detuning_ratio)

    @property
    def omega_0(self):
        return (self.omega_x0 + self.omega_y0) / 2

    @property
    def Omega(self):
        return self.omega_x0 - self.omega_y0

    @property
    def weak_coupling(self):
        return self.Omega / self.omega_0 < self.max_detuning_ratio

    def check_regime(self):
        if not self.weak_coupling:
            raise RegimeError(
                f"Omega/omega_0 = {self.Omega / self.omega_0:.3g} is not below "
                f"{self.max_detuning_ratio:g}; the envelope reduction does not apply")


@dataclass(frozen=True)
class EffectiveFrequencies:
    omega_x: float
    omega_y: float
    eta: float


class PhaseClass(enum.Enum):
    EXACT_PT = "exact_pt"
    BROKEN_PT = "broken_pt"
    EXCEPTIONAL_POINT = "exceptional_point"
    GENERIC = "generic"


@dataclass(frozen=True, eq=False)
class EigenFrame:
    """Instantaneous biorthogonal eigenbasis at one parameter point.

    ``branch_id`` counts the ``pi`` shifts of ``alpha`` relative to the
    cold-start (gain/loss sorted) choice at the same point; an odd value
    means the continuity-tracked labels are swapped with respect to the
    gain/loss sheets.
    """

    lambda_plus: complex
    lambda_minus: complex
    alpha: complex
    r_plus: np.ndarray
    r_minus: np.ndarray
    branch_id: int = 0
    Omega: float = field(default=np.nan, repr=False)
    Gamma: float = field(default=np.nan, repr=False)
    theta: float = field(default=np.nan, repr=False)

    @property
    def l_plus(self):
        return self.r_plus

    @property
    def l_minus(self):
        return self.r_minus

    def right(self, label):
        return self.r_plus if label == "plus" else self.r_minus

    def eigenvalue(self, label):
        return self.lambda_plus if label == "plus" else self.lambda_minus


def double_angle(theta):
    """``(cos 2 theta, sin 2 theta)`` with the quadrant reduced first.

    ``2 theta`` is split into a multiple of the float ``pi/2`` and a small
    remainder, so ``np.pi/4`` and ``3*np.pi/4`` land exactly on the cut
    (``cos 2 theta == 0``) instead of about 1e-16 away from it. Near an EP the
    eigenvalues scale like the square root of that offset, so this matters.
    """
    u = 2 * np.asarray(theta, float)
    k = np.round(u / (np.pi / 2))
    r = u - k * (np.pi / 2)
    cr, sr = np.cos(r), np.sin(r)
    q = np.mod(k, 4)
    c = np.select([q == 0, q == 1, q == 2], [cr, -sr, -cr], sr)
    s = np.select([q == 0, q == 1, q == 2], [sr, cr, -sr], -cr)
    if c.ndim == 0:
        return float(c), float(s)
    return c, s


def effective_frequencies(params, theta):
    """Mode frequencies and coupling after rotating the trap by ``theta``.

    Works elementwise when ``theta`` is an array.
    """
    wx2, wy2 = params.omega_x0 ** 2, params.omega_y0 ** 2
    c, s = double_angle(theta)
    mean, half_diff = (wx2 + wy2) / 2, (wx2 - wy2) / 2
    omega_x = np.sqrt(mean + c * half_diff)
    omega_y = np.sqrt(mean - c * half_diff)
    eta = half_diff * s
    if np.ndim(theta) == 0:
        return EffectiveFrequencies(float(omega_x), float(omega_y), float(eta))
    return EffectiveFrequencies(omega_x, omega_y, eta)


def build_hamiltonian(Omega, Gamma, theta):
    """Effective 2x2 Hamiltonian; broadcasts over array inputs to shape (..., 2, 2)."""
    Gamma, theta = np.broadcast_arrays(np.asarray(Gamma, float), np.asarray(theta, float))
    c, s = double_angle(theta)
    H = np.empty(Gamma.shape + (2, 2), dtype=complex)
    H[..., 0, 0] = -0.5j * Gamma - 0.5 * Omega * c
    H[..., 0, 1] = -0.5 * Omega * s
    H[..., 1, 0] = H[..., 0, 1]
    H[..., 1, 1] = 0.5j * Gamma + 0.5 * Omega * c
    return H


def _coupling_terms(Omega, Gamma, theta):
    # A + iS where tan(alpha) = S / A
    c, s = double_angle(theta)
    A = 0.5 * Omega * c + 0.5j * Gamma
    S = 0.5 * Omega * s
    return A, S


def _gain_sorted_root(Omega, Gamma, theta):
    """lambda_+ under the cold-start convention: larger Im, then larger Re."""
    disc = Omega ** 2 - np.asarray(Gamma) ** 2 + 2j * Omega * Gamma * double_angle(theta)[0]
    lam = 0.5 * np.sqrt(disc + 0j)
    mag = np.abs(lam)
    im = np.where(np.abs(lam.imag) <= _REAL_TOL * mag, 0.0, lam.imag)
    flip = (im < 0) | ((im == 0) & (lam.real < 0))
    return np.where(flip, -lam, lam)


def eigenvalues(Omega, Gamma, theta):
    """Return ``(lambda_plus, lambda_minus)`` with ``lambda_plus`` the gain eigenvalue.

    On the real-spectrum line the larger real part is labeled plus.
    """
    lam = _gain_sorted_root(Omega, Gamma, theta)
    if np.ndim(lam) == 0:
        lam = complex(lam)
    return lam, -lam


def _cold_alpha(Omega, Gamma, theta):
    lam = _gain_sorted_root(Omega, Gamma, theta)
    A, S = _coupling_terms(Omega, Gamma, theta)
    scale = np.maximum(Omega, np.abs(Gamma))
    if np.any(np.abs(lam) <= _EP_TOL * scale):
        raise ExceptionalPointError("eigenbasis is defective at an exceptional point")
    return -1j * np.log((A + 1j * S) / lam)


def _branch_step(alpha_prev, alpha_cand):
    """Integer pi-shift aligning ``alpha_cand`` with ``alpha_prev``, and an ambiguity mask."""
    diff = alpha_prev - alpha_cand
    n = np.round(diff.real / np.pi)
    e = diff - n * np.pi
    d1 = np.abs(e)
    d2 = np.abs(e - np.where(e.real >= 0, np.pi, -np.pi))
    return n.astype(int), np.abs(d2 - d1) < np.pi / 4


def _frame_from_alpha(Omega, Gamma, theta, alpha, branch_id):
    A, S = _coupling_terms(Omega, Gamma, theta)
    lam = complex((A + 1j * S) * np.exp(-1j * alpha))
    h = alpha / 2
    r_plus = np.array([-np.sin(h), np.cos(h)], dtype=complex)
    r_minus = np.array([np.cos(h), np.sin(h)], dtype=complex)
    return EigenFrame(lam, -lam, complex(alpha), r_plus, r_minus, int(branch_id),
                      Omega=float(Omega), Gamma=float(Gamma), theta=float(theta))


def eigenframe(Omega, Gamma, theta, predecessor=None):
    """Biorthogonal eigenframe at one parameter point.

    Without a predecessor the plus label goes to the gain eigenvalue (ties on
    the real-spectrum line broken by the real part). With a predecessor the
    ``alpha`` branch closest to the predecessor's is chosen, so labels follow
    the eigenvectors continuously.

    Raises
    ------
    AmbiguousBranch
        If the two nearest branches are almost equally far from the predecessor.
    ExceptionalPointError
        At an exceptional point, where the eigenvectors coalesce.
    """
    alpha0 = complex(_cold_alpha(Omega, Gamma, theta))
    if predecessor is None:
        return _frame_from_alpha(Omega, Gamma, theta, alpha0, 0)
    n, ambiguous = _branch_step(np.asarray(predecessor.alpha), np.asarray(alpha0))
    if ambiguous:
        raise AmbiguousBranch(
            f"branch choice ambiguous stepping from alpha={predecessor.alpha:.6g} "
            f"to (Gamma={Gamma:.6g}, theta={theta:.6g}); refine the step")
    n = int(n)
    return _frame_from_alpha(Omega, Gamma, theta, alpha0 + n * np.pi, n)


@dataclass(frozen=True, eq=False)
class TrackedBranch:
    """Vectorized continuity-tracked eigen-data along a sampled path."""

    alpha: np.ndarray
    branch_id: np.ndarray
    lambda_plus: np.ndarray

    @property
    def lambda_minus(self):
        return -self.lambda_plus


def track_branch(Omega, gammas, thetas, alpha_start=None):
    """Track ``alpha`` continuously along a sequence of parameter points.

    ``alpha_start``, when given, is the alpha of a frame immediately preceding
    the first point; otherwise the first point is cold-started.
    """
    gammas = np.asarray(gammas, float)
    thetas = np.asarray(thetas, float)
    cand = _cold_alpha(Omega, gammas, thetas)
    if alpha_start is None:
        n0 = 0
    else:
        step, amb = _branch_step(np.asarray(alpha_start), cand[0])
        if amb:
            raise AmbiguousBranch("branch choice ambiguous at the first point")
        n0 = int(step)
    steps, amb = _branch_step(cand[:-1], cand[1:])
    if np.any(amb):
        k = int(np.argmax(amb)) + 1
        raise AmbiguousBranch(
            f"branch choice ambiguous at sample {k} "
            f"(Gamma={gammas[k]:.6g}, theta={thetas[k]:.6g}); refine the sampling")
    n = n0 + np.concatenate([[0], np.cumsum(steps)])
    alpha = cand + n * np.pi
    A, S = _coupling_terms(Omega, gammas, thetas)
    lam = (A + 1j * S) * np.exp(-1j * alpha)
    return TrackedBranch(alpha, n, lam)


def eigenvectors(alpha):
    """Right eigenvectors ``(r_plus, r_minus)`` for an array of alphas, shape (N, 2) each."""
    h = np.asarray(alpha) / 2
    s, c = np.sin(h), np.cos(h)
    return np.stack([-s, c], axis=-1), np.stack([c, s], axis=-1)


def ep_locations(Omega):
    """Exceptional points ``(Gamma, theta)`` within one period of theta."""
    if not Omega > 0:
        raise DegenerateModel("zero detuning: the modes are identical and no EP exists")
    return [(float(Omega), np.pi / 4), (float(Omega), 3 * np.pi / 4)]


def classify_phase(Omega, Gamma, theta, tol=1e-9):
    if tol <= 0:
        raise ValueError("tol must be positive")
    c = double_angle(theta)[0]
    if abs(c) >= tol:
        return PhaseClass.GENERIC
    if abs(Gamma - Omega) < tol * Omega:
        return PhaseClass.EXCEPTIONAL_POINT
    return PhaseClass.EXACT_PT if Gamma < Omega else PhaseClass.BROKEN_PT


def trace_gauge(gamma_x, gamma_y):
    """Reduce unequal rates to the symmetric model.

    Returns ``(Gamma, kappa)`` such that the physical envelope equals
    ``exp(kappa t)`` times the solution for the symmetric ``Gamma``.
    """
    return (gamma_x + gamma_y) / 2, (gamma_y - gamma_x) / 4


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    gammas: np.ndarray
    thetas: np.ndarray
    lambda_plus: np.ndarray  # shape (len(gammas), len(thetas))
    lambda_minus: np.ndarray


def _continuity_signs(values):
    # +-1 per element along the last axis so s_k v_k stays closest to s_{k-1} v_{k-1}
    keep = np.abs(values[..., 1:] - values[..., :-1]) <= np.abs(values[..., 1:] + values[..., :-1])
    flips = np.cumprod(np.where(keep, 1, -1), axis=-1)
    return np.concatenate([np.ones(values.shape[:-1] + (1,), int), flips], axis=-1)


def surface_grid(Omega, gamma_range, theta_range, resolution, track=True):
    """Eigenvalue pairs over a (Gamma, theta) grid, rows indexed by Gamma.

    With ``track=True`` labels are continued from the ``[0, 0]`` corner, first
    down the Gamma axis and then along each theta row; with ``track=False``
    every point uses the gain/loss convention (the sheet coloring).
    """
    if np.ndim(resolution) == 0:
        n_g = n_t = int(resolution)
    else:
        n_g, n_t = (int(r) for r in resolution)
    if n_g < 2 or n_t < 2:
        raise ValueError("resolution must be at least 2 per axis")
    gammas = np.linspace(gamma_range[0], gamma_range[1], n_g)
    thetas = np.linspace(theta_range[0], theta_range[1], n_t)
    G, TH = np.meshgrid(gammas, thetas, indexing="ij")
    lam = _gain_sorted_root(Omega, G, TH)
    if track:
        col_signs = _continuity_signs(lam[:, 0])
        lam = lam * col_signs[:, None]
        lam = lam * _continuity_signs(lam)
    return SurfaceGrid(gammas, thetas, lam, -lam)
