"""Linear susceptibility of the doped waveguide in the low-excitation limit.

With ``b_alpha = S_alpha^- / sqrt(n)`` treated as a boson, each wavenumber
is a pair of coupled damped oscillators.  In the frame rotating at
``Omega_k`` the slowly varying amplitudes obey

    d/dt a = -kappa a - i g sqrt(n) b
    d/dt b = -gamma b - i (omega_a - Omega_k) b - i g sqrt(n) a

and the dipole polarisation they imply gives

    chi_k = 2 i g^2 n / (omega_c [gamma - i x]),   x = delta + 2 J cos(k ell).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import IntegrationError, ValidationError
from .model import ModelParams, bare_dispersion

__all__ = [
    "ModeAmplitudes",
    "ModeTrajectory",
    "SusceptibilityCurve",
    "resonance_offset",
    "evolve_mode",
    "steady_state_ratio",
    "chi",
    "chi_parts",
    "chi_sweep",
]


@dataclass(frozen=True)
class ModeAmplitudes:
    a_tilde: complex
    b_tilde: complex
    t: float = 0.0


@dataclass(frozen=True)
class ModeTrajectory:
    t: np.ndarray
    a_tilde: np.ndarray
    b_tilde: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> ModeAmplitudes:
        return ModeAmplitudes(complex(self.a_tilde[i]), complex(self.b_tilde[i]), float(self.t[i]))


@dataclass(frozen=True)
class SusceptibilityCurve:
    k: float
    delta_grid: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray

    def columns(self) -> dict[str, np.ndarray]:
        return {"delta": self.delta_grid, "chi1": self.chi1, "chi2": self.chi2}


def resonance_offset(k, delta, params: ModelParams):
    """``x = delta + 2 J cos(k ell)``, the cavity-band detuning from the atom."""
    return np.asarray(delta) + 2 * params.j_hop * np.cos(np.asarray(k) * params.ell)


def _generator(k, params: ModelParams):
    coupling = params.g * math.sqrt(params.n_atoms)
    offset = params.omega_a - float(bare_dispersion(k, params))
    return np.array(
        [[-params.kappa, -1j * coupling], [-1j * coupling, -params.gamma - 1j * offset]],
        dtype=complex,
    )


def evolve_mode(
    k: float,
    params: ModelParams,
    initial: ModeAmplitudes,
    t_grid,
    source: complex = 0.0,
    method: str = "expm",
    cross_check: bool = True,
    rtol: float = 1e-8,
    hold_field: bool = False,
) -> ModeTrajectory:
    """Propagate ``(a_tilde, b_tilde)`` of one wavenumber.

    ``source`` adds a constant drive to ``d a_tilde/dt`` (used to maintain a
    field for steady-state checks).  The closed-form matrix exponential
    and an adaptive Runge-Kutta integration are both run when
    ``cross_check`` is set; disagreement beyond ``rtol`` (relative to the
    trajectory's peak amplitude) raises :class:`IntegrationError`.

    With ``hold_field`` the photon amplitude is maintained at its initial
    value by an external drive and only ``b_tilde`` evolves.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or t_grid[0] < 0 or np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be strictly increasing and start at t >= 0")
    gen = _generator(k, params)
    if hold_field:
        gen[0, :] = 0.0
        source = 0.0
    y0 = np.array([initial.a_tilde, initial.b_tilde], dtype=complex)
    drive = np.array([source, 0.0], dtype=complex)

    def closed_form():
        # augmented generator carries the constant drive
        big = np.zeros((3, 3), dtype=complex)
        big[:2, :2] = gen
        big[:2, 2] = drive
        z0 = np.append(y0, 1.0)
        out = np.empty((len(t_grid), 2), dtype=complex)
        for i, t in enumerate(t_grid - initial.t):
            out[i] = (expm(big * t) @ z0)[:2]
        return out

    def integrated():
        sol = solve_ivp(
            lambda _, y: gen @ y + drive,
            (initial.t, t_grid[-1]),
            y0,
            method="RK45",
            t_eval=t_grid,
            rtol=1e-10,
            atol=1e-13,
        )
        if not sol.success:
            raise IntegrationError(sol.message)
        return sol.y.T

    if method == "expm":
        primary = closed_form()
        other = integrated() if cross_check else None
    elif method == "ivp":
        primary = integrated()
        other = closed_form() if cross_check else None
    else:
        raise ValidationError(f"unknown method {method!r}")
    if other is not None:
        scale = max(np.abs(primary).max(), np.abs(other).max(), 1e-300)
        mismatch = np.abs(primary - other).max() / scale
        if mismatch > rtol:
            raise IntegrationError(f"matrix exponential and integrator differ by {mismatch:.3g}")
    return ModeTrajectory(t_grid, primary[:, 0], primary[:, 1])


def steady_state_ratio(k: float, params: ModelParams, delta: float | None = None) -> complex:
    """Stationary ``<b_tilde>/<a_tilde> = -i g sqrt(n) / (gamma - i x)``.

    Cavity loss does not enter (``gamma >> kappa``).
    """
    if delta is None:
        delta = params.delta
    x = float(resonance_offset(k, delta, params))
    if params.gamma == 0 and abs(x) <= 1e-12 * (abs(delta) + 2 * params.j_hop):
        raise ValidationError("no steady state on exact resonance without atomic damping")
    return complex(-1j * params.g * math.sqrt(params.n_atoms) / (params.gamma - 1j * x))


def chi(k, delta, params: ModelParams):
    """Closed-form susceptibility ``2 i g^2 n / (omega_c [gamma - i x])``."""
    if params.gamma <= 0:
        raise ValidationError("susceptibility needs gamma > 0")
    x = resonance_offset(k, delta, params)
    return 2j * params.g**2 * params.n_atoms / (params.omega_c * (params.gamma - 1j * x))


def chi_parts(k, delta, params: ModelParams):
    """Dispersive and absorptive parts written out separately."""
    if params.gamma <= 0:
        raise ValidationError("susceptibility needs gamma > 0")
    x = resonance_offset(k, delta, params)
    strength = 2 * params.g**2 * params.n_atoms
    denom = params.omega_c * (params.gamma**2 + x**2)
    return -x * strength / denom, strength * params.gamma / denom


def chi_sweep(k: float, params: ModelParams, delta_range, n_points: int) -> SusceptibilityCurve:
    if n_points < 2:
        raise ValidationError("n_points must be at least 2")
    lo, hi = delta_range
    if not hi > lo:
        raise ValidationError("delta range must be increasing")
    deltas = np.linspace(lo, hi, int(n_points))
    chi1, chi2 = chi_parts(k, deltas, params)
    return SusceptibilityCurve(float(k), deltas, chi1, chi2)
