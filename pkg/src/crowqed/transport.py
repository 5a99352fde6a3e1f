"""Group velocity, band compression, damping and the lasing threshold."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect

from .errors import ExceptionalPointError, RegimeWarning, ValidationError
from .model import ModelParams
from .spectral import poles_damped, track_poles

__all__ = [
    "TransportReport",
    "Bandwidth",
    "GainEstimate",
    "split_function",
    "group_velocity",
    "bandwidth",
    "laser_threshold",
    "exact_lasing_threshold",
    "gain_rate",
    "f_factor",
    "minus_branch_decay",
    "transport_report",
]


def _branch_sign(branch) -> int:
    if branch in ("+", "plus", 1, +1):
        return 1
    if branch in ("-", "minus", -1):
        return -1
    raise ValidationError(f"branch must be '+' or '-', got {branch!r}")


def split_function(x, k, params: ModelParams):
    """Half splitting ``F(x, k) = sqrt((delta + 2 J cos k ell)^2 / 4 - g^2 x)``.

    Equals ``eps_k`` of the lossless poles.  Negative radicands give an
    imaginary result.
    """
    shift = params.delta + 2 * params.j_hop * np.cos(np.asarray(k) * params.ell)
    return np.sqrt(np.asarray(0.25 * shift**2 - params.g**2 * x, dtype=complex))


def group_velocity(k, branch, params: ModelParams, s_z: float):
    """``|d omega_pm / dk|`` of a lossless branch, in units of ``J ell``.

    ``v = J ell sin(k ell) [1 +/- (delta + 2 J cos k ell) / (2 F)]`` with
    ``F = split_function(s_z, k)``; the magnitude is returned.
    """
    sign = _branch_sign(branch)
    k = np.asarray(k, dtype=float)
    shift = params.delta + 2 * params.j_hop * np.cos(k * params.ell)
    radicand = 0.25 * shift**2 - params.g**2 * s_z
    scale = 0.25 * shift**2 + params.g**2 * abs(s_z)
    if np.any(radicand <= 1e-12 * scale):
        raise ExceptionalPointError("group velocity needs two distinct real branches")
    f = np.sqrt(radicand)
    v = params.j_hop * params.ell * np.sin(k * params.ell) * (1 + sign * shift / (2 * f))
    v = np.abs(v)
    return v.item() if v.ndim == 0 else v


class Bandwidth(NamedTuple):
    paper_halfband: float
    full_band: float
    regime_ok: bool


def bandwidth(branch, params: ModelParams, s_z: float, n_k: int = 4001) -> Bandwidth:
    """Width of one branch, two ways.

    ``paper_halfband`` is ``|F(s_z, 0) - F(s_z, pi/2 ell)|``: the change of
    the half splitting between the zone centre and the band centre, without
    the ``J`` shift of ``Omega_D``.  ``full_band`` is the extent of
    ``Re omega`` over ``k`` in ``[0, pi/ell]``.  ``regime_ok`` is false for
    ``s_z >= 0``, where the narrowing statement is not made.
    """
    sign = _branch_sign(branch)
    half = abs(split_function(s_z, 0.0, params) - split_function(s_z, math.pi / (2 * params.ell), params))
    ks = np.linspace(0.0, math.pi / params.ell, n_k)
    poles = track_poles(ks, params, s_z, damped=params.damped)
    band = np.asarray(poles.plus if sign > 0 else poles.minus).real
    return Bandwidth(float(half), float(band.max() - band.min()), bool(s_z < 0))


def laser_threshold(params: ModelParams) -> float:
    """Approximate threshold inversion ``gamma kappa / (2 g^2)``."""
    if params.g == 0:
        raise ValidationError("no lasing threshold without atom-photon coupling")
    return params.gamma * params.kappa / (2 * params.g**2)


def _resonant(params: ModelParams, k):
    """Parameters and wavenumber at which to evaluate the exact poles.

    ``k=None`` means exact resonance ``Omega_k = omega_a``, realised at the
    band centre ``k = pi/(2 ell)`` with ``omega_c`` moved onto ``omega_a``.
    """
    if k is None:
        return params.replace(omega_c=params.omega_a), math.pi / (2 * params.ell)
    return params, float(k)


def _gain_exact(params, k, s_z):
    return float(np.imag(poles_damped(k, params, s_z).plus))


def exact_lasing_threshold(params: ModelParams, k=None, xtol: float = 1e-13) -> float:
    """Smallest inversion with ``Im omega_+ > 0``, located by bisection.

    The search is not restricted to ``|s| <= n_atoms``; compare the result
    against ``params.n_atoms`` to see whether it is reachable.
    """
    params, k = _resonant(params, k)
    if params.g == 0:
        raise ValidationError("no lasing threshold without atom-photon coupling")
    gain = lambda s: _gain_exact(params, k, s)  # noqa: E731
    lo = 0.0
    if gain(lo) > 0:
        return lo
    hi = max(1.0, 2 * laser_threshold(params))
    while gain(hi) <= 0:
        hi *= 2
        if hi > 1e12:
            raise ValidationError("no lasing threshold found")
    return float(bisect(gain, lo, hi, xtol=xtol, maxiter=400))


class GainEstimate(NamedTuple):
    approx: float
    exact: float
    in_regime: bool

    @property
    def lasing(self) -> bool:
        return self.exact > 0


def _in_gain_regime(params, k, s_z):
    if params.gamma == 0 or params.g == 0:
        return False
    detuning = abs(float(np.real(np.cos(k * params.ell))) * 2 * params.j_hop + params.delta)
    return (
        abs(s_z) < params.gamma**2 / (40 * params.g**2)
        and params.gamma > 20 * params.kappa
        and detuning < 0.01 * params.gamma
    )


def gain_rate(params: ModelParams, s_z: float, k=None) -> GainEstimate:
    """Growth rate of the upper branch.

    ``approx`` is ``g^2 s_z / gamma - kappa / 2``, valid for
    ``s_z << gamma^2/(4 g^2)``, ``gamma >> kappa`` and ``Omega_k ~ omega_a``;
    ``exact`` is ``Im omega_+`` from the damped poles (at resonance when
    ``k`` is None).  A :class:`RegimeWarning` is issued outside the regime.
    """
    if params.gamma == 0:
        raise ValidationError("gain estimate needs gamma > 0")
    rparams, rk = _resonant(params, k)
    approx = params.g**2 * s_z / params.gamma - params.kappa / 2
    exact = _gain_exact(rparams, rk, s_z)
    ok = _in_gain_regime(rparams, rk, s_z)
    if not ok:
        warnings.warn("gain formula used outside its validity regime", RegimeWarning, stacklevel=2)
    return GainEstimate(float(approx), exact, ok)


def f_factor(x, params: ModelParams):
    """``sqrt(1 + 4 x g^2 / gamma^2)``."""
    return np.sqrt(np.asarray(1 + 4 * x * params.g**2 / params.gamma**2, dtype=complex))


def minus_branch_decay(params: ModelParams, s_z: float, k=None):
    """Decay rate of the lower branch, ``(approx, exact)``.

    ``approx = ((f + 1) gamma + kappa) / 2`` and ``exact = -Im omega_-``.
    """
    rparams, rk = _resonant(params, k)
    approx = 0.5 * ((f_factor(s_z, params).real + 1) * params.gamma + params.kappa)
    exact = -float(np.imag(poles_damped(rk, rparams, s_z).minus))
    return float(approx), exact


@dataclass(frozen=True)
class TransportReport:
    k: float
    v_plus: float
    v_minus: float
    bandwidth_plus: float
    bandwidth_minus: float
    threshold_sz: float
    gain: float
    lasing: bool


def transport_report(k: float, params: ModelParams, s_z: float, n_k: int = 2001) -> TransportReport:
    """Collect the transport observables at one wavenumber.

    Velocities are NaN where the branches are not real and distinct;
    ``gain`` is the exact ``Im omega_+`` at ``k``.
    """
    try:
        v_plus = group_velocity(k, "+", params, s_z)
        v_minus = group_velocity(k, "-", params, s_z)
    except ExceptionalPointError:
        v_plus = v_minus = math.nan
    threshold = laser_threshold(params) if params.g > 0 else math.inf
    gain = _gain_exact(params, k, s_z)
    return TransportReport(
        k=float(k),
        v_plus=float(v_plus),
        v_minus=float(v_minus),
        bandwidth_plus=bandwidth("+", params, s_z, n_k).full_band,
        bandwidth_minus=bandwidth("-", params, s_z, n_k).full_band,
        threshold_sz=float(threshold),
        gain=gain,
        lasing=gain > 0,
    )
