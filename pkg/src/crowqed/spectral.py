"""Polariton poles, branch amplitudes and retarded Green functions.

Damping is included phenomenologically by the substitutions
``omega_a -> omega_a - i*gamma`` and ``Omega_k -> Omega_k - i*kappa``.  With
``a = omega_a - i*gamma`` and ``b = Omega_k - i*kappa`` the mean-field photon
and atom propagators at complex frequency ``z`` are

    G_photon(k, z) = (z - a) / ((z - a)(z - b) + g^2 s)
    G_atom(k, z)   = -s (z - b) / ((z - a)(z - b) + g^2 s)

with ``s`` the mean inversion per site.  Their common poles are
``omega_pm = (a + b)/2 +/- sqrt((b - a)^2 - 4 g^2 s)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ExceptionalPointError, SingularSystemError, ValidationError
from .model import KGrid, ModelParams, PopulationProfile, bare_dispersion, kspace_inversion_matrix

__all__ = [
    "DEFAULT_EPS",
    "DENSE_SOLVE_CAP",
    "Poles",
    "BranchDispersion",
    "GreenFunctionEvaluation",
    "poles_undamped",
    "poles_damped",
    "track_poles",
    "branch_amplitudes",
    "branch_dispersion",
    "band_structure",
    "photon_gf",
    "atom_gf",
    "evaluate_gf",
    "solve_appendix_a_system",
    "time_response",
    "inverse_fft_response",
]

DEFAULT_EPS = 1e-3
DENSE_SOLVE_CAP = 256
# relative pole separation below which the branches count as coalesced
DEGENERACY_RTOL = 1e-12


class Poles(NamedTuple):
    plus: complex
    minus: complex

    @property
    def degenerate(self):
        scale = np.maximum(1.0, np.abs(self.plus) + np.abs(self.minus))
        return np.abs(np.asarray(self.plus) - self.minus) <= DEGENERACY_RTOL * scale


def _normalized_root(z):
    """Square root with Re >= 0, and Im >= 0 on the imaginary axis."""
    r = np.sqrt(np.asarray(z, dtype=complex))
    flip = (r.real < 0) | ((r.real == 0) & (r.imag < 0))
    return np.where(flip, -r, r)


def _bare_complex(k, params: ModelParams, damped: bool):
    gamma = params.gamma if damped else 0.0
    kappa = params.kappa if damped else 0.0
    a = params.omega_a - 1j * gamma
    b = bare_dispersion(k, params) - 1j * kappa
    return a, b


def _poles(k, params, s_z, damped):
    a, b = _bare_complex(k, params, damped)
    root = _normalized_root((b - a) ** 2 - 4 * params.g**2 * s_z)
    centre = 0.5 * (a + b)
    return centre + 0.5 * root, centre - 0.5 * root


def _scalar(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def poles_undamped(k, params: ModelParams, s_z: float) -> Poles:
    """Lossless poles ``Omega_D +/- eps_k`` (``kappa`` and ``gamma`` ignored).

    ``eps_k = sqrt((Omega_k - omega_a)^2 - 4 g^2 s_z)/2`` uses the complex
    square root, so inverted populations can give a complex pair.  ``plus``
    always carries the root with non-negative real part; check
    :attr:`Poles.degenerate` for the double-pole case.
    """
    plus, minus = _poles(k, params, s_z, damped=False)
    return Poles(_scalar(plus), _scalar(minus))


def poles_damped(k, params: ModelParams, s_z: float) -> Poles:
    """Complex poles including cavity and atomic decay.

    ``omega_pm = Omega_D - i(gamma + kappa)/2 +/- sqrt((Delta_k + i Lambda)^2 - 4 g^2 s_z)/2``
    with ``Delta_k = Omega_k - omega_a`` and ``Lambda = gamma - kappa``.  The
    root is taken on the principal branch at each ``k`` independently; use
    :func:`track_poles` for continuity along a path in ``k``.
    """
    plus, minus = _poles(k, params, s_z, damped=True)
    return Poles(_scalar(plus), _scalar(minus))


def track_poles(ks, params: ModelParams, s_z: float, damped: bool = True) -> Poles:
    """Poles along a path of wavenumbers with the branch label followed continuously.

    The first point uses the principal root; every further point picks the
    sign of the square root closest to its predecessor.

    Away from coalescence ``|d omega/dk| <= J ell (1 + max_k |Delta_k + i Lambda| / |2 Omega_pm|)``,
    so consecutive tracked values differ by at most that constant times the
    step.  For ``s_z <= 0`` and ``4 g^2 |s_z| >= 2 Lambda^2`` the ratio is at
    most one and the constant is ``2 J ell``.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    a, b = _bare_complex(ks, params, damped)
    root = _normalized_root((b - a) ** 2 - 4 * params.g**2 * s_z)
    # relative sign between neighbours; the running product fixes each point's sign
    flips = np.where(np.abs(root[1:] + root[:-1]) < np.abs(root[1:] - root[:-1]), -1.0, 1.0)
    root = root * np.concatenate([[1.0], np.cumprod(flips)])
    centre = 0.5 * (a + b)
    return Poles(centre + 0.5 * root, centre - 0.5 * root)


def _amplitudes_from_poles(poles: Poles, a):
    split = np.asarray(poles.plus) - poles.minus
    if np.any(poles.degenerate):
        raise ExceptionalPointError("branches coalesce; amplitudes A_k, B_k are undefined")
    amp_a = (poles.plus - a) / split
    amp_b = (a - poles.minus) / split
    return amp_a, amp_b


def branch_amplitudes(k, params: ModelParams, s_z: float, damped: bool | None = None):
    """Photon weights ``(A_k, B_k)`` of the upper and lower branch.

    ``A_k = (omega_+ - a)/(omega_+ - omega_-)`` and
    ``B_k = (a - omega_-)/(omega_+ - omega_-)`` so that ``A_k + B_k = 1``.
    The atom propagator carries the same weights swapped.

    Raises
    ------
    ExceptionalPointError
        If the two poles coincide.
    """
    if damped is None:
        damped = params.damped
    poles = Poles(*_poles(k, params, s_z, damped))
    a, _ = _bare_complex(k, params, damped)
    amp_a, amp_b = _amplitudes_from_poles(poles, a)
    return _scalar(amp_a), _scalar(amp_b)


@dataclass(frozen=True)
class BranchDispersion:
    """Both polariton branches at one wavenumber."""

    k: float
    omega_plus: complex
    omega_minus: complex
    amp_a: complex
    amp_b: complex
    omega_d: float
    epsilon_k: complex

    @property
    def atom_amplitudes(self):
        """Weights ``(A'_k, B'_k) = (B_k, A_k)`` of the atomic propagator."""
        return self.amp_b, self.amp_a


def _make_branch(k, plus, minus, a, b) -> BranchDispersion:
    amp_a, amp_b = _amplitudes_from_poles(Poles(plus, minus), a)
    return BranchDispersion(
        k=float(k),
        omega_plus=complex(plus),
        omega_minus=complex(minus),
        amp_a=complex(amp_a),
        amp_b=complex(amp_b),
        omega_d=float(0.5 * (a.real + b.real)),
        epsilon_k=complex(0.5 * (plus - minus)),
    )


def branch_dispersion(k: float, params: ModelParams, s_z: float, damped: bool | None = None) -> BranchDispersion:
    if damped is None:
        damped = params.damped
    plus, minus = _poles(k, params, s_z, damped)
    a, b = _bare_complex(k, params, damped)
    return _make_branch(k, plus, minus, a, b)


def band_structure(ks, params: ModelParams, s_z: float, damped: bool | None = None) -> list[BranchDispersion]:
    """Branch data along ``ks`` with continuous branch labels."""
    if damped is None:
        damped = params.damped
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    plus, minus = track_poles(ks, params, s_z, damped)
    a, b = _bare_complex(ks, params, damped)
    return [_make_branch(ks[i], plus[i], minus[i], a, b[i]) for i in range(len(ks))]


def _check_eps(eps):
    if not eps > 0:
        raise ValidationError(f"broadening eps must be positive, got {eps!r}")


def photon_gf(k, omega, params: ModelParams, s_z: float, eps: float = DEFAULT_EPS, form: str = "rational"):
    """Photon propagator ``<<a_k | a_k^dagger>>`` at ``omega + i*eps``.

    ``form="branch"`` evaluates the pole decomposition
    ``A_k/(z - omega_+) + B_k/(z - omega_-)`` instead of the rational form.
    """
    _check_eps(eps)
    z = np.asarray(omega) + 1j * eps
    a, b = _bare_complex(k, params, True)
    if form == "rational":
        return (z - a) / ((z - a) * (z - b) + params.g**2 * s_z)
    if form == "branch":
        plus, minus = _poles(k, params, s_z, True)
        amp_a, amp_b = _amplitudes_from_poles(Poles(plus, minus), a)
        return amp_a / (z - plus) + amp_b / (z - minus)
    raise ValidationError(f"unknown form {form!r}")


def atom_gf(k, omega, params: ModelParams, s_z: float, eps: float = DEFAULT_EPS, form: str = "rational"):
    """Collective spin propagator ``<<sigma_k^- | sigma_k^+>>`` at ``omega + i*eps``.

    The branch form is ``-s_z [B_k/(z - omega_+) + A_k/(z - omega_-)]``.
    """
    _check_eps(eps)
    z = np.asarray(omega) + 1j * eps
    a, b = _bare_complex(k, params, True)
    if form == "rational":
        return -s_z * (z - b) / ((z - b) * (z - a) + params.g**2 * s_z)
    if form == "branch":
        plus, minus = _poles(k, params, s_z, True)
        amp_a, amp_b = _amplitudes_from_poles(Poles(plus, minus), a)
        return -s_z * (amp_b / (z - plus) + amp_a / (z - minus))
    raise ValidationError(f"unknown form {form!r}")


@dataclass(frozen=True)
class GreenFunctionEvaluation:
    k: float
    omega_grid: np.ndarray
    epsilon_broadening: float
    photon_gf: np.ndarray
    atom_gf: np.ndarray

    def spectral_function(self, which: str = "photon") -> np.ndarray:
        values = self.photon_gf if which == "photon" else self.atom_gf
        return -values.imag / np.pi

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "omega": self.omega_grid,
            "re_photon": self.photon_gf.real,
            "im_photon": self.photon_gf.imag,
            "re_atom": self.atom_gf.real,
            "im_atom": self.atom_gf.imag,
        }


def evaluate_gf(
    k: float,
    omega_grid,
    params: ModelParams,
    population,
    eps: float = DEFAULT_EPS,
) -> GreenFunctionEvaluation:
    """Sample both propagators at wavenumber ``k`` on ``omega_grid``.

    ``population`` is either a mean inversion or a :class:`PopulationProfile`.
    An inhomogeneous profile is handled by the coupled k-space solve, one
    dense system per frequency.
    """
    _check_eps(eps)
    omega_grid = np.asarray(omega_grid, dtype=float)
    if isinstance(population, PopulationProfile) and not population.is_homogeneous:
        grid = KGrid(2 * np.pi * np.arange(len(population)) / (params.ell * len(population)), ell=params.ell)
        i = grid.index_of(k)
        photon = np.empty(len(omega_grid), dtype=complex)
        atom = np.empty(len(omega_grid), dtype=complex)
        for j, w in enumerate(omega_grid):
            p, s = solve_appendix_a_system(grid, population, params, w + 1j * eps)
            photon[j], atom[j] = p[i, i], s[i, i]
    else:
        s_z = population.mean_inversion() if isinstance(population, PopulationProfile) else float(population)
        photon = photon_gf(k, omega_grid, params, s_z, eps)
        atom = atom_gf(k, omega_grid, params, s_z, eps)
    return GreenFunctionEvaluation(float(k), omega_grid, float(eps), photon, atom)


def solve_appendix_a_system(
    grid: KGrid,
    profile: PopulationProfile,
    params: ModelParams,
    omega: complex,
    max_sites: int = DENSE_SOLVE_CAP,
):
    """Coupled mean-field Green functions for an inhomogeneous population.

    Solves, for every source wavenumber ``k`` at once,

        (omega - a) X[k', k] + g^2 sum_q M[q, k'] X[q, k] / (omega - b_q) = -M[k, k']

    where ``X[k', k] = <<sigma_k'^- | sigma_k^+>>`` and ``M`` is
    :func:`~crowqed.model.kspace_inversion_matrix`.  The diagonal ``q = k'``
    term turns ``omega - a`` into ``f_k'(omega)``; no other term is dropped.

    Returns
    -------
    photon : ndarray, shape (N, N)
        ``<<a_k' | a_k^dagger>>``.
    atom : ndarray, shape (N, N)
        ``<<sigma_k'^- | sigma_k^+>>``.
    """
    n = len(grid)
    if n > max_sites:
        raise ValidationError(f"dense solve limited to {max_sites} sites, got {n}")
    omega = complex(omega)
    a, b = _bare_complex(grid.values, params, True)
    photon_denominator = omega - b
    if np.any(photon_denominator == 0) or omega == a:
        raise SingularSystemError(f"omega = {omega} sits exactly on a bare pole")
    m = kspace_inversion_matrix(profile, grid)
    lhs = (omega - a) * np.eye(n, dtype=complex) + params.g**2 * m.T / photon_denominator[None, :]
    try:
        atom = np.linalg.solve(lhs, -m.T)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"coupled system singular at omega = {omega}") from exc
    if not np.all(np.isfinite(atom)):
        raise SingularSystemError(f"coupled system singular at omega = {omega}")
    photon = np.diag(1.0 / photon_denominator) + params.g**2 * atom / np.outer(
        photon_denominator, photon_denominator
    )
    return photon, atom


def _theta(t):
    return np.where(t > 0, 1.0, np.where(t == 0, 0.5, 0.0))


def time_response(
    k: float,
    params: ModelParams,
    s_z: float,
    t,
    weights=None,
    eps: float = 0.0,
    kind: str = "photon",
):
    """Retarded propagator in time from its two poles.

    ``G(t) = -i theta(t) [w_+ exp(-i omega_+ t) + w_- exp(-i omega_- t)] exp(-eps t)``
    with ``(w_+, w_-) = (A_k, B_k)`` for photons and ``-s_z (B_k, A_k)`` for
    atoms unless ``weights`` is given.  ``theta(0) = 1/2``.
    """
    t = np.asarray(t, dtype=float)
    plus, minus = poles_damped(k, params, s_z)
    if weights is None:
        amp_a, amp_b = branch_amplitudes(k, params, s_z, damped=True)
        if kind == "photon":
            weights = (amp_a, amp_b)
        elif kind == "atom":
            weights = (-s_z * amp_b, -s_z * amp_a)
        else:
            raise ValidationError(f"unknown kind {kind!r}")
    w_plus, w_minus = weights
    tp = np.where(t > 0, t, 0.0)
    signal = w_plus * np.exp(-1j * plus * tp) + w_minus * np.exp(-1j * minus * tp)
    return -1j * _theta(t) * signal * np.exp(-eps * tp)


def _laurent_coefficients(prefactor, p0, q1, q0, order):
    """Coefficients ``c_n`` of ``prefactor (v + p0)/(v^2 + q1 v + q0) = sum_n c_n v^-n``."""
    c = [0j, complex(prefactor), complex(prefactor * (p0 - q1))]
    for n in range(1, order - 1):
        c.append(-q1 * c[n + 1] - q0 * c[n])
    return c[1 : order + 1]


def inverse_fft_response(
    k: float,
    params: ModelParams,
    s_z: float,
    eps: float = DEFAULT_EPS,
    n_points: int = 2**18,
    decay_lengths: float = 60.0,
    kind: str = "photon",
    tail_order: int = 6,
):
    """Time-domain propagator from an FFT of the broadened frequency-domain one.

    Works from the rational form only, so it is independent of the pole
    decomposition.  The slowly decaying ``1/omega`` tail is removed first by
    subtracting the first ``tail_order`` terms of the large-``omega``
    expansion about a deeply damped reference frequency; those terms are
    transformed analytically.  The frequency spacing is chosen so the window
    ``T = 2 pi / d omega`` covers ``decay_lengths`` decay times.

    Returns
    -------
    t : ndarray
        Times ``0 .. T`` (exclusive), of which the first half is alias free.
    values : ndarray
        ``G(t)`` sampled at ``t``.
    """
    _check_eps(eps)
    plus, minus = poles_damped(k, params, s_z)
    if max(plus.imag, minus.imag) - eps >= 0:
        raise ValidationError("inverse FFT needs both broadened poles in the lower half plane")
    a, b = _bare_complex(k, params, True)
    centre = 0.5 * (a.real + b.real)
    reference = centre - 1j * max(1.0, params.g * math.sqrt(abs(s_z)), params.j_hop)
    rate = min(-plus.imag, -minus.imag, -reference.imag) + eps
    period = decay_lengths / rate
    d_omega = 2 * np.pi / period
    omega = centre + (np.arange(n_points) - n_points // 2) * d_omega
    z = omega + 1j * eps
    v = z - reference
    q1 = 2 * reference - a - b
    q0 = (reference - a) * (reference - b) + params.g**2 * s_z
    if kind == "photon":
        exact = photon_gf(k, omega, params, s_z, eps)
        coeffs = _laurent_coefficients(1.0, reference - a, q1, q0, tail_order)
    elif kind == "atom":
        exact = atom_gf(k, omega, params, s_z, eps)
        coeffs = _laurent_coefficients(-s_z, reference - b, q1, q0, tail_order)
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    tail = sum(c / v ** (n + 1) for n, c in enumerate(coeffs))
    t = np.arange(n_points) * (period / n_points)
    smooth = (d_omega / (2 * np.pi)) * np.exp(-1j * omega[0] * t) * np.fft.fft(exact - tail)
    tail_t = sum(c * (-1j) * (-1j * t) ** n / math.factorial(n) for n, c in enumerate(coeffs))
    values = smooth + tail_t * np.exp(-1j * reference * t - eps * t)
    return t, values
