"""Physical parameters, Brillouin-zone grid and atomic population profiles.

All frequencies and rates are dimensionless, in units of the inter-cavity
hopping ``J``; lengths are in units of the lattice constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "ModelParams",
    "RamanParams",
    "KGrid",
    "PopulationProfile",
    "build_k_grid",
    "bare_dispersion",
    "effective_coupling",
    "mean_inversion",
    "kspace_inversion_matrix",
    "parse_profile",
]


@dataclass(frozen=True)
class ModelParams:
    """Constants of a doped coupled-resonator waveguide.

    Parameters
    ----------
    omega_c : float
        Single-cavity mode frequency.
    omega_a : float
        Atomic level spacing.
    j_hop : float
        Nearest-neighbour photon hopping ``J`` (the frequency unit).
    g : float
        Atom-photon coupling.
    ell : float
        Lattice constant.
    n_sites : int
        Number of cavities ``N`` (periodic boundary conditions).
    n_atoms : int
        Identical atoms per cavity.
    kappa, gamma : float
        Cavity and atomic decay rates. They enter as ``omega_c - i*kappa``
        and ``omega_a - i*gamma``.
    """

    omega_c: float = 2.0
    omega_a: float = 1.5
    j_hop: float = 1.0
    g: float = 0.1
    ell: float = 1.0
    n_sites: int = 32
    n_atoms: int = 1
    kappa: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise ValidationError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValidationError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        for name in ("omega_c", "omega_a", "j_hop", "g", "ell", "kappa", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if self.j_hop <= 0:
            raise ValidationError("j_hop must be positive")
        if self.ell <= 0:
            raise ValidationError("ell must be positive")
        if self.g < 0:
            raise ValidationError("g must be non-negative")
        if self.kappa < 0 or self.gamma < 0:
            raise ValidationError("decay rates must be non-negative")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "n_atoms", int(self.n_atoms))

    @property
    def delta(self) -> float:
        """Cavity-atom detuning ``omega_c - omega_a``."""
        return self.omega_c - self.omega_a

    @property
    def damped(self) -> bool:
        return self.kappa > 0 or self.gamma > 0

    def replace(self, **changes) -> "ModelParams":
        """Return a copy with ``changes`` applied.

        The pseudo-field ``delta`` moves ``omega_c`` so that
        ``omega_c - omega_a`` equals the requested detuning.
        """
        delta = changes.pop("delta", None)
        new = replace(self, **changes)
        if delta is not None:
            new = replace(new, omega_c=new.omega_a + float(delta))
        return new

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class RamanParams:
    """Three-level Raman scheme used to engineer the effective coupling."""

    omega_rabi: float
    omega_rabi_c: complex
    detuning_raman: float

    def __post_init__(self):
        if self.detuning_raman == 0:
            raise ValidationError("Raman detuning must be non-zero")


def effective_coupling(raman: RamanParams) -> complex:
    """Effective two-photon coupling ``Omega * conj(Omega_c) / Delta``."""
    if raman.detuning_raman == 0:
        raise ValidationError("Raman detuning must be non-zero")
    return complex(raman.omega_rabi * np.conj(raman.omega_rabi_c) / raman.detuning_raman)


@dataclass(frozen=True)
class KGrid:
    """Wavenumbers ``2*pi*n/(ell*N)`` for ``n = 0..N-1``."""

    values: np.ndarray
    ell: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or len(values) == 0:
            raise ValidationError("k grid must be a non-empty 1-d array")
        if np.any(np.diff(values) <= 0) or values[0] < 0 or values[-1] >= 2 * np.pi / self.ell:
            raise ValidationError("k grid must be strictly increasing inside [0, 2 pi / ell)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, item):
        return self.values[item]

    def index_of(self, k: float, atol: float = 1e-9) -> int:
        """Grid index of wavenumber ``k`` (taken modulo ``2*pi/ell``)."""
        period = 2 * np.pi / self.ell
        k = float(k) % period
        dist = np.abs((self.values - k + period / 2) % period - period / 2)
        i = int(np.argmin(dist))
        if dist[i] > atol:
            raise ValidationError(f"wavenumber {k} is not on the grid")
        return i


def build_k_grid(params: ModelParams) -> KGrid:
    n = params.n_sites
    return KGrid(2 * np.pi * np.arange(n) / (params.ell * n), ell=params.ell)


def bare_dispersion(k, params: ModelParams):
    """Photonic tight-binding band ``omega_c + 2 J cos(k ell)``."""
    return params.omega_c + 2 * params.j_hop * np.cos(np.asarray(k) * params.ell)


@dataclass(frozen=True)
class PopulationProfile:
    """Static per-site inversion ``<S^z_alpha>`` (collective for several atoms).

    The profile is never updated; the light-atom coupling is assumed not to
    change the populations.
    """

    per_site: np.ndarray
    n_atoms: int = 1

    def __post_init__(self):
        values = np.asarray(self.per_site, dtype=float).ravel()
        if values.size == 0:
            raise ValidationError("population profile must not be empty")
        if not np.all(np.isfinite(values)):
            raise ValidationError("population profile contains non-finite values")
        bound = self.n_atoms * (1 + 1e-12)
        if np.any(np.abs(values) > bound):
            raise ValidationError(
                f"per-site inversion must lie in [-{self.n_atoms}, {self.n_atoms}]"
            )
        values.setflags(write=False)
        object.__setattr__(self, "per_site", values)

    @classmethod
    def uniform(cls, value: float, n_sites: int, n_atoms: int = 1) -> "PopulationProfile":
        return cls(np.full(n_sites, float(value)), n_atoms=n_atoms)

    @classmethod
    def defect(cls, site: int, value: float, n_sites: int, n_atoms: int = 1) -> "PopulationProfile":
        """All atoms in the ground state except site ``site``, which holds ``value``."""
        if not 0 <= site < n_sites:
            raise ValidationError(f"defect site {site} outside 0..{n_sites - 1}")
        values = np.full(n_sites, -float(n_atoms))
        values[site] = value
        return cls(values, n_atoms=n_atoms)

    def __len__(self):
        return len(self.per_site)

    @property
    def is_homogeneous(self) -> bool:
        return bool(np.ptp(self.per_site) == 0)

    def mean_inversion(self) -> float:
        return float(np.mean(self.per_site))

    def kspace_matrix(self, grid: KGrid) -> np.ndarray:
        return kspace_inversion_matrix(self, grid)


def mean_inversion(profile: PopulationProfile, n_sites: int | None = None) -> float:
    """Mean inversion per site, ``(1/N) sum_alpha <S^z_alpha>``."""
    if n_sites is not None and len(profile) != n_sites:
        raise ValidationError(f"profile has {len(profile)} sites, expected {n_sites}")
    return profile.mean_inversion()


def kspace_inversion_matrix(profile: PopulationProfile, grid: KGrid) -> np.ndarray:
    """Fourier components ``M[k, k'] = (1/N) sum_alpha exp(i (k - k') ell alpha) s_alpha``.

    ``M[k, k']`` is the expectation of ``[sigma_k^+, sigma_k'^-]``; the
    matrix is Hermitian and its diagonal is the mean inversion.
    """
    n = len(grid)
    if len(profile) != n:
        raise ValidationError(f"profile has {len(profile)} sites but the grid has {n} points")
    alpha = np.arange(n)
    phase = np.exp(1j * np.outer(grid.values, alpha) * grid.ell)  # e^{i k ell alpha}
    weighted = phase * profile.per_site[None, :]
    return weighted @ phase.conj().T / n


def parse_profile(spec, n_sites: int, n_atoms: int = 1) -> PopulationProfile:
    """Build a profile from ``"uniform:<v>"``, ``"defect:<site>:<v>"``, a number or a list."""
    if isinstance(spec, PopulationProfile):
        profile = spec
    elif isinstance(spec, (int, float)) and not isinstance(spec, bool):
        profile = PopulationProfile.uniform(spec, n_sites, n_atoms)
    elif isinstance(spec, str):
        parts = spec.strip().split(":")
        try:
            if parts[0] == "uniform" and len(parts) == 2:
                profile = PopulationProfile.uniform(float(parts[1]), n_sites, n_atoms)
            elif parts[0] == "defect" and len(parts) == 3:
                profile = PopulationProfile.defect(int(parts[1]), float(parts[2]), n_sites, n_atoms)
            else:
                raise ValidationError(f"unrecognised profile spec {spec!r}")
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed profile spec {spec!r}") from exc
    elif isinstance(spec, Sequence):
        profile = PopulationProfile(np.asarray(spec, dtype=float), n_atoms=n_atoms)
    else:
        raise ValidationError(f"cannot interpret profile {spec!r}")
    if len(profile) != n_sites:
        raise ValidationError(f"profile has {len(profile)} sites, expected {n_sites}")
    return profile
