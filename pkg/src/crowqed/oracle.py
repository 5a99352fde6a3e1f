"""Brute-force ground truth for the mean-field results.

The one-excitation sector above the state with every atom in its ground
state and no photons is closed under the full Hamiltonian (excitation
number is conserved), and there the mean-field factorisation with
``<sigma^z> = -1`` is exact.  This module builds that sector directly from
the site-basis Hamiltonian, diagonalises it and evaluates Green functions
through their Lehmann sums.  It also checks the quasi-spin commutators as
explicit (sparse) matrices on the full ``2^N`` spin space.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .model import ModelParams, build_k_grid

__all__ = [
    "SingleExcitationHamiltonian",
    "build_single_excitation_h",
    "lehmann_photon_gf",
    "lehmann_atom_gf",
    "branch_weights",
    "CheckResult",
    "VerificationReport",
    "verify_spin_algebra",
    "bosonic_limit_check",
    "SPIN_SPACE_CAP",
    "random_oracle_params",
    "run_oracle_suite",
]

SPIN_SPACE_CAP = 12


def _hopping_matrix(n_sites: int, j_hop: float) -> np.ndarray:
    """``J sum_alpha (a_alpha^dag a_{alpha+1} + h.c.)`` on a ring, as an N x N matrix."""
    t = np.zeros((n_sites, n_sites))
    for alpha in range(n_sites):
        nxt = (alpha + 1) % n_sites
        t[alpha, nxt] += j_hop
        t[nxt, alpha] += j_hop
    return t


@dataclass(frozen=True, eq=False)
class SingleExcitationHamiltonian:
    """Hamiltonian restricted to one photon or one atomic excitation.

    ``site_matrix`` uses the basis ``|1_alpha, G>`` (indices ``0..N-1``)
    followed by ``|0, E_alpha>`` (indices ``N..2N-1``).  Energies are
    measured from the reference ``E_G = -N omega_a / 2``.
    """

    params: ModelParams
    site_matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.site_matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return self.dim // 2

    @property
    def ground_energy(self) -> float:
        return -self.n_sites * self.params.omega_a / 2

    def photon_state(self, k: float) -> np.ndarray:
        """``a_k^dag |G, 0>`` with ``a_k = sum_alpha exp(i k ell alpha) a_alpha / sqrt(N)``."""
        n = self.n_sites
        psi = np.zeros(2 * n, dtype=complex)
        psi[:n] = np.exp(-1j * k * self.params.ell * np.arange(n)) / np.sqrt(n)
        return psi

    def atom_state(self, k: float) -> np.ndarray:
        """``sigma_k^+ |G, 0>`` with ``sigma_k^+ = sum_alpha exp(i k ell alpha) sigma_alpha^+ / sqrt(N)``."""
        n = self.n_sites
        psi = np.zeros(2 * n, dtype=complex)
        psi[n:] = np.exp(1j * k * self.params.ell * np.arange(n)) / np.sqrt(n)
        return psi

    @property
    def matrix(self) -> np.ndarray:
        """The same operator in the momentum basis ``{a_k^dag|G>, sigma_{-k}^+|G>}``.

        With the Fourier conventions above, the on-site coupling pairs the
        photon ``k`` with the spin wave ``-k``, so this basis makes the
        matrix block diagonal: ``diag(Omega_k)``, ``diag(omega_a)`` and ``g``
        on matching ``k``.
        """
        grid = build_k_grid(self.params)
        basis = np.column_stack(
            [self.photon_state(k) for k in grid.values] + [self.atom_state(-k) for k in grid.values]
        )
        return basis.conj().T @ self.site_matrix @ basis

    @cached_property
    def eigh(self):
        return np.linalg.eigh(self.site_matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh[0]


def build_single_excitation_h(params: ModelParams) -> SingleExcitationHamiltonian:
    """Assemble the one-excitation block of ``H_A + H_AC + H_C`` in the site basis."""
    if params.n_atoms != 1:
        raise ValidationError("the one-excitation oracle requires one atom per cavity")
    n = params.n_sites
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, :n] = params.omega_c * np.eye(n) + _hopping_matrix(n, params.j_hop)
    h[n:, n:] = params.omega_a * np.eye(n)
    # g a_alpha sigma_alpha^+ maps |1_alpha, G> to |0, E_alpha>
    h[n:, :n] = params.g * np.eye(n)
    h[:n, n:] = params.g * np.eye(n)
    return SingleExcitationHamiltonian(params, h)


def _lehmann(h: SingleExcitationHamiltonian, psi, omega, eps):
    if not eps > 0:
        raise ValidationError("broadening eps must be positive")
    energies, vectors = h.eigh
    weights = np.abs(vectors.conj().T @ psi) ** 2
    z = np.asarray(omega, dtype=float)[..., None] + 1j * eps
    return np.sum(weights / (z - energies), axis=-1)


def lehmann_photon_gf(h: SingleExcitationHamiltonian, k: float, omega, eps: float):
    """``sum_m |<m|a_k^dag|G>|^2 / (omega - (E_m - E_G) + i eps)``."""
    return _lehmann(h, h.photon_state(k), omega, eps)


def lehmann_atom_gf(h: SingleExcitationHamiltonian, k: float, omega, eps: float):
    """``sum_m |<m|sigma_k^+|G>|^2 / (omega - (E_m - E_G) + i eps)``."""
    return _lehmann(h, h.atom_state(k), omega, eps)


def branch_weights(h: SingleExcitationHamiltonian, k: float, energies, which: str = "photon", tol: float = 1e-8):
    """Total Lehmann weight of ``a_k^dag|G>`` (or ``sigma_k^+|G>``) at each energy in ``energies``.

    Weights of (numerically) degenerate eigenstates are pooled, which makes
    the result independent of the eigensolver's choice of basis.
    """
    psi = h.photon_state(k) if which == "photon" else h.atom_state(k)
    levels, vectors = h.eigh
    overlaps = np.abs(vectors.conj().T @ psi) ** 2
    return np.array([overlaps[np.abs(levels - e) < tol].sum() for e in np.atleast_1d(energies)])


@dataclass
class CheckResult:
    identity: str
    max_residual: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_residual = float(self.max_residual)
        self.passed = bool(self.max_residual <= self.tolerance)


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, identity: str, residual: float, tolerance: float) -> CheckResult:
        result = CheckResult(identity, residual, tolerance)
        self.checks.append(result)
        return result

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, identity: str) -> CheckResult:
        for c in self.checks:
            if c.identity == identity:
                return c
        raise KeyError(identity)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks], "notes": self.notes}


class _SpinSpace:
    """Single-site operators on ``N`` spins; bit ``alpha`` of the index is 1 if site ``alpha`` is excited."""

    def __init__(self, n_sites: int):
        if not 1 <= n_sites <= SPIN_SPACE_CAP:
            raise ValidationError(f"spin-space checks support 1 <= N <= {SPIN_SPACE_CAP}, got {n_sites}")
        self.n = n_sites
        self.dim = 2**n_sites
        states = np.arange(self.dim)
        self._raise = []
        self._z = []
        for alpha in range(n_sites):
            excited = (states >> alpha) & 1
            ground = np.nonzero(excited == 0)[0]
            self._raise.append(
                sp.csr_matrix(
                    (np.ones(len(ground)), (ground | (1 << alpha), ground)), shape=(self.dim, self.dim)
                )
            )
            self._z.append(sp.diags(2.0 * excited - 1.0, format="csr"))

    def sigma_plus(self, k: float) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for alpha, op in enumerate(self._raise):
            out = out + np.exp(1j * k * alpha) * op
        return out / np.sqrt(self.n)

    def sigma_minus(self, k: float) -> sp.csr_matrix:
        return self.sigma_plus(k).conj().T.tocsr()

    def sigma_z(self) -> sp.csr_matrix:
        return sum(self._z[1:], self._z[0]) / self.n

    def sigma_z_kk(self, k: float, kp: float) -> sp.csr_matrix:
        """``(1/N) sum_alpha exp(-i (k' - k) alpha) sigma_alpha^z``."""
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for alpha, op in enumerate(self._z):
            out = out + np.exp(-1j * (kp - k) * alpha) * op
        return out / self.n


def _max_abs(m) -> float:
    m = sp.csr_matrix(m)
    m.eliminate_zeros()
    return float(np.abs(m.data).max()) if m.nnz else 0.0


def _comm(x, y):
    return x @ y - y @ x


def verify_spin_algebra(n_sites: int, trials: int = 20, seed: int | None = 0, tol: float = 1e-12) -> VerificationReport:
    """Check the quasi-spin commutators as matrix identities on ``2^N`` states.

    Verified for ``trials`` random pairs ``(k, k')`` of grid wavenumbers
    (``ell = 1``):

    * ``[sigma_k^+, sigma_k'^-] = sigma^z_kk'``
    * ``[sigma_k^+, sigma_k^-] = sigma^z``
    * ``[sigma^z, sigma_k^+] = (2/N) sigma_k^+``
    * ``[sigma^z, sigma_k^-] = -(2/N) sigma_k^-``

    plus the su(2) relations of the collective triple built at ``k = 0``.
    The notes record, for information, how far mixed commutators
    ``k != k'`` fall outside the span of ``sigma^z``.
    """
    space = _SpinSpace(n_sites)
    rng = np.random.default_rng(seed)
    ks = 2 * np.pi * np.arange(n_sites) / n_sites
    sz = space.sigma_z()
    res = {"k_kprime": 0.0, "k_k": 0.0, "z_plus": 0.0, "z_minus": 0.0}
    outside_span = []
    pairs = [(0, 0)] + [tuple(rng.integers(0, n_sites, size=2)) for _ in range(trials)]
    for i, j in pairs:
        k, kp = ks[i], ks[j]
        sp_k, sm_k, sm_kp = space.sigma_plus(k), space.sigma_minus(k), space.sigma_minus(kp)
        mixed = _comm(sp_k, sm_kp)
        res["k_kprime"] = max(res["k_kprime"], _max_abs(mixed - space.sigma_z_kk(k, kp)))
        res["k_k"] = max(res["k_k"], _max_abs(_comm(sp_k, sm_k) - sz))
        res["z_plus"] = max(res["z_plus"], _max_abs(_comm(sz, sp_k) - (2 / n_sites) * sp_k))
        res["z_minus"] = max(res["z_minus"], _max_abs(_comm(sz, sm_k) + (2 / n_sites) * sm_k))
        if i != j:
            # Hilbert-Schmidt projection of the mixed commutator onto sigma^z
            coeff = (sz.multiply(mixed.conj())).sum() / (sz.multiply(sz)).sum()
            rest = np.sqrt(abs((mixed - coeff * sz).multiply((mixed - coeff * sz).conj()).sum()))
            norm = np.sqrt(abs(mixed.multiply(mixed.conj()).sum()))
            outside_span.append(float(rest / norm))

    report = VerificationReport()
    report.add("[s+_k, s-_k'] = sz_kk'", res["k_kprime"], tol)
    report.add("[s+_k, s-_k] = sz", res["k_k"], tol)
    report.add("[sz, s+_k] = (2/N) s+_k", res["z_plus"], tol)
    report.add("[sz, s-_k] = -(2/N) s-_k", res["z_minus"], tol)

    j_plus = np.sqrt(n_sites) * space.sigma_plus(0.0)
    j_minus = j_plus.conj().T.tocsr()
    j_z = n_sites * sz / 2
    su2 = max(
        _max_abs(_comm(j_z, j_plus) - j_plus),
        _max_abs(_comm(j_z, j_minus) + j_minus),
        _max_abs(_comm(j_plus, j_minus) - 2 * j_z),
    )
    report.add("su(2) closure at k = 0", su2, tol)
    report.notes = {
        "n_sites": n_sites,
        "pairs": len(pairs),
        "mixed_commutator_fraction_outside_sz": min(outside_span) if outside_span else None,
    }
    return report


def bosonic_limit_check(n_sites: int, excitation_count: int) -> dict:
    """Deviation of ``<[sigma_k^-, sigma_k'^+]>`` from ``delta_kk'`` on a low-excitation state.

    The state is the normalised symmetric state ``(sigma_0^+)^m |G>``.
    Returns the largest diagonal deviation magnitude, its signed value at
    ``k = 0`` and the largest off-diagonal magnitude.
    """
    space = _SpinSpace(n_sites)
    if not 0 <= excitation_count <= n_sites:
        raise ValidationError("excitation_count must lie in 0..N")
    psi = np.zeros(space.dim, dtype=complex)
    psi[0] = 1.0  # |G>
    raise0 = space.sigma_plus(0.0)
    for _ in range(excitation_count):
        psi = raise0 @ psi
    psi = psi / np.linalg.norm(psi)
    ks = 2 * np.pi * np.arange(n_sites) / n_sites
    ops_p = [space.sigma_plus(k) for k in ks]
    ops_m = [op.conj().T.tocsr() for op in ops_p]
    diag, offdiag = [], 0.0
    for i in range(n_sites):
        for j in range(n_sites):
            comm = ops_m[i] @ (ops_p[j] @ psi) - ops_p[j] @ (ops_m[i] @ psi)
            value = np.vdot(psi, comm) - (1.0 if i == j else 0.0)
            if i == j:
                diag.append(value.real)
            else:
                offdiag = max(offdiag, abs(value))
    diag = np.array(diag)
    return {
        "n_sites": n_sites,
        "excitation_count": excitation_count,
        "diagonal_deviation": float(np.abs(diag).max()),
        "signed_deviation_k0": float(diag[0]),
        "offdiagonal_max": float(offdiag),
    }


def random_oracle_params(rng: np.random.Generator, n_sites: int) -> ModelParams:
    """Lossless parameters with ``g`` in ``[0, J]`` and ``|delta| <= 3 J``."""
    omega_a = rng.uniform(0.5, 2.5)
    return ModelParams(
        omega_c=omega_a + rng.uniform(-3.0, 3.0),
        omega_a=omega_a,
        g=rng.uniform(0.0, 1.0),
        n_sites=n_sites,
    )


def run_oracle_suite(n_sites: int, trials: int = 50, seed: int = 0, n_omega: int = 200, tol: float = 1e-10):
    """Compare exact diagonalisation against the analytic mean-field results at ``s_z = -1``.

    For ``trials`` random parameter sets this checks the ``2N`` sector
    eigenvalues against the analytic poles, the Lehmann photon and atom
    propagators against the closed forms on ``n_omega`` frequencies (with
    broadening equal to the grid spacing), and the Lehmann weights of
    ``a_k^dag|G>`` against ``(A_k, B_k)``.  Spin-algebra identities run too
    when ``N`` is small enough.
    """
    from .spectral import atom_gf, branch_amplitudes, photon_gf, poles_undamped

    rng = np.random.default_rng(seed)
    poles_err = gf_err = residue_err = 0.0
    for _ in range(trials):
        params = random_oracle_params(rng, n_sites)
        h = build_single_excitation_h(params)
        ks = build_k_grid(params).values
        plus, minus = poles_undamped(ks, params, -1.0)
        analytic = np.sort(np.concatenate([np.atleast_1d(plus), np.atleast_1d(minus)]).real)
        poles_err = max(poles_err, np.abs(np.sort(h.eigenvalues) - analytic).max())

        lo, hi = analytic.min() - 1.0, analytic.max() + 1.0
        omega = np.linspace(lo, hi, n_omega)
        eps = omega[1] - omega[0]
        for k in ks:
            gf_err = max(
                gf_err,
                np.abs(lehmann_photon_gf(h, k, omega, eps) - photon_gf(k, omega, params, -1.0, eps)).max(),
                np.abs(lehmann_atom_gf(h, k, omega, eps) - atom_gf(k, omega, params, -1.0, eps)).max(),
            )
            p, m = poles_undamped(k, params, -1.0)
            amp_a, amp_b = branch_amplitudes(k, params, -1.0)
            w_plus, w_minus = branch_weights(h, k, [p.real, m.real])
            residue_err = max(residue_err, abs(w_plus - amp_a.real), abs(w_minus - amp_b.real),
                              abs(w_plus + w_minus - 1.0))

    report = VerificationReport()
    report.add(f"sector eigenvalues = analytic poles (N={n_sites})", poles_err, tol)
    report.add(f"Lehmann GF = analytic GF (N={n_sites})", gf_err, tol)
    report.add(f"Lehmann weights = (A_k, B_k) (N={n_sites})", residue_err, tol)
    if n_sites <= SPIN_SPACE_CAP:
        algebra = verify_spin_algebra(n_sites, trials=min(trials, 50), seed=seed)
        report.checks.extend(algebra.checks)
        report.notes.update(algebra.notes)
    report.notes.update({"n_sites": n_sites, "trials": trials, "seed": seed})
    return report
