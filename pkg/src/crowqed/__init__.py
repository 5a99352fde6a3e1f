"""Green-function theory of light propagation in an atom-doped coupled-resonator waveguide.

The package computes polariton dispersion, retarded Green functions,
transport quantities and the linear susceptibility of a ring of coupled
single-mode cavities, each holding two-level atoms, and checks the
mean-field results against exact diagonalisation.
"""

from .errors import (
    CrowqedError,
    ExceptionalPointError,
    IntegrationError,
    RegimeWarning,
    SingularSystemError,
    ValidationError,
)
from .model import (
    KGrid,
    ModelParams,
    PopulationProfile,
    RamanParams,
    bare_dispersion,
    build_k_grid,
    effective_coupling,
    kspace_inversion_matrix,
    mean_inversion,
)
from .spectral import (
    BranchDispersion,
    atom_gf,
    band_structure,
    branch_amplitudes,
    branch_dispersion,
    evaluate_gf,
    photon_gf,
    poles_damped,
    poles_undamped,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CrowqedError",
    "ExceptionalPointError",
    "IntegrationError",
    "RegimeWarning",
    "SingularSystemError",
    "ValidationError",
    "KGrid",
    "ModelParams",
    "PopulationProfile",
    "RamanParams",
    "bare_dispersion",
    "build_k_grid",
    "effective_coupling",
    "kspace_inversion_matrix",
    "mean_inversion",
    "BranchDispersion",
    "atom_gf",
    "band_structure",
    "branch_amplitudes",
    "branch_dispersion",
    "evaluate_gf",
    "photon_gf",
    "poles_damped",
    "poles_undamped",
]
