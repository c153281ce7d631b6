"""Genuine multipartite nonlocality of permutation-invariant Gaussian states.

Displaced-parity and pseudospin Svetlichny tests for symmetric n-mode
Gaussian states, with scikit-learn style wrappers and a ``svlab`` CLI.
"""
__version__ = "0.1.0"

from .gaussian import (
    DomainError,
    SingularCovarianceError,
    SymmetricGaussianState,
    a_from_squeezing,
    build_covariance,
    check_physical,
    coupling_terms,
    purity,
    symplectic_eigenvalues,
    symplectic_form,
    wigner,
)
from .svetlichny import (
    FullCorrelationTable,
    SymmetricCorrelations,
    coefficient,
    coefficients,
    quantum_bound,
    svetlichny_general,
    svetlichny_symmetric,
)
from .parity import (
    ParityOptimum,
    ParitySettings,
    correlation_Emn,
    optimize_settings,
    scan_vs_a,
    svetlichny_parity,
    threshold,
)
from .pseudospin import (
    PseudospinSettingSet,
    TruncatedTripartiteState,
    ghz_state_fock,
    optimize_pseudospin_settings,
    residual_norm,
    shell_term_f,
    svetlichny_fixed_settings,
    svetlichny_pseudospin,
)
from .estimators import ParitySvetlichnyOptimizer, PowerLawRegressor, PseudospinSvetlichnyOptimizer

__all__ = [
    "__version__",
    "DomainError",
    "SingularCovarianceError",
    "SymmetricGaussianState",
    "a_from_squeezing",
    "build_covariance",
    "check_physical",
    "coupling_terms",
    "purity",
    "symplectic_eigenvalues",
    "symplectic_form",
    "wigner",
    "FullCorrelationTable",
    "SymmetricCorrelations",
    "coefficient",
    "coefficients",
    "quantum_bound",
    "svetlichny_general",
    "svetlichny_symmetric",
    "ParityOptimum",
    "ParitySettings",
    "correlation_Emn",
    "optimize_settings",
    "scan_vs_a",
    "svetlichny_parity",
    "threshold",
    "PseudospinSettingSet",
    "TruncatedTripartiteState",
    "ghz_state_fock",
    "optimize_pseudospin_settings",
    "residual_norm",
    "shell_term_f",
    "svetlichny_fixed_settings",
    "svetlichny_pseudospin",
    "ParitySvetlichnyOptimizer",
    "PowerLawRegressor",
    "PseudospinSvetlichnyOptimizer",
]
