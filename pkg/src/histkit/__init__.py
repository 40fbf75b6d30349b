"""Consistent histories: families, decoherence functionals and history logic."""

from .decoherence import (
    additivity_audit,
    check_consistency,
    class_operator,
    decoherence_functional,
    probability,
)
from .hislogic import (
    IncommensurableError,
    SingleFamilyViolation,
    build_pba,
    check_homomorphism,
    implies,
    load_rays,
    propagate_truth,
    search_valuation,
    verify_pba_axioms,
)
from .histories import Decomposition, Family, History, TimeGrid, enumerate_fine
from .linalg import DEFAULT_TOL, ContractError, Tolerances

__version__ = "0.1.0"
