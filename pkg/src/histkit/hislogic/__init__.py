"""Boolean structure of one-time histories and two-valued truth assignments."""

from .connectives import (
    FAILS,
    HOLDS,
    UNDEFINED,
    Implication,
    IncommensurableError,
    OneTimeHistory,
    SingleFamilyViolation,
    combine,
    conjunction,
    express,
    implies,
    negate,
)
from .pba import (
    ONE,
    ZERO,
    ClosureOverflow,
    ContextSet,
    HomomorphismReport,
    Law,
    PBAReport,
    build_pba,
    check_homomorphism,
    find_decompositions,
    make_context_set,
    verify_pba_axioms,
)
from .rays import RayFileError, dump_rays, load_rays, parse_rays
from .search import (
    PropagationResult,
    SearchResult,
    Valuation,
    propagate_truth,
    search_valuation,
)
