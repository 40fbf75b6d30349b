"""Boolean connectives on one-time histories and probabilistic implication."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..decoherence import check_consistency, decoherence_functional, probability
from ..histories import CoarseProjector, Family, History, express_mask
from ..linalg import (
    DEFAULT_TOL,
    ContractError,
    Tolerances,
    as_matrix,
    check_projector,
    commutator_residual,
    idempotence_residual,
    identity,
)


class SingleFamilyViolation(ContractError):
    """Histories were combined or compared outside a single family."""


class IncommensurableError(SingleFamilyViolation):
    """Connective applied to projectors that do not commute."""


@dataclass(frozen=True, eq=False)
class OneTimeHistory:
    projector: np.ndarray
    time: float = 0.0
    label: str = ""
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        p = as_matrix(self.projector, "projector")
        object.__setattr__(self, "projector", p)
        if self.validate and not check_projector(p):
            raise ContractError(
                f"history {self.label!r} is not built on a projector "
                f"(idempotence residual {idempotence_residual(p):.3g})"
            )

    @property
    def dim(self) -> int:
        return self.projector.shape[0]


def _same_time(a: OneTimeHistory, b: OneTimeHistory) -> None:
    if a.time != b.time:
        raise ContractError(f"histories live at different times ({a.time} vs {b.time})")
    if a.dim != b.dim:
        raise ContractError(f"dimension mismatch: {a.dim} vs {b.dim}")


def combine(a: OneTimeHistory, b: OneTimeHistory, connective: str,
            tol: Tolerances = DEFAULT_TOL) -> OneTimeHistory:
    """Conjunction (``"and"``) or disjunction (``"or"``) of commuting histories."""
    _same_time(a, b)
    resid = commutator_residual(a.projector, b.projector)
    if resid > tol.eps_structure:
        raise IncommensurableError(
            f"{a.label or 'a'} and {b.label or 'b'} do not commute (residual {resid:.3g}); "
            "no single family contains both, so no connective is defined"
        )
    prod = a.projector @ b.projector
    if connective == "and":
        return OneTimeHistory(prod, a.time, f"({a.label} & {b.label})")
    if connective == "or":
        return OneTimeHistory(a.projector + b.projector - prod, a.time, f"({a.label} | {b.label})")
    raise ContractError(f"unknown connective {connective!r}")


def negate(a: OneTimeHistory) -> OneTimeHistory:
    return OneTimeHistory(identity(a.dim) - a.projector, a.time, f"~{a.label}")


def express(h, f: Family, tol: Tolerances = DEFAULT_TOL) -> History:
    """Rewrite ``h`` as a coarse-grained history of ``f``.

    Raises :class:`SingleFamilyViolation` when some slice projector is not a
    sum of members of ``f``'s decomposition at that time.
    """
    if isinstance(h, OneTimeHistory):
        if f.n_slices != 1 or f.grid.slices[0] != h.time:
            raise SingleFamilyViolation(
                f"one-time history {h.label!r} at t={h.time} does not belong to family {f.name!r}"
            )
        projectors, times = [h.projector], [h.time]
    else:
        projectors, times = h.projectors, list(h.times)
        if tuple(times) != f.grid.slices:
            raise SingleFamilyViolation(
                f"history times {tuple(times)} differ from the grid of family {f.name!r}"
            )
    masks = []
    for m, (q, d) in enumerate(zip(projectors, f.decomps)):
        mask = express_mask(q, d, tol)
        if mask is None:
            label = getattr(h, "label", "")
            raise SingleFamilyViolation(
                f"history {label!r}: the projector at slice {m + 1} is not a coarse-graining "
                f"of family {f.name!r}; it is not given any probability there"
            )
        masks.append(mask)
    return f.history(masks)


def conjunction(a, b, f: Family, tol: Tolerances = DEFAULT_TOL) -> History:
    """Slice-wise conjunction of two histories of the same family ``f``."""
    ha, hb = express(a, f, tol), express(b, f, tol)
    entries = []
    for (ca, t), (cb, _) in zip(ha.entries, hb.entries):
        mask = tuple(x & y for x, y in zip(ca.mask, cb.mask))
        entries.append((CoarseProjector(ca.decomposition, mask), t))
    return History(tuple(entries))


HOLDS, FAILS, UNDEFINED = "holds", "fails", "undefined"


@dataclass(frozen=True)
class Implication:
    verdict: str
    ratio: float | None
    p_a: float
    p_ab: float
    reason: str = ""

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "ratio": self.ratio, "p_a": self.p_a,
                "p_ab": self.p_ab, "reason": self.reason}


def implies(a, b, f: Family, w, tol: Tolerances = DEFAULT_TOL) -> Implication:
    """Whether ``a`` implies ``b`` inside the decoherent family ``f``.

    Holds iff p[a & b] / p[a] is within ``10 * eps_decoherence`` of one.
    Conditioning on a null event, or working in a family that fails medium
    decoherence, gives ``undefined``.
    """
    ab = conjunction(a, b, f, tol)
    ha = express(a, f, tol)
    p_a = probability(ha, f, w, tol)
    p_ab = probability(ab, f, w, tol)
    report = check_consistency(decoherence_functional(f, w, tol), "medium", tol)
    if not report.passed:
        return Implication(UNDEFINED, None, p_a, p_ab,
                           f"family {f.name!r} is not medium-decoherent (degree {report.degree:.3g})")
    if p_a <= tol.eps_prob:
        return Implication(UNDEFINED, None, p_a, p_ab, "the antecedent has zero probability")
    ratio = p_ab / p_a
    verdict = HOLDS if abs(ratio - 1.0) <= 10 * tol.eps_decoherence else FAILS
    return Implication(verdict, ratio, p_a, p_ab)
