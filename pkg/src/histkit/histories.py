"""Time grids, projective decompositions, coarse-grainings, histories, families."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    ContractError,
    Tolerances,
    as_matrix,
    check_unitary,
    identity,
    max_norm,
    propagator,
    unitarity_residual,
)

ENUMERATION_CAP = 10**6


class EnumerationOverflow(RuntimeError):
    """The number of fine-grained histories exceeds the configured cap."""


@dataclass(frozen=True)
class TimeGrid:
    slices: tuple
    t0: float = 0.0

    def __post_init__(self):
        slices = tuple(float(t) for t in self.slices)
        object.__setattr__(self, "slices", slices)
        if not slices:
            raise ContractError("a time grid needs at least one slice")
        if any(b <= a for a, b in zip(slices, slices[1:])):
            raise ContractError(f"slice times must be strictly increasing: {slices}")
        if self.t0 > slices[0]:
            raise ContractError(f"t0={self.t0} lies after the first slice {slices[0]}")

    def __len__(self):
        return len(self.slices)

    def intervals(self) -> list[float]:
        times = (self.t0,) + self.slices
        return [b - a for a, b in zip(times, times[1:])]


@dataclass(frozen=True, eq=False)
class Decomposition:
    """An exhaustive, exclusive set of projectors with stable labels."""

    members: tuple
    labels: tuple = ()
    name: str = ""
    coarse: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.members) == 0:
            raise ContractError("a decomposition needs at least one member")
        members = tuple(as_matrix(m, "decomposition member") for m in self.members)
        dims = {m.shape for m in members}
        if len(dims) != 1:
            raise ContractError(f"decomposition members differ in shape: {sorted(dims)}")
        labels = tuple(self.labels) or tuple(f"P{k}" for k in range(len(members)))
        if len(labels) != len(members):
            raise ContractError("one label per decomposition member is required")
        if len(set(labels)) != len(labels):
            raise ContractError(f"duplicate member labels: {labels}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "labels", labels)
        for cname, cmask in self.coarse.items():
            if len(cmask) != len(members):
                raise ContractError(f"named mask {cname!r} has wrong length")

    @property
    def dim(self) -> int:
        return self.members[0].shape[0]

    def __len__(self):
        return len(self.members)

    def mask_for(self, labels: Sequence[str]) -> tuple:
        """Mask selecting the given member labels or named coarse masks."""
        mask = [0] * len(self)
        for lab in labels:
            if lab in self.labels:
                mask[self.labels.index(lab)] = 1
            elif lab in self.coarse:
                mask = [a | b for a, b in zip(mask, self.coarse[lab])]
            else:
                raise ContractError(f"unknown member label {lab!r} in decomposition {self.name!r}")
        return tuple(mask)


@dataclass(frozen=True)
class DecompositionReport:
    passed: bool
    completeness_residual: float
    orthogonality_residual: float
    threshold: float

    def describe(self) -> str:
        return (f"completeness residual {self.completeness_residual:.3g}, "
                f"orthogonality residual {self.orthogonality_residual:.3g}, "
                f"threshold {self.threshold:.3g}")


def validate_decomposition(d: Decomposition, tol: Tolerances = DEFAULT_TOL) -> DecompositionReport:
    members = d.members
    total = sum(members)
    completeness = max_norm(total - identity(d.dim))
    ortho = 0.0
    for k, j in itertools.product(range(len(members)), repeat=2):
        target = members[k] if k == j else 0.0
        ortho = max(ortho, max_norm(members[k] @ members[j] - target))
    passed = completeness <= tol.eps_structure and ortho <= tol.eps_structure
    return DecompositionReport(passed, completeness, ortho, tol.eps_structure)


def coarse_projector(d: Decomposition, mask: Sequence[int]) -> np.ndarray:
    mask = tuple(int(b) for b in mask)
    if len(mask) != len(d):
        raise ContractError(f"mask length {len(mask)} != member count {len(d)}")
    if any(b not in (0, 1) for b in mask):
        raise ContractError(f"mask entries must be 0 or 1: {mask}")
    out = np.zeros((d.dim, d.dim), dtype=np.complex128)
    for bit, p in zip(mask, d.members):
        if bit:
            out = out + p
    return out


@dataclass(frozen=True, eq=False)
class CoarseProjector:
    decomposition: Decomposition
    mask: tuple

    def __post_init__(self):
        mask = tuple(int(b) for b in self.mask)
        if len(mask) != len(self.decomposition):
            raise ContractError(f"mask length {len(mask)} != member count {len(self.decomposition)}")
        object.__setattr__(self, "mask", mask)

    @property
    def matrix(self) -> np.ndarray:
        return coarse_projector(self.decomposition, self.mask)

    @property
    def label(self) -> str:
        on = [lab for bit, lab in zip(self.mask, self.decomposition.labels) if bit]
        if not on:
            return "0"
        if len(on) == len(self.mask):
            return "1"
        return "+".join(on)


@dataclass(frozen=True, eq=False)
class History:
    """One (coarse projector, time) pair per slice of a grid."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        times = [t for _, t in entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ContractError("history entries must be ordered by time")
        object.__setattr__(self, "entries", entries)

    @property
    def times(self) -> tuple:
        return tuple(t for _, t in self.entries)

    @property
    def masks(self) -> tuple:
        return tuple(cp.mask for cp, _ in self.entries)

    @property
    def projectors(self) -> list:
        return [cp.matrix for cp, _ in self.entries]

    @property
    def label(self) -> str:
        return "&".join(cp.label for cp, _ in self.entries)

    @property
    def mask_spec(self) -> str:
        return ";".join(f"@{m + 1}:" + "".join(map(str, cp.mask))
                        for m, (cp, _) in enumerate(self.entries))

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class Family:
    """A time grid, one decomposition per slice and the interval dynamics.

    ``unitaries[m]`` evolves from the previous time (``t0`` for ``m = 0``)
    to slice ``m``. Give either explicit unitaries or a Hermitian
    ``hamiltonian``; with neither the dynamics are trivial.
    """

    grid: TimeGrid
    decomps: tuple
    unitaries: tuple | None = None
    hamiltonian: np.ndarray | None = None
    name: str = ""
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        decomps = tuple(self.decomps)
        object.__setattr__(self, "decomps", decomps)
        if len(decomps) != len(self.grid):
            raise ContractError(
                f"family {self.name!r}: {len(decomps)} decompositions for {len(self.grid)} slices"
            )
        dims = {d.dim for d in decomps}
        if len(dims) != 1:
            raise ContractError(f"family {self.name!r}: decompositions differ in dimension {sorted(dims)}")
        for m, d in enumerate(decomps):
            rep = validate_decomposition(d, self.tol)
            if not rep.passed:
                raise ContractError(
                    f"family {self.name!r}: decomposition {d.name or m} at slice {m + 1} "
                    f"is not exhaustive and exclusive ({rep.describe()})"
                )
        dim = dims.pop()
        if self.unitaries is not None and self.hamiltonian is not None:
            raise ContractError("give either unitaries or a hamiltonian, not both")
        if self.hamiltonian is not None:
            h = as_matrix(self.hamiltonian, "hamiltonian")
            us = tuple(propagator(h, dt, self.tol) for dt in self.grid.intervals())
        elif self.unitaries is not None:
            us = tuple(as_matrix(u, "unitary") for u in self.unitaries)
            if len(us) != len(self.grid):
                raise ContractError(f"{len(us)} unitaries for {len(self.grid)} intervals")
        else:
            us = tuple(identity(dim) for _ in self.grid.slices)
        for m, u in enumerate(us):
            if u.shape != (dim, dim):
                raise ContractError(f"unitary {m + 1} has shape {u.shape}, expected {(dim, dim)}")
            if not check_unitary(u, self.tol):
                raise ContractError(
                    f"unitary {m + 1} fails unitarity: residual {unitarity_residual(u):.3g} "
                    f"> {self.tol.eps_structure:.3g}"
                )
        object.__setattr__(self, "unitaries", us)

    @property
    def dim(self) -> int:
        return self.decomps[0].dim

    @property
    def n_slices(self) -> int:
        return len(self.grid)

    @property
    def shape(self) -> tuple:
        return tuple(len(d) for d in self.decomps)

    def history(self, masks: Sequence[Sequence[int] | None]) -> History:
        """History with the given mask per slice; ``None`` means the identity."""
        if len(masks) != self.n_slices:
            raise ContractError(f"{len(masks)} masks for {self.n_slices} slices")
        entries = []
        for d, t, mask in zip(self.decomps, self.grid.slices, masks):
            if mask is None:
                mask = (1,) * len(d)
            entries.append((CoarseProjector(d, tuple(mask)), t))
        return History(tuple(entries))

    def fine_history(self, indices: Sequence[int]) -> History:
        masks = []
        for d, k in zip(self.decomps, indices):
            mask = [0] * len(d)
            mask[k] = 1
            masks.append(mask)
        return self.history(masks)

    def identity_history(self) -> History:
        return self.history([None] * self.n_slices)


def fine_count(f: Family) -> int:
    return int(np.prod(f.shape, dtype=object))


def fine_indices(f: Family, cap: int = ENUMERATION_CAP) -> list[tuple]:
    n = fine_count(f)
    if n > cap:
        raise EnumerationOverflow(f"{n} fine-grained histories exceed the cap of {cap}")
    return list(itertools.product(*(range(k) for k in f.shape)))


def enumerate_fine(f: Family, cap: int = ENUMERATION_CAP) -> Iterator[History]:
    """All fine-grained histories, last slice varying fastest."""
    for idx in fine_indices(f, cap):
        yield f.fine_history(idx)


def same_history(h1: History, h2: History, tol: Tolerances = DEFAULT_TOL) -> bool:
    if h1.times != h2.times:
        return False
    for p, q in zip(h1.projectors, h2.projectors):
        if p.shape != q.shape or max_norm(p - q) > tol.eps_structure:
            return False
    return True


def express_mask(q: np.ndarray, d: Decomposition, tol: Tolerances = DEFAULT_TOL) -> tuple | None:
    """Mask of ``d`` whose coarse projector equals ``q``, or ``None``."""
    if q.shape != (d.dim, d.dim):
        return None
    mask = []
    for p in d.members:
        qp = q @ p
        if max_norm(qp - p) <= tol.eps_structure:
            mask.append(1)
        elif max_norm(qp) <= tol.eps_structure:
            mask.append(0)
        else:
            return None
    if max_norm(coarse_projector(d, mask) - q) > tol.eps_structure:
        return None
    return tuple(mask)
