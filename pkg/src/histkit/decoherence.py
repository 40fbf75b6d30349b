"""Class operators, the decoherence functional and consistency checks.

Internally every probability-like quantity goes through the branch factor
``C_alpha S`` where ``S S^dagger = W``: then
``Tr[C_a W C_b^dagger]`` is the Frobenius inner product of two branch
factors, which is cheap and non-negative on the diagonal by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .histories import (
    ENUMERATION_CAP,
    Family,
    History,
    fine_indices,
)
from .linalg import (
    DEFAULT_TOL,
    ContractError,
    Tolerances,
    identity,
    require_density,
    sqrt_factor,
)

DENSE_LIMIT = 2000
_BLOCK = 512
_FACTOR_BUDGET = 4 * 10**6


@dataclass(frozen=True, eq=False)
class ClassOperator:
    history: History
    matrix: np.ndarray


def _check_history_fits(h: History, f: Family) -> None:
    if h.times != f.grid.slices:
        raise ContractError(f"history times {h.times} do not match the family grid {f.grid.slices}")
    for q in h.projectors:
        if q.shape != (f.dim, f.dim):
            raise ContractError(f"history projector shape {q.shape} does not match family dim {f.dim}")


def class_operator(h: History, f: Family) -> ClassOperator:
    """``Q_n U_n ... Q_1 U_1`` for history ``h`` evolving under ``f``'s dynamics."""
    _check_history_fits(h, f)
    c = identity(f.dim)
    for q, u in zip(h.projectors, f.unitaries):
        c = q @ (u @ c)
    return ClassOperator(h, c)


def _branch_tree(f: Family, s: np.ndarray) -> np.ndarray:
    """Branch factors ``C_alpha S`` for all fine histories, shape (N, dim, rank).

    Row order follows ``fine_indices`` (first slice varies slowest).
    """
    level = s[None, :, :]
    for d, u in zip(f.decomps, f.unitaries):
        evolved = np.einsum("ij,njk->nik", u, level)
        members = np.stack(d.members)
        level = np.einsum("mij,njk->nmik", members, evolved).reshape(-1, *s.shape)
    return level


def _branch_factor(f: Family, s: np.ndarray, idx: Sequence[int]) -> np.ndarray:
    x = s
    for d, u, k in zip(f.decomps, f.unitaries, idx):
        x = d.members[k] @ (u @ x)
    return x


@dataclass(eq=False)
class DecoherenceMatrix:
    """D(alpha; beta) = Tr[C_alpha W C_beta^dagger] over the fine histories of a family.

    Entries are held densely up to ``DENSE_LIMIT`` fine histories; beyond
    that they are computed on demand by :meth:`entry` and :meth:`row_block`.
    """

    family: Family
    initial_state: np.ndarray
    indices: list
    labels: list
    diagonal: np.ndarray
    _factors: np.ndarray | None = field(default=None, repr=False)
    _dense: np.ndarray | None = field(default=None, repr=False)
    _sqrt: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def dense(self) -> bool:
        return self._dense is not None

    @property
    def entries(self) -> np.ndarray:
        if self._dense is None:
            raise ContractError(
                f"{self.size} fine histories exceed the dense limit {DENSE_LIMIT}; use entry()/row_block()"
            )
        return self._dense

    def _factor(self, i: int) -> np.ndarray:
        if self._factors is not None:
            return self._factors[i]
        return _branch_factor(self.family, self._sqrt, self.indices[i]).ravel()

    def entry(self, i: int, j: int) -> complex:
        if self._dense is not None:
            return complex(self._dense[i, j])
        return complex(np.vdot(self._factor(j), self._factor(i)))

    def row_block(self, start: int, stop: int) -> np.ndarray:
        if self._dense is not None:
            return self._dense[start:stop]
        rows = np.stack([self._factor(i) for i in range(start, stop)])
        out = np.empty((stop - start, self.size), dtype=np.complex128)
        for c0 in range(0, self.size, _BLOCK):
            c1 = min(c0 + _BLOCK, self.size)
            cols = np.stack([self._factor(j) for j in range(c0, c1)])
            out[:, c0:c1] = rows @ cols.conj().T
        return out

    @property
    def trace_sum(self) -> float:
        return float(self.diagonal.sum())

    def probabilities(self) -> dict:
        return {lab: float(p) for lab, p in zip(self.labels, self.diagonal)}


def decoherence_functional(f: Family, w, tol: Tolerances = DEFAULT_TOL,
                           cap: int = ENUMERATION_CAP) -> DecoherenceMatrix:
    w = require_density(w, tol)
    if w.shape != (f.dim, f.dim):
        raise ContractError(f"density shape {w.shape} does not match family dim {f.dim}")
    idx = fine_indices(f, cap)
    labels = [f.fine_history(i).label for i in idx]
    s = sqrt_factor(w)
    n = len(idx)
    factors = None
    if n * s.size <= _FACTOR_BUDGET:
        factors = _branch_tree(f, s).reshape(n, -1)
        diag = np.einsum("ij,ij->i", factors.conj(), factors).real
    else:
        diag = np.array([np.linalg.norm(_branch_factor(f, s, i)) ** 2 for i in idx])
    d = DecoherenceMatrix(f, w, idx, labels, diag, factors, None, s)
    if n <= DENSE_LIMIT:
        d._dense = factors @ factors.conj().T if factors is not None else d.row_block(0, n)
    return d


def probability(h: History, f: Family, w, tol: Tolerances = DEFAULT_TOL) -> float:
    """Tr[C_h W C_h^dagger], clamped into [0, 1] within ``eps_prob``."""
    w = require_density(w, tol)
    c = class_operator(h, f).matrix
    p = float(np.real(np.trace(c @ w @ c.conj().T)))
    if -tol.eps_prob <= p < 0:
        p = 0.0
    if p > 1 + tol.eps_prob or p < 0:
        raise ContractError(f"history probability {p!r} outside [0, 1]")
    return p


@dataclass(frozen=True)
class ConsistencyReport:
    mode: str
    passed: bool
    worst_pair: tuple | None
    worst_raw: float
    worst_normalized: float
    degree: float
    trace_sum: float
    threshold: float

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "degree": self.degree,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "worst_raw": self.worst_raw,
            "worst_normalized": self.worst_normalized,
            "trace_sum": self.trace_sum,
            "threshold": self.threshold,
        }


def check_consistency(d: DecoherenceMatrix, mode: str = "medium",
                      tol: Tolerances = DEFAULT_TOL) -> ConsistencyReport:
    """Weak (real parts) or medium (full values) off-diagonal test.

    Off-diagonals are normalised by sqrt(D(a;a) D(b;b)); pairs where either
    branch has probability below ``eps_prob`` are skipped. ``degree`` is the
    largest normalised modulus, independent of the mode.
    """
    if mode not in ("weak", "medium"):
        raise ContractError(f"unknown consistency mode {mode!r}")
    diag = d.diagonal
    live = diag >= tol.eps_prob
    root = np.sqrt(np.clip(diag, 0.0, None))
    worst = (-1.0, 0.0, None)
    degree = 0.0
    for r0 in range(0, d.size, _BLOCK):
        r1 = min(r0 + _BLOCK, d.size)
        block = d.row_block(r0, r1)
        norm = np.maximum(np.outer(root[r0:r1], root), tol.eps_prob)
        mask = np.outer(live[r0:r1], live)
        rows = np.arange(r0, r1)
        mask[rows - r0, rows] = False
        if not mask.any():
            continue
        modulus = np.where(mask, np.abs(block) / norm, 0.0)
        degree = max(degree, float(modulus.max()))
        raw = np.abs(block.real) if mode == "weak" else np.abs(block)
        scaled = np.where(mask, raw / norm, -1.0)
        k = int(np.argmax(scaled))
        i, j = divmod(k, d.size)
        if scaled[i, j] > worst[0]:
            worst = (float(scaled[i, j]), float(raw[i, j]), (d.labels[r0 + i], d.labels[j]))
    worst_norm = max(worst[0], 0.0)
    return ConsistencyReport(
        mode=mode,
        passed=worst_norm <= tol.eps_decoherence,
        worst_pair=worst[2],
        worst_raw=worst[1],
        worst_normalized=worst_norm,
        degree=degree,
        trace_sum=d.trace_sum,
        threshold=tol.eps_decoherence,
    )


@dataclass(frozen=True)
class AdditivityReport:
    max_discrepancy: float
    location: dict | None
    checked: int
    total: int
    sampled: bool
    passed: bool
    discrepancies: list = field(default_factory=list, repr=False)

    def as_dict(self, top: int = 5) -> dict:
        worst = sorted(self.discrepancies, key=lambda r: -r["discrepancy"])[:top]
        return {
            "max_discrepancy": self.max_discrepancy,
            "location": self.location,
            "checked": self.checked,
            "total": self.total,
            "sampled": self.sampled,
            "passed": self.passed,
            "worst": worst,
        }


def additivity_audit(f: Family, w, tol: Tolerances = DEFAULT_TOL,
                     budget: int = 20000, seed: int = 0) -> AdditivityReport:
    """Compare p(two-member coarse history) with the sum of its two fine parts.

    Every slice, every member pair at that slice and every fine choice on the
    other slices is swept when the total fits ``budget``; otherwise ``budget``
    combinations are drawn at random with ``seed``.
    """
    w = require_density(w, tol)
    shape = f.shape
    combos = []
    for m, n_m in enumerate(shape):
        others = [range(k) for i, k in enumerate(shape) if i != m]
        n_other = int(np.prod([len(r) for r in others], dtype=object)) if others else 1
        combos.append((m, list(itertools.combinations(range(n_m), 2)), others, n_other))
    total = sum(len(pairs) * n_other for _, pairs, _, n_other in combos)
    sampled = total > budget

    def all_items():
        for m, pairs, others, _ in combos:
            for pair in pairs:
                for rest in itertools.product(*others):
                    yield m, pair, rest

    if sampled:
        rng = np.random.default_rng(seed)
        weights = np.array([len(p) * n for _, p, _, n in combos], dtype=float)
        items = []
        for _ in range(budget):
            ci = rng.choice(len(combos), p=weights / weights.sum())
            m, pairs, others, _ = combos[ci]
            pair = pairs[rng.integers(len(pairs))]
            rest = tuple(int(rng.integers(len(r))) for r in others)
            items.append((m, pair, rest))
    else:
        items = all_items()

    # p = ||C S||_F^2 with S S^dagger = W; cheap for low-rank states
    root = sqrt_factor(w)

    def weight(h):
        x = root
        for q, u in zip(h.projectors, f.unitaries):
            x = q @ (u @ x)
        return float(np.real(np.vdot(x, x)))

    fine_p: dict = {}

    def p_fine(idx):
        if idx not in fine_p:
            fine_p[idx] = weight(f.fine_history(idx))
        return fine_p[idx]

    records = []
    best = (-1.0, None)
    for m, (k, j), rest in items:
        rest = list(rest)
        masks, idx_k, idx_j = [], [], []
        for s, n_s in enumerate(shape):
            if s == m:
                mask = [0] * n_s
                mask[k] = mask[j] = 1
                idx_k.append(k)
                idx_j.append(j)
            else:
                choice = rest.pop(0)
                mask = [0] * n_s
                mask[choice] = 1
                idx_k.append(choice)
                idx_j.append(choice)
            masks.append(mask)
        h = f.history(masks)
        p_coarse = weight(h)
        gap = abs(p_coarse - p_fine(tuple(idx_k)) - p_fine(tuple(idx_j)))
        rec = {
            "slice": m + 1,
            "members": [f.decomps[m].labels[k], f.decomps[m].labels[j]],
            "history": h.label,
            "discrepancy": gap,
        }
        records.append(rec)
        if gap > best[0]:
            best = (gap, rec)
    max_gap = max(best[0], 0.0)
    return AdditivityReport(
        max_discrepancy=max_gap,
        location=best[1],
        checked=len(records),
        total=total,
        sampled=sampled,
        passed=max_gap <= 10 * tol.eps_decoherence,
        discrepancies=records,
    )


def density_from_vector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())

