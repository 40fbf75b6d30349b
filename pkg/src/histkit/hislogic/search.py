"""Truth propagation and the search for two-valued homomorphisms.

The homomorphism laws of a :class:`ContextSet` are compiled to clauses over
boolean element variables; propagation is plain unit propagation on them.
Exhaustive enumeration evaluates the laws directly and serves as the oracle
for the backtracking search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..linalg import ContractError
from .pba import ONE, ZERO, ContextSet, Law

EXHAUSTIVE_CAP = 30
_ROW_CAP = 1 << 24


@dataclass(frozen=True)
class Valuation:
    """Truth values per element index; ``None`` marks an unassigned element."""

    values: tuple

    @property
    def complete(self) -> bool:
        return all(v is not None for v in self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    def get(self, c: ContextSet, key):
        return self.values[c.index(key)]

    def as_dict(self, c: ContextSet) -> dict:
        return {lab: v for lab, v in zip(c.labels, self.values) if v is not None}

    @classmethod
    def from_mapping(cls, c: ContextSet, mapping: Mapping) -> "Valuation":
        values = [None] * len(c)
        for key, v in mapping.items():
            values[c.index(key)] = int(v)
        return cls(tuple(values))


def _literal_clauses(law: Law):
    """Clauses for one law as lists of (element, required value) pairs."""
    k, a = law.kind, law.args
    if k == "fixed":
        return [[(a[0], a[1])]]
    if k == "complement":
        i, c = a
        return [[(i, 1), (c, 1)], [(i, 0), (c, 0)]]
    if k == "meet":
        i, j, m = a
        return [[(m, 0), (i, 1)], [(m, 0), (j, 1)], [(m, 1), (i, 0), (j, 0)]]
    if k == "join":
        i, j, t = a
        return [[(t, 1), (i, 0)], [(t, 1), (j, 0)], [(t, 0), (i, 1), (j, 1)]]
    if k == "context":
        out = [[(i, 1) for i in a]]
        out += [[(a[p], 0), (a[q], 0)] for p in range(len(a)) for q in range(p + 1, len(a))]
        return out
    raise ContractError(f"unknown law kind {k!r}")


@dataclass
class _Compiled:
    n: int
    clauses: list
    origins: list
    watch: list
    units: list = field(default_factory=list)
    empty: int | None = None


def _compile(c: ContextSet) -> _Compiled:
    n = len(c)
    clauses, origins, seen = [], [], set()
    empty = None
    # context laws first, so clauses they share with meets are credited to them
    ranked = sorted(enumerate(c.laws), key=lambda item: item[1].kind != "context")
    for li, law in ranked:
        for raw in _literal_clauses(law):
            lits = []
            satisfied = False
            for var, val in raw:
                if var in (ZERO, ONE):
                    const = 0 if var == ZERO else 1
                    if const == val:
                        satisfied = True
                        break
                    continue
                lits.append((var, val))
            if satisfied:
                continue
            key = frozenset(lits)
            if key in seen:
                continue
            seen.add(key)
            if not lits and empty is None:
                empty = li
            clauses.append(tuple(lits))
            origins.append(li)
    watch = [[] for _ in range(n)]
    # context clauses first so conflicts are reported against a context
    order = sorted(range(len(clauses)), key=lambda k: c.laws[origins[k]].kind != "context")
    for k in order:
        for var, _ in clauses[k]:
            watch[var].append(k)
    units = [k for k, cl in enumerate(clauses) if len(cl) == 1]
    return _Compiled(n, clauses, origins, watch, units, empty)


class _State:
    def __init__(self, comp: _Compiled):
        self.comp = comp
        self.vals = [-1] * comp.n
        self.reason: list = [None] * comp.n
        self.trail: list = []

    def assign(self, var: int, val: int) -> int | None:
        """Assign and propagate; return the conflicting clause index or ``None``.

        A clash with an already forced value reports the clause that forced
        it, or ``-1`` when the earlier value was itself a decision.
        """
        vals = self.vals
        if vals[var] != -1:
            if vals[var] == val:
                return None
            return -1 if self.reason[var] is None else self.reason[var]
        vals[var] = val
        self.reason[var] = None
        self.trail.append(var)
        queue = [var]
        clauses, watch = self.comp.clauses, self.comp.watch
        while queue:
            v = queue.pop()
            for k in watch[v]:
                free = None
                n_free = 0
                sat = False
                for x, want in clauses[k]:
                    cur = vals[x]
                    if cur == want:
                        sat = True
                        break
                    if cur == -1:
                        n_free += 1
                        free = (x, want)
                if sat:
                    continue
                if n_free == 0:
                    return k
                if n_free == 1:
                    x, want = free
                    vals[x] = want
                    self.reason[x] = k
                    self.trail.append(x)
                    queue.append(x)
        return None

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            self.vals[self.trail.pop()] = -1

    def valuation(self) -> Valuation:
        return Valuation(tuple(None if v == -1 else v for v in self.vals))


def _witness(c: ContextSet, comp: _Compiled, k: int, seeds_clash: tuple | None = None) -> dict:
    if k == -1:
        return {"law": "seed", "elements": list(seeds_clash or ())}
    law = c.laws[comp.origins[k]]
    labels = c.labels

    def name(t):
        return "0" if t == ZERO else "1" if t == ONE else labels[t]

    args = law.args[:1] if law.kind == "fixed" else law.args
    out = {"law": law.kind, "elements": [name(t) for t in args]}
    if law.kind == "context":
        out["context"] = c.contexts.index(law.args)
    return out


@dataclass(frozen=True)
class PropagationResult:
    forced: Valuation | None
    conflict: dict | None

    @property
    def ok(self) -> bool:
        return self.conflict is None


def _root_state(c: ContextSet, comp: _Compiled):
    st = _State(comp)
    if comp.empty is not None:
        law = c.laws[comp.empty]
        return st, {"law": law.kind, "elements": [str(a) for a in law.args]}
    for k in comp.units:
        var, val = comp.clauses[k][0]
        bad = st.assign(var, val)
        if bad is not None:
            return st, _witness(c, comp, bad if bad != -1 else k)
    return st, None


def propagate_truth(seeds, c: ContextSet) -> PropagationResult:
    """Close ``seeds`` under unit propagation of the homomorphism laws.

    ``seeds`` maps element keys (index, label or alias) to 0/1, or is a
    partial :class:`Valuation`. Returns the forced partial valuation, or the
    first violated law (a context, when one is involved) as the conflict.
    """
    if isinstance(seeds, Valuation):
        items = [(i, v) for i, v in enumerate(seeds.values) if v is not None]
    else:
        items = [(c.index(k), int(v)) for k, v in dict(seeds).items()]
    comp = _compile(c)
    st, conflict = _root_state(c, comp)
    if conflict is not None:
        return PropagationResult(None, conflict)
    for i, v in items:
        if v not in (0, 1):
            raise ContractError(f"seed values must be 0 or 1, got {v!r}")
        bad = st.assign(i, v)
        if bad is not None:
            return PropagationResult(None, _witness(c, comp, bad, (c.labels[i],)))
    return PropagationResult(st.valuation(), None)


@dataclass(frozen=True)
class SearchResult:
    sat: bool
    valuation: Valuation | None
    solutions: list | None
    stats: dict

    def as_dict(self, c: ContextSet | None = None) -> dict:
        out = {"sat": self.sat, "stats": self.stats}
        if self.valuation is not None:
            out["valuation"] = (self.valuation.as_dict(c) if c is not None
                                else list(self.valuation.values))
        if self.solutions is not None:
            out["solution_count"] = len(self.solutions)
        return out


def search_valuation(c: ContextSet, mode: str = "backtracking", seed: int | None = None,
                     enumerate_all: bool = False) -> SearchResult:
    """Look for a two-valued homomorphism on ``c``.

    Backtracking branches on the lowest-index unassigned element, trying 1
    first, with propagation at every decision; ``seed`` switches to a random
    branching order. ``enumerate_all`` collects every solution. Exhaustive
    mode enumerates all assignments (with pruning on fully assigned laws)
    and always returns the full solution list.
    """
    if mode == "exhaustive":
        return _exhaustive(c)
    if mode != "backtracking":
        raise ContractError(f"unknown search mode {mode!r}")
    start = time.perf_counter()
    n = len(c)
    order = list(range(n)) if seed is None else [int(i) for i in np.random.default_rng(seed).permutation(n)]
    comp = _compile(c)
    st, conflict = _root_state(c, comp)
    stats = {"mode": mode, "seed": seed, "nodes": 1, "max_depth": 0, "conflicts": 0}
    solutions: list = []
    if conflict is None:
        _dfs(st, order, 0, stats, solutions, enumerate_all)
    else:
        stats["conflicts"] += 1
    stats["elapsed_s"] = time.perf_counter() - start
    sat = bool(solutions)
    return SearchResult(sat, solutions[0] if sat else None,
                        solutions if enumerate_all else None, stats)


def _dfs(st: _State, order, depth, stats, solutions, enumerate_all) -> bool:
    stats["max_depth"] = max(stats["max_depth"], depth)
    var = next((i for i in order if st.vals[i] == -1), None)
    if var is None:
        solutions.append(st.valuation())
        return not enumerate_all
    for val in (1, 0):
        mark = len(st.trail)
        stats["nodes"] += 1
        bad = st.assign(var, val)
        if bad is None:
            if _dfs(st, order, depth + 1, stats, solutions, enumerate_all):
                return True
        else:
            stats["conflicts"] += 1
        st.undo(mark)
    return False


def _law_columns(rows: np.ndarray, t: int) -> np.ndarray:
    if t == ZERO:
        return np.zeros(len(rows), dtype=np.int8)
    if t == ONE:
        return np.ones(len(rows), dtype=np.int8)
    return rows[:, t]


def _law_mask(law: Law, rows: np.ndarray) -> np.ndarray:
    col = lambda t: _law_columns(rows, t)  # noqa: E731
    k, a = law.kind, law.args
    if k == "fixed":
        return col(a[0]) == a[1]
    if k == "complement":
        return col(a[1]) == 1 - col(a[0])
    if k == "meet":
        return col(a[2]) == (col(a[0]) & col(a[1]))
    if k == "join":
        return col(a[2]) == (col(a[0]) | col(a[1]))
    if k == "context":
        return sum(col(i).astype(np.int16) for i in a) == 1
    raise ContractError(f"unknown law kind {k!r}")


def _exhaustive(c: ContextSet) -> SearchResult:
    n = len(c)
    if n > EXHAUSTIVE_CAP:
        raise ContractError(f"exhaustive mode is limited to {EXHAUSTIVE_CAP} elements, got {n}")
    start = time.perf_counter()
    by_last: list = [[] for _ in range(max(n, 1))]
    constant_laws = []
    for law in c.laws:
        vars_ = [t for t in (law.args[:1] if law.kind == "fixed" else law.args) if t >= 0]
        if vars_:
            by_last[max(vars_)].append(law)
        else:
            constant_laws.append(law)
    rows = np.zeros((1, 0), dtype=np.int8)
    if any(not _law_mask(law, rows).all() for law in constant_laws):
        rows = rows[:0]
    examined = 0
    for var in range(n):
        ones = np.concatenate([rows, np.ones((len(rows), 1), dtype=np.int8)], axis=1)
        zeros = np.concatenate([rows, np.zeros((len(rows), 1), dtype=np.int8)], axis=1)
        rows = np.concatenate([ones, zeros], axis=0)
        if len(rows) > _ROW_CAP:
            raise ContractError(f"exhaustive enumeration exceeded {_ROW_CAP} partial assignments")
        examined += len(rows)
        keep = np.ones(len(rows), dtype=bool)
        for law in by_last[var]:
            keep &= _law_mask(law, rows)
        rows = rows[keep]
    if len(rows):
        # descending lexicographic order, 1 before 0
        keys = [rows[:, i] for i in range(n - 1, -1, -1)]
        rows = rows[np.lexsort(keys)[::-1]] if n else rows
    solutions = [Valuation(tuple(int(x) for x in r)) for r in rows]
    stats = {"mode": "exhaustive", "assignments_examined": examined,
             "solutions": len(solutions), "elapsed_s": time.perf_counter() - start}
    return SearchResult(bool(solutions), solutions[0] if solutions else None, solutions, stats)
