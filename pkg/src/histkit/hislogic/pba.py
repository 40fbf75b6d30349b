"""Context sets of one-time histories and their partial Boolean algebra.

A :class:`ContextSet` carries the projectors (deduplicated by matrix
equality, so the same history reached through different contexts is one
element) together with the maximal orthogonal decompositions among them.
The zero and identity histories always belong to the algebra; when they are
not listed as elements they act as the constants :data:`ZERO` and :data:`ONE`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import networkx as nx
import numpy as np

from ..linalg import DEFAULT_TOL, ContractError, Tolerances, identity, max_norm
from .connectives import OneTimeHistory

ZERO = -1
ONE = -2
CLOSURE_CAP = 10**5


class ClosureOverflow(RuntimeError):
    """Closing a set of histories produced more elements than allowed."""


@dataclass(frozen=True)
class Law:
    """One homomorphism requirement between element truth values.

    ``kind`` is ``"fixed"`` (args ``(i, value)``), ``"complement"``
    (``(i, c)``), ``"meet"``/``"join"`` (``(i, j, target)``) or ``"context"``
    (the member indices, exactly one of which is true). Targets may be the
    constants ``ZERO``/``ONE``.
    """

    kind: str
    args: tuple


@dataclass(frozen=True, eq=False)
class ContextSet:
    elements: tuple
    contexts: tuple
    dim: int
    tol: Tolerances = DEFAULT_TOL
    aliases: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.elements)

    @property
    def labels(self) -> list:
        return [e.label for e in self.elements]

    @cached_property
    def stack(self) -> np.ndarray:
        if not self.elements:
            return np.zeros((0, self.dim, self.dim), dtype=np.complex128)
        return np.stack([e.projector for e in self.elements])

    def index(self, key) -> int:
        """Element index from an index, a label or an alias."""
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < len(self):
                raise ContractError(f"element index {key} out of range")
            return int(key)
        if key in self.aliases:
            return self.aliases[key]
        labels = self.labels
        if key in labels:
            return labels.index(key)
        raise ContractError(f"unknown element {key!r}")

    def find(self, matrix) -> int | None:
        """Index of the element equal to ``matrix``, ``ZERO``/``ONE``, or ``None``."""
        eps = self.tol.eps_structure
        if len(self):
            diffs = np.abs(self.stack - matrix[None]).reshape(len(self), -1).max(axis=1)
            k = int(np.argmin(diffs))
            if diffs[k] <= eps:
                return k
        if max_norm(matrix) <= eps:
            return ZERO
        if max_norm(matrix - identity(self.dim)) <= eps:
            return ONE
        return None

    @cached_property
    def commensurable(self) -> np.ndarray:
        s = self.stack
        n = len(self)
        out = np.zeros((n, n), dtype=bool)
        for a in range(n):
            comm = s[a][None] @ s - s @ s[a][None]
            out[a] = np.abs(comm).reshape(n, -1).max(axis=1) <= self.tol.eps_structure
        return out

    @cached_property
    def laws(self) -> tuple:
        """Every homomorphism requirement expressible inside this set."""
        laws = []
        eye = identity(self.dim)
        s = self.stack
        for i, p in enumerate(s):
            if max_norm(p) <= self.tol.eps_structure:
                laws.append(Law("fixed", (i, 0)))
            elif max_norm(p - eye) <= self.tol.eps_structure:
                laws.append(Law("fixed", (i, 1)))
            c = self.find(eye - p)
            if c is not None:
                laws.append(Law("complement", (i, c)))
        comm = self.commensurable
        for i, j in itertools.combinations(range(len(self)), 2):
            if not comm[i, j]:
                continue
            meet = s[i] @ s[j]
            m = self.find(meet)
            if m is not None:
                laws.append(Law("meet", (i, j, m)))
            k = self.find(s[i] + s[j] - meet)
            if k is not None:
                laws.append(Law("join", (i, j, k)))
        for ctx in self.contexts:
            laws.append(Law("context", tuple(ctx)))
        return tuple(laws)

    def with_aliases(self, extra: dict) -> "ContextSet":
        aliases = dict(self.aliases)
        for name, key in extra.items():
            aliases[name] = self.index(key)
        return ContextSet(self.elements, self.contexts, self.dim, self.tol, aliases)


def _dedupe(elements: Sequence[OneTimeHistory], tol: Tolerances):
    kept: list = []
    aliases: dict = {}
    mapping = []
    for e in elements:
        hit = None
        for k, other in enumerate(kept):
            if max_norm(other.projector - e.projector) <= tol.eps_structure:
                hit = k
                break
        if hit is None:
            kept.append(e)
            hit = len(kept) - 1
        mapping.append(hit)
        if e.label:
            aliases.setdefault(e.label, hit)
    return kept, aliases, mapping


def validate_context(members: Sequence[np.ndarray], dim: int, tol: Tolerances) -> tuple[float, float]:
    """Completeness and pairwise orthogonality residuals of a context."""
    total = sum(members) if members else np.zeros((dim, dim))
    completeness = max_norm(total - identity(dim))
    ortho = 0.0
    for a, b in itertools.combinations(members, 2):
        ortho = max(ortho, max_norm(a @ b))
    return completeness, ortho


def make_context_set(elements: Sequence[OneTimeHistory], contexts: Sequence[Sequence[int]],
                     tol: Tolerances = DEFAULT_TOL, dim: int | None = None) -> ContextSet:
    """Deduplicate ``elements`` and attach ``contexts`` (indices into the input list)."""
    if dim is None:
        if not elements:
            raise ContractError("dimension is required for an empty context set")
        dim = elements[0].dim
    if any(e.dim != dim for e in elements):
        raise ContractError("all elements must share one dimension")
    kept, aliases, mapping = _dedupe(elements, tol)
    ctxs = []
    for n, ctx in enumerate(contexts):
        idx = tuple(mapping[i] for i in ctx)
        if len(set(idx)) != len(idx):
            raise ContractError(f"context {n} repeats an element")
        comp, ortho = validate_context([kept[i].projector for i in idx], dim, tol)
        if comp > tol.eps_structure or ortho > tol.eps_structure:
            raise ContractError(
                f"context {n} is not an orthogonal decomposition of the identity "
                f"(completeness {comp:.3g}, orthogonality {ortho:.3g}, threshold {tol.eps_structure:.3g})"
            )
        if tuple(sorted(idx)) not in {tuple(sorted(c)) for c in ctxs}:
            ctxs.append(idx)
    return ContextSet(tuple(kept), tuple(ctxs), dim, tol, aliases)


def find_decompositions(projectors: Sequence[np.ndarray], dim: int,
                        tol: Tolerances = DEFAULT_TOL) -> list[tuple]:
    """All finest orthogonal decompositions of the identity among ``projectors``.

    Decompositions are maximal cliques of the orthogonality graph of the
    nonzero projectors whose sum is the identity; those refined by another
    decomposition are dropped.
    """
    eye = identity(dim)
    nonzero = [i for i, p in enumerate(projectors) if max_norm(p) > tol.eps_structure]
    g = nx.Graph()
    g.add_nodes_from(nonzero)
    for i, j in itertools.combinations(nonzero, 2):
        if max_norm(projectors[i] @ projectors[j]) <= tol.eps_structure:
            g.add_edge(i, j)
    decs = []
    for clique in nx.find_cliques(g):
        total = sum(projectors[i] for i in clique)
        if max_norm(total - eye) <= tol.eps_structure:
            decs.append(tuple(sorted(clique)))

    def below(a, b):
        return max_norm(projectors[b] @ projectors[a] - projectors[a]) <= tol.eps_structure

    finest = []
    for d in decs:
        refined = any(other != d and all(any(below(a, b) for b in d) for a in other)
                      for other in decs)
        if not refined:
            finest.append(d)
    return sorted(finest)


def build_pba(elements: Sequence[OneTimeHistory], tol: Tolerances = DEFAULT_TOL,
              depth: int = 0, cap: int = CLOSURE_CAP, dim: int | None = None) -> ContextSet:
    """Close ``elements`` into a context set carrying a partial Boolean algebra.

    The default closure adds, for every decomposition found among the
    elements, all sums of its members (the Boolean algebra it generates),
    plus the complement of every element, zero and identity. Each extra
    ``depth`` round adds meets, joins and complements of commensurable pairs.
    """
    elements = list(elements)
    if elements:
        times = {e.time for e in elements}
        if len(times) != 1:
            raise ContractError(f"elements live at different times: {sorted(times)}")
        dim = elements[0].dim
        time = times.pop()
    elif dim is None:
        raise ContractError("dimension is required for an empty element list")
    else:
        time = 0.0
    base, aliases, _ = _dedupe(elements, tol)
    contexts = find_decompositions([e.projector for e in base], dim, tol)
    eye = identity(dim)

    pool = list(base)

    def add(matrix, label):
        if len(pool) > cap:
            raise ClosureOverflow(f"closure exceeds {cap} elements")
        for other in pool:
            if max_norm(other.projector - matrix) <= tol.eps_structure:
                return
        pool.append(OneTimeHistory(matrix, time, label))

    for ctx in contexts:
        if len(ctx) > 20:
            raise ClosureOverflow(f"a context with {len(ctx)} members generates too many elements")
        for r in range(2, len(ctx)):
            for sub in itertools.combinations(ctx, r):
                add(sum(base[i].projector for i in sub), "+".join(base[i].label for i in sub))
    add(np.zeros((dim, dim), dtype=np.complex128), "0")
    add(eye.copy(), "1")
    for e in list(pool):
        add(eye - e.projector, f"~{e.label}")
    for _ in range(depth):
        current = list(pool)
        for a, b in itertools.combinations(current, 2):
            pa, pb = a.projector, b.projector
            if max_norm(pa @ pb - pb @ pa) > tol.eps_structure:
                continue
            add(pa @ pb, f"({a.label} & {b.label})")
            add(pa + pb - pa @ pb, f"({a.label} | {b.label})")
        for e in list(pool):
            add(eye - e.projector, f"~{e.label}")
    if len(pool) > cap:
        raise ClosureOverflow(f"closure exceeds {cap} elements")
    return ContextSet(tuple(pool), tuple(contexts), dim, tol, aliases)


@dataclass(frozen=True)
class AxiomResult:
    passed: bool
    checked: int
    witness: tuple | None = None


@dataclass(frozen=True)
class PBAReport:
    axioms: dict
    carrier_size: int
    closed: bool

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.axioms.values())

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "carrier_size": self.carrier_size,
            "closed": self.closed,
            "axioms": {str(k): {"passed": r.passed, "checked": r.checked,
                                "witness": list(r.witness) if r.witness else None}
                       for k, r in self.axioms.items()},
        }


def verify_pba_axioms(c: ContextSet, tol: Tolerances = DEFAULT_TOL) -> PBAReport:
    """Check the nine partial-Boolean-algebra axioms on ``c`` plus 0 and 1.

    Meet, join and complement are evaluated as matrices; commensurability is
    commutation. Axioms over several elements are checked on every
    applicable (commensurable) pair or triple. ``closed`` reports whether
    every meet, join and complement of commensurable elements lands back in
    the carrier.
    """
    eps = tol.eps_structure
    dim = c.dim
    eye = identity(dim)
    zero = np.zeros((dim, dim), dtype=np.complex128)
    carrier = [e.projector for e in c.elements]
    names = [e.label or f"#{i}" for i, e in enumerate(c.elements)]
    for mat, name in ((zero, "0"), (eye, "1")):
        if c.find(mat) not in range(len(c)):
            carrier.append(mat)
            names.append(name)
    n = len(carrier)

    def eq(a, b):
        return max_norm(a - b) <= eps

    def rel(a, b):
        return max_norm(a @ b - b @ a) <= eps

    def meet(a, b):
        return a @ b

    def join(a, b):
        return a + b - a @ b

    def comp(a):
        return eye - a

    R = np.array([[rel(a, b) for b in carrier] for a in carrier], dtype=bool)
    results: dict = {}

    def run(axiom, cases):
        checked = 0
        for ok, witness in cases:
            checked += 1
            if not ok:
                results[axiom] = AxiomResult(False, checked, witness)
                return
        results[axiom] = AxiomResult(True, checked)

    run(1, ((R[i, i], (names[i],)) for i in range(n)))
    run(2, ((not R[i, j] or rel(carrier[j], carrier[i]), (names[i], names[j]))
            for i in range(n) for j in range(n)))
    run(3, ((rel(zero, carrier[i]) and rel(eye, carrier[i]), (names[i],)) for i in range(n)))
    run(4, ((rel(carrier[i], comp(carrier[j])), (names[i], names[j]))
            for i in range(n) for j in range(n) if R[i, j]))

    triples = [(i, j, k) for i in range(n) for j in range(n) for k in range(j, n)
               if R[i, j] and R[i, k] and R[j, k]]

    def ax5():
        for i, j, k in triples:
            x, y, z = carrier[i], carrier[j], carrier[k]
            yield rel(x, join(y, z)) and rel(x, meet(y, z)), (names[i], names[j], names[k])

    run(5, ax5())
    run(6, ((eq(join(x, x), x), (names[i],)) for i, x in enumerate(carrier)))
    run(7, ((eq(join(zero, x), x) and eq(join(x, zero), x) and eq(meet(eye, x), x)
             and eq(meet(x, eye), x), (names[i],)) for i, x in enumerate(carrier)))
    run(8, ((eq(meet(x, comp(x)), zero) and eq(join(x, comp(x)), eye), (names[i],))
            for i, x in enumerate(carrier)))

    def ax9():
        for i, j, k in triples:
            x, y, z = carrier[i], carrier[j], carrier[k]
            ok = (eq(meet(x, join(y, z)), join(meet(x, y), meet(x, z)))
                  and eq(join(x, meet(y, z)), meet(join(x, y), join(x, z))))
            yield ok, (names[i], names[j], names[k])

    run(9, ax9())

    def in_carrier(m):
        return any(eq(m, b) for b in carrier)

    closed = all(in_carrier(comp(a)) for a in carrier) and all(
        in_carrier(meet(carrier[i], carrier[j])) and in_carrier(join(carrier[i], carrier[j]))
        for i in range(n) for j in range(i + 1, n) if R[i, j]
    )
    return PBAReport(results, n, closed)


@dataclass(frozen=True)
class HomomorphismReport:
    passed: bool
    checked: int
    violations: list

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checked": self.checked, "violations": self.violations}


def law_value(values: Sequence[int], t: int) -> int:
    if t == ZERO:
        return 0
    if t == ONE:
        return 1
    return values[t]


def law_holds(law: Law, values: Sequence[int]) -> bool:
    v = lambda t: law_value(values, t)  # noqa: E731
    if law.kind == "fixed":
        i, val = law.args
        return v(i) == val
    if law.kind == "complement":
        i, c = law.args
        return v(c) == 1 - v(i)
    if law.kind == "meet":
        i, j, m = law.args
        return v(m) == (v(i) & v(j))
    if law.kind == "join":
        i, j, k = law.args
        return v(k) == (v(i) | v(j))
    if law.kind == "context":
        return sum(v(i) for i in law.args) == 1
    raise ContractError(f"unknown law kind {law.kind!r}")


def check_homomorphism(v, c: ContextSet, tol: Tolerances = DEFAULT_TOL) -> HomomorphismReport:
    """Check complement, meet and join preservation plus exactly one truth per context.

    Zero and identity are forced to 0 and 1. Commensurable images in
    ``{0, 1}`` are automatically commensurable, so that law needs no check.
    """
    values = v.values if hasattr(v, "values") else tuple(v)
    if len(values) != len(c) or any(x is None for x in values):
        raise ContractError("homomorphism check needs a complete valuation over every element")
    if any(x not in (0, 1) for x in values):
        raise ContractError("valuation entries must be 0 or 1")
    labels = c.labels

    def name(t):
        return "0" if t == ZERO else "1" if t == ONE else labels[t]

    violations = []
    for law in c.laws:
        if not law_holds(law, values):
            if law.kind == "fixed":
                items = [name(law.args[0])]
            else:
                items = [name(t) for t in law.args]
            violations.append({"law": law.kind, "elements": items})
    return HomomorphismReport(not violations, len(c.laws), violations)
