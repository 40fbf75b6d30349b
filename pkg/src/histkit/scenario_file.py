"""JSON scenario documents: parsing with structural validation, and export.

Layout::

    {
      "name": "...", "description": "...", "dimension": 3,
      "state": {"vector": [...]} | {"density": <matrix>},
      "times": {"t0": 0.0},
      "dynamics": {"hamiltonian": <matrix>} | {"trivial": true},
      "decompositions": {
        "<name>": {"members": [{"label": "A", "projector": <matrix>}
                               | {"label": "B", "span": [<vector>, ...]}
                               | {"label": "C", "diagonal": [...]}],
                   "coarse": {"<mask name>": [1, 0, 1]}}},
      "families": {"<name>": {"slices": [1.0, 2.0], "decompositions": ["<name>", ...],
                              "dynamics": "global" | "trivial" | [<matrix>, ...]}},
      "queries": [...], "expected": [...]
    }

Matrices are lists of rows; an entry is a real number or an ``[re, im]``
pair. Floats are written with ``repr`` precision so that export followed by
parse reproduces every array bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .decoherence import density_from_vector
from .histories import Decomposition, Family, TimeGrid, validate_decomposition
from .linalg import (
    DEFAULT_TOL,
    ContractError,
    Tolerances,
    density_residuals,
    hermiticity_residual,
    span_projector,
    unitarity_residual,
)
from .queries import Scenario

FORMAT = "histkit-scenario"


class ScenarioError(ContractError):
    """A scenario document failed to parse or validate."""


def _entry(x, where):
    if isinstance(x, bool):
        raise ScenarioError(f"{where}: boolean is not a number")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ScenarioError(f"{where}: expected a number or [re, im], got {x!r}")


def parse_vector(v, where: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(v, list):
        raise ScenarioError(f"{where}: expected a list")
    out = np.array([_entry(x, f"{where}[{i}]") for i, x in enumerate(v)], dtype=np.complex128)
    if dim is not None and out.shape != (dim,):
        raise ScenarioError(f"{where}: length {len(out)}, expected {dim}")
    return out


def parse_matrix(m, where: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise ScenarioError(f"{where}: expected a list of rows")
    rows = [parse_vector(r, f"{where}[{i}]") for i, r in enumerate(m)]
    if len({len(r) for r in rows}) != 1 or len(rows[0]) != len(rows):
        raise ScenarioError(f"{where}: matrix is not square")
    out = np.array(rows, dtype=np.complex128)
    if dim is not None and out.shape != (dim, dim):
        raise ScenarioError(f"{where}: shape {out.shape}, expected {(dim, dim)}")
    if not np.all(np.isfinite(out)):
        raise ScenarioError(f"{where}: non-finite entries")
    return out


def _num(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def vector_literal(v) -> list:
    return [_num(z) for z in np.asarray(v).ravel()]


def matrix_literal(m) -> list:
    return [vector_literal(row) for row in np.asarray(m)]


def _require(doc: dict, key: str, where: str = "document"):
    if key not in doc:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return doc[key]


def _parse_member(m: dict, where: str, dim: int, tol: Tolerances):
    if not isinstance(m, dict) or "label" not in m:
        raise ScenarioError(f"{where}: member needs a label")
    kinds = [k for k in ("projector", "span", "diagonal") if k in m]
    if len(kinds) != 1:
        raise ScenarioError(f"{where}: give exactly one of projector, span, diagonal")
    if kinds[0] == "projector":
        p = parse_matrix(m["projector"], f"{where}.projector", dim)
    elif kinds[0] == "diagonal":
        p = np.diag(parse_vector(m["diagonal"], f"{where}.diagonal", dim)).astype(np.complex128)
    else:
        vecs = m["span"]
        if not isinstance(vecs, list):
            raise ScenarioError(f"{where}.span: expected a list of vectors")
        vecs = [parse_vector(v, f"{where}.span[{i}]", dim) for i, v in enumerate(vecs)]
        try:
            p = span_projector(vecs) if vecs else np.zeros((dim, dim), dtype=np.complex128)
        except ContractError as exc:
            raise ScenarioError(f"{where}.span: {exc}") from None
    return str(m["label"]), p


def parse_scenario(text: str, tol: Tolerances = DEFAULT_TOL) -> Scenario:
    """Parse and validate a scenario document (JSON text or an already-loaded dict)."""
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("document must be a JSON object")
    dim = _require(doc, "dimension")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ScenarioError(f"dimension: expected a positive integer, got {dim!r}")
    thr = tol.eps_structure

    state = _require(doc, "state")
    vector = None
    if isinstance(state, dict) and "vector" in state:
        vector = parse_vector(state["vector"], "state.vector", dim)
        if not np.linalg.norm(vector) > 0:
            raise ScenarioError("state.vector: zero vector")
        w = density_from_vector(vector)
    elif isinstance(state, dict) and "density" in state:
        w = parse_matrix(state["density"], "state.density", dim)
        r = density_residuals(w)
        bad = {k: v for k, v in (("hermiticity residual", r["hermiticity"]),
                                 ("negative eigenvalue", max(0.0, -r["min_eigenvalue"])),
                                 ("trace defect", r["trace_defect"])) if v > thr}
        if bad:
            desc = ", ".join(f"{k} {v:.3g}" for k, v in bad.items())
            raise ScenarioError(f"state.density: not a density operator: {desc} (threshold {thr:.3g})")
    else:
        raise ScenarioError("state: expected {\"vector\": ...} or {\"density\": ...}")

    t0 = float(doc.get("times", {}).get("t0", 0.0))
    dyn = doc.get("dynamics", {"trivial": True})
    hamiltonian = None
    if "hamiltonian" in dyn:
        hamiltonian = parse_matrix(dyn["hamiltonian"], "dynamics.hamiltonian", dim)
        res = hermiticity_residual(hamiltonian)
        if res > thr:
            raise ScenarioError(
                f"dynamics.hamiltonian: hermiticity residual {res:.3g} exceeds threshold {thr:.3g}")
    elif not dyn.get("trivial", False):
        raise ScenarioError("dynamics: expected {\"hamiltonian\": ...} or {\"trivial\": true}")

    decomps = {}
    for name, spec in _require(doc, "decompositions").items():
        where = f"decompositions.{name}"
        members = _require(spec, "members", where)
        if not isinstance(members, list) or not members:
            raise ScenarioError(f"{where}.members: expected a non-empty list")
        parsed = [_parse_member(m, f"{where}.members[{i}]", dim, tol) for i, m in enumerate(members)]
        coarse = {str(k): tuple(int(b) for b in v) for k, v in spec.get("coarse", {}).items()}
        try:
            d = Decomposition(tuple(p for _, p in parsed), tuple(lab for lab, _ in parsed), name, coarse)
        except ContractError as exc:
            raise ScenarioError(f"{where}: {exc}") from None
        rep = validate_decomposition(d, tol)
        if not rep.passed:
            raise ScenarioError(f"{where}: not an exhaustive exclusive decomposition: {rep.describe()}")
        decomps[name] = d

    families = {}
    for name, spec in _require(doc, "families").items():
        where = f"families.{name}"
        slices = tuple(float(t) for t in _require(spec, "slices", where))
        names = _require(spec, "decompositions", where)
        missing = [n for n in names if n not in decomps]
        if missing:
            raise ScenarioError(f"{where}: unknown decomposition {missing[0]!r}")
        try:
            grid = TimeGrid(slices, t0=t0)
        except ContractError as exc:
            raise ScenarioError(f"{where}.slices: {exc}") from None
        fdyn = spec.get("dynamics", "global")
        kw = {}
        if isinstance(fdyn, list):
            us = [parse_matrix(u, f"{where}.dynamics[{i}]", dim) for i, u in enumerate(fdyn)]
            for i, u in enumerate(us):
                res = unitarity_residual(u)
                if res > thr:
                    raise ScenarioError(
                        f"{where}.dynamics[{i}]: unitarity residual {res:.3g} exceeds threshold {thr:.3g}")
            kw["unitaries"] = us
        elif fdyn == "global":
            if hamiltonian is not None:
                kw["hamiltonian"] = hamiltonian
        elif fdyn != "trivial":
            raise ScenarioError(f"{where}.dynamics: expected 'global', 'trivial' or a list of unitaries")
        try:
            families[name] = Family(grid, tuple(decomps[n] for n in names), name=name, tol=tol, **kw)
        except ContractError as exc:
            raise ScenarioError(f"{where}: {exc}") from None

    try:
        return Scenario(str(doc.get("name", "scenario")), w, families, list(doc.get("queries", [])),
                        list(doc.get("expected", [])), str(doc.get("description", "")), vector)
    except ContractError as exc:
        raise ScenarioError(str(exc)) from None


def _member_literal(label: str, p: np.ndarray) -> dict:
    if np.count_nonzero(p - np.diag(np.diag(p))) == 0:
        return {"label": label, "diagonal": vector_literal(np.diag(p))}
    return {"label": label, "projector": matrix_literal(p)}


def scenario_document(s: Scenario) -> dict:
    """Plain-dict form of ``s``; inverse of :func:`parse_scenario`."""
    fams = list(s.families.values())
    t0s = {f.grid.t0 for f in fams}
    if len(t0s) != 1:
        raise ContractError("families with different start times cannot share one document")
    hams = [f.hamiltonian for f in fams if f.hamiltonian is not None]
    ham = hams[0] if hams else None
    if any(not np.array_equal(h, ham) for h in hams):
        raise ContractError("families with different hamiltonians cannot share one document")
    doc = {"format": FORMAT, "name": s.name, "description": s.description, "dimension": s.dim}
    if s.state_vector is not None:
        doc["state"] = {"vector": vector_literal(s.state_vector)}
    else:
        doc["state"] = {"density": matrix_literal(s.initial_state)}
    doc["times"] = {"t0": t0s.pop()}
    doc["dynamics"] = {"hamiltonian": matrix_literal(ham)} if ham is not None else {"trivial": True}
    doc["decompositions"] = {
        name: {"members": [_member_literal(lab, p) for lab, p in zip(d.labels, d.members)],
               "coarse": {k: list(v) for k, v in d.coarse.items()}}
        for name, d in s.decompositions().items()
    }
    families = {}
    eye = np.eye(s.dim)
    for name, f in s.families.items():
        entry = {"slices": list(f.grid.slices), "decompositions": [d.name for d in f.decomps]}
        if f.hamiltonian is not None:
            entry["dynamics"] = "global"
        elif all(np.array_equal(u, eye) for u in f.unitaries):
            entry["dynamics"] = "trivial"
        else:
            entry["dynamics"] = [matrix_literal(u) for u in f.unitaries]
        families[name] = entry
    doc["families"] = families
    doc["queries"] = s.queries
    doc["expected"] = s.expected
    return doc


def dump_scenario(s: Scenario) -> str:
    return json.dumps(scenario_document(s), indent=1) + "\n"
