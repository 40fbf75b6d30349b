"""Scenario container, mask-spec parsing and the query engine.

Queries are plain dicts so that scenarios round-trip through files; each
returns a JSON-ready dict. Expectations compare a dotted path in a query
result against a value.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .decoherence import (
    additivity_audit,
    check_consistency,
    decoherence_functional,
    probability,
)
from .hislogic import (
    OneTimeHistory,
    SingleFamilyViolation,
    build_pba,
    conjunction,
    implies,
    propagate_truth,
    search_valuation,
    verify_pba_axioms,
)
from .histories import Family, History, same_history
from .linalg import DEFAULT_TOL, ContractError, Tolerances, check_density, identity, max_norm


@dataclass(eq=False)
class Scenario:
    name: str
    initial_state: np.ndarray
    families: dict
    queries: list = field(default_factory=list)
    expected: list = field(default_factory=list)
    description: str = ""
    state_vector: np.ndarray | None = None

    def __post_init__(self):
        if not self.families:
            raise ContractError(f"scenario {self.name!r} has no families")
        dims = {f.dim for f in self.families.values()}
        if len(dims) != 1:
            raise ContractError(f"scenario {self.name!r}: families disagree on dimension {sorted(dims)}")
        if self.initial_state.shape != (self.dim, self.dim):
            raise ContractError(f"scenario {self.name!r}: state shape {self.initial_state.shape}")
        if not check_density(self.initial_state):
            raise ContractError(f"scenario {self.name!r}: initial state is not a density operator")

    @property
    def dim(self) -> int:
        return next(iter(self.families.values())).dim

    def family(self, name: str) -> Family:
        try:
            return self.families[name]
        except KeyError:
            raise ContractError(f"unknown family {name!r} (known: {', '.join(self.families)})") from None

    def decompositions(self) -> dict:
        out = {}
        for f in self.families.values():
            for d in f.decomps:
                other = out.setdefault(d.name, d)
                if other is not d:
                    raise ContractError(f"two different decompositions are named {d.name!r}")
        return out


_SLICE = re.compile(r"^@(\d+):(.+)$")


def parse_mask_spec(spec: str, f: Family) -> History:
    """``@<slice>:<bits or labels>`` entries joined by ``;``.

    Slices are numbered from 1; a slice left out is the identity. A label
    list may mix member labels and named coarse masks, comma separated.
    """
    masks: list = [None] * f.n_slices
    spec = spec.strip()
    if not spec:
        return f.history(masks)
    for part in spec.split(";"):
        m = _SLICE.match(part.strip())
        if not m:
            raise ContractError(f"bad mask-spec entry {part!r} (expected @<slice>:<mask>)")
        s, body = int(m.group(1)), m.group(2).strip()
        if not 1 <= s <= f.n_slices:
            raise ContractError(f"mask-spec slice {s} outside 1..{f.n_slices} of family {f.name!r}")
        d = f.decomps[s - 1]
        if re.fullmatch(r"[01]+", body) and len(body) == len(d):
            masks[s - 1] = tuple(int(b) for b in body)
        else:
            masks[s - 1] = d.mask_for([x.strip() for x in body.split(",") if x.strip()])
    return f.history(masks)


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _profile_stats(profile):
    p = np.asarray(profile, dtype=float)
    interior = range(1, len(p) - 1)
    maxima = [j for j in interior if p[j] > p[j - 1] and p[j] > p[j + 1]]
    minima = [j for j in interior if p[j] < p[j - 1] and p[j] < p[j + 1]]
    extrema = sorted(maxima + minima)
    vis = 0.0
    for a, b in zip(extrema, extrema[1:]):
        hi, lo = max(p[a], p[b]), min(p[a], p[b])
        if hi + lo > 0:
            vis = max(vis, (hi - lo) / (hi + lo))
    return {"local_maxima": len(maxima), "local_minima": len(minima), "visibility": vis}


def context_set_for(s: Scenario, names, tol: Tolerances):
    """Closed context set over the members of one-time families ``names``."""
    elements, coarse = [], {}
    for name in names:
        f = s.family(name)
        if f.n_slices != 1:
            raise ContractError(f"family {name!r} is not a one-time family")
        d, t = f.decomps[0], f.grid.slices[0]
        for p, lab in zip(d.members, d.labels):
            elements.append(OneTimeHistory(p, t, lab))
        for cname, cmask in d.coarse.items():
            coarse[cname] = sum(p for bit, p in zip(cmask, d.members) if bit)
    cs = build_pba(elements, tol)
    extra = {}
    for cname, mat in coarse.items():
        k = cs.find(mat)
        if k is None or k < 0:
            raise ContractError(f"named mask {cname!r} is missing from the closure")
        extra[cname] = k
    return cs.with_aliases(extra)


def run_query(s: Scenario, q: dict, tol: Tolerances = DEFAULT_TOL) -> dict:
    if q.get("expect_error"):
        try:
            out = _run(s, q, tol)
        except SingleFamilyViolation as exc:
            return {"raised": type(exc).__name__, "message": str(exc)}
        out = dict(out)
        out["raised"] = None
        return out
    return _run(s, q, tol)


def _history(s: Scenario, q: dict, key: str, default_family: str) -> tuple[History, Family]:
    fam = s.family(q.get(f"{key}_family", default_family))
    return parse_mask_spec(q[key], fam), fam


def _run(s: Scenario, q: dict, tol: Tolerances) -> dict:
    op = q.get("op")
    w = s.initial_state
    if op == "probabilities":
        f = s.family(q["family"])
        d = decoherence_functional(f, w, tol)
        return {"family": f.name, "trace_sum": d.trace_sum, "probabilities": d.probabilities()}
    if op == "probability":
        f = s.family(q["family"])
        h = parse_mask_spec(q.get("history", ""), f)
        return {"family": f.name, "history": h.label, "mask": h.mask_spec, "p": probability(h, f, w, tol)}
    if op == "check":
        f = s.family(q["family"])
        rep = check_consistency(decoherence_functional(f, w, tol), q.get("mode", "medium"), tol)
        return {"family": f.name, **rep.as_dict()}
    if op == "audit":
        f = s.family(q["family"])
        rep = additivity_audit(f, w, tol, budget=q.get("budget", 20000), seed=q.get("seed", 0))
        out = {"family": f.name, **rep.as_dict()}
        if "slice" in q:
            rows = [r for r in rep.discrepancies if r["slice"] == q["slice"]
                    and (not q.get("members") or sorted(r["members"]) == sorted(q["members"]))]
            best = max(rows, key=lambda r: r["discrepancy"]) if rows else None
            out["selected"] = {"count": len(rows), "max_discrepancy": best["discrepancy"] if best else 0.0,
                               "location": best}
        return out
    if op == "implies":
        f = s.family(q["family"])
        a, _ = _history(s, q, "a", q["family"])
        b, _ = _history(s, q, "b", q["family"])
        return {"family": f.name, "a": a.label, "b": b.label, **implies(a, b, f, w, tol).as_dict()}
    if op == "conjunction":
        f = s.family(q["family"])
        a, _ = _history(s, q, "a", q["family"])
        b, _ = _history(s, q, "b", q["family"])
        h = conjunction(a, b, f, tol)
        return {"family": f.name, "history": h.label, "p": probability(h, f, w, tol)}
    if op == "relation":
        pa = _member(s, q["a"])
        pb = _member(s, q["b"])
        prod = max_norm(pa @ pb)
        dist = max_norm(pa - (identity(s.dim) - pb))
        return {"product_max": prod, "complement_distance": dist,
                "orthogonal": prod <= tol.eps_structure, "complementary": dist <= tol.eps_structure}
    if op == "profile":
        f = s.family(q["family"])
        last = f.decomps[-1]
        profile = []
        for lab in last.labels:
            spec = (q.get("prefix", "") + f";@{f.n_slices}:{lab}").lstrip(";")
            profile.append(probability(parse_mask_spec(spec, f), f, w, tol))
        return {"family": f.name, "profile": profile, **_profile_stats(profile)}
    if op == "same_history":
        ha, _ = _history(s, q, "a", q["a_family"])
        hb, _ = _history(s, q, "b", q["b_family"])
        return {"a": ha.label, "b": hb.label, "same": same_history(ha, hb, tol)}
    if op == "propagate":
        cs = context_set_for(s, q["families"], tol)
        res = propagate_truth(q["seeds"], cs)
        values = {}
        if res.forced is not None:
            for lab in q.get("report", []):
                values[lab] = res.forced.get(cs, lab)
        return {"conflict": res.conflict, "values": values, "elements": len(cs),
                "contexts": len(cs.contexts)}
    if op == "search":
        cs = context_set_for(s, q["families"], tol)
        res = search_valuation(cs, q.get("mode", "backtracking"), q.get("seed"),
                               q.get("enumerate", False))
        out = res.as_dict(cs)
        out["stats"] = {k: v for k, v in out["stats"].items() if k != "elapsed_s"}
        return out
    if op == "pba_axioms":
        cs = context_set_for(s, q["families"], tol)
        return verify_pba_axioms(cs, tol).as_dict()
    raise ContractError(f"unknown query op {op!r}")


def _member(s: Scenario, ref):
    dname, label = ref
    decs = s.decompositions()
    if dname not in decs:
        raise ContractError(f"unknown decomposition {dname!r}")
    d = decs[dname]
    return sum(p for bit, p in zip(d.mask_for([label]), d.members) if bit)


def lookup(result, path: str):
    cur = result
    for part in path.split("."):
        if isinstance(cur, dict) and part in cur:
            cur = cur[part]
        elif isinstance(cur, list) and part.isdigit():
            cur = cur[int(part)]
        else:
            raise KeyError(path)
    return cur


def check_expectation(exp: dict, results: list) -> dict:
    try:
        actual = lookup(results[exp["query"]], exp["path"])
    except (KeyError, IndexError, TypeError):
        return {**exp, "passed": False, "actual": None}
    ok = True
    if "equals" in exp:
        want = exp["equals"]
        if isinstance(want, bool) or want is None or isinstance(want, str):
            ok = actual == want
        else:
            ok = isinstance(actual, (int, float)) and math.isclose(
                actual, want, rel_tol=0.0, abs_tol=exp.get("tol", 0.0))
    if "lt" in exp:
        ok = ok and isinstance(actual, (int, float)) and actual < exp["lt"]
    if "gt" in exp:
        ok = ok and isinstance(actual, (int, float)) and actual > exp["gt"]
    return {**exp, "passed": bool(ok), "actual": actual}


def evaluate(s: Scenario, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Run every query of ``s`` and grade its expectations."""
    results = [jsonable(run_query(s, q, tol)) for q in s.queries]
    checks = [jsonable(check_expectation(e, results)) for e in s.expected]
    return {
        "scenario": s.name,
        "results": [{"query": q, "result": r} for q, r in zip(s.queries, results)],
        "expectations": checks,
        "passed": all(c["passed"] for c in checks),
    }
