"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""

import time

import numpy as np
import pytest

from histkit.decoherence import check_consistency, decoherence_functional
from histkit.hislogic import (
    OneTimeHistory,
    check_homomorphism,
    load_rays,
    make_context_set,
    propagate_truth,
    search_valuation,
    verify_pba_axioms,
)
from histkit.hislogic.rays import BUNDLED
from histkit.histories import Family, TimeGrid
from histkit.queries import evaluate, run_query
from histkit.scenarios import single_triple, spin1_chain, spin_half, three_box, two_slit

from acceptance_sets import random_context_set
from randoms import decomposition, density

pytestmark = pytest.mark.acceptance

RESULTS: dict = {}
SAT_VALUATIONS: list = []


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


def one_time_suite(count=500, seed=20):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        dim = int(rng.integers(2, 9))
        f = Family(TimeGrid((1.0,)), (decomposition(rng, dim),), name="one-time")
        w = density(rng, dim, int(rng.integers(1, dim + 1)))
        yield f, w


def test_criterion_1_spin_half():
    t = time.perf_counter()
    r = evaluate(spin_half())
    elapsed = time.perf_counter() - t
    p = r["results"][0]["result"]["probabilities"]
    ok = abs(p["z_up"] - 0.5) <= 1e-12 and abs(p["z_down"] - 0.5) <= 1e-12 and elapsed < 0.1
    record(1, ok, f"p(z_up)={p['z_up']!r} p(z_down)={p['z_down']!r} in {elapsed:.3f}s")


def test_criterion_2_one_time_decoherence():
    t = time.perf_counter()
    worst, failures = 0.0, 0
    for f, w in one_time_suite():
        rep = check_consistency(decoherence_functional(f, w), "medium")
        worst = max(worst, rep.degree)
        failures += not rep.passed
    elapsed = time.perf_counter() - t
    ok = failures == 0 and worst < 1e-10 and elapsed < 10
    record(2, ok, f"500 families, {failures} failures, max degree {worst:.2e}, {elapsed:.2f}s")


def test_criterion_3_two_slit():
    t = time.perf_counter()
    s = two_slit()
    w = s.initial_state
    t1 = check_consistency(decoherence_functional(s.family("t1"), w))
    t12 = check_consistency(decoherence_functional(s.family("t1t2"), w))
    two = check_consistency(decoherence_functional(s.family("twotimes"), w))
    audit = run_query(s, {"op": "audit", "family": "twotimes", "slice": 1, "members": ["d1", "d2"]})
    elapsed = time.perf_counter() - t
    gap = audit["selected"]["max_discrepancy"]
    ok = (t1.passed and t12.passed and not two.passed and two.degree > 1e-3
          and gap > 0.01 and elapsed < 2)
    record(3, ok, f"twotimes degree {two.degree:.3f}, bin gap {gap:.4f} at "
                  f"{audit['selected']['location']['history']}, t1/t1t2 pass={t1.passed}/{t12.passed}, "
                  f"{elapsed:.2f}s")


def test_criterion_4_trace_and_hermiticity():
    worst_trace, worst_herm = 0.0, 0.0
    for f, w in one_time_suite():
        d = decoherence_functional(f, w)
        worst_trace = max(worst_trace, abs(d.trace_sum - 1))
        worst_herm = max(worst_herm, float(np.max(np.abs(d.entries - d.entries.conj().T))))
    ok = worst_trace <= 1e-9 and worst_herm <= 1e-12
    record(4, ok, f"max |sum D - 1| {worst_trace:.2e}, max hermiticity defect {worst_herm:.2e}")


def test_criterion_5_three_box():
    t = time.perf_counter()
    s = three_box()
    res = {k: run_query(s, q) for k, q in enumerate(s.queries)}
    elapsed = time.perf_counter() - t
    ok = (res[0]["passed"] and res[1]["passed"]
          and all(res[k]["verdict"] == "holds" and abs(res[k]["ratio"] - 1) <= 1e-9 for k in (2, 3))
          and all(res[k]["raised"] == "SingleFamilyViolation" and "p" not in res[k] for k in (4, 5))
          and elapsed < 0.1)
    record(5, ok, f"ratios {res[2]['ratio']!r}/{res[3]['ratio']!r}, probe raised "
                  f"{res[4]['raised']}, {elapsed:.3f}s")


def test_criterion_6_spin1_propagation():
    t = time.perf_counter()
    _, c = spin1_chain([np.pi / 4])
    res = propagate_truth({"alpha": 1}, c)
    elapsed = time.perf_counter() - t
    want = {"Sx2": 1, "Sy2": 1, "Sz2": 0, "alpha_45": 1, "beta_45": 0, "gamma_45": 0}
    got = {k: res.forced.get(c, k) for k in want} if res.ok else {}
    ok = res.ok and got == want and elapsed < 0.1
    record(6, ok, f"forced {got}, {elapsed:.3f}s")


def test_criterion_7_kochen_specker():
    lines, ok = [], True
    t = time.perf_counter()
    cab = load_rays("cabello18")
    bt, ex = search_valuation(cab), search_valuation(cab, "exhaustive")
    dt = time.perf_counter() - t
    ok &= not bt.sat and not ex.sat and dt < 5
    lines.append(f"cabello18 unsat (oracle agrees) {dt:.2f}s")
    t = time.perf_counter()
    per = load_rays("peres33")
    bt = search_valuation(per)
    seeded = [search_valuation(per, seed=s).sat for s in range(100)]
    dt = time.perf_counter() - t
    ok &= not bt.sat and not any(seeded) and dt < 5
    lines.append(f"peres33 unsat (100 random orders agree) {dt:.2f}s")
    t = time.perf_counter()
    tri = single_triple()
    en = search_valuation(tri, enumerate_all=True)
    dt = time.perf_counter() - t
    ok &= en.sat and len(en.solutions) == 3 and dt < 5
    SAT_VALUATIONS.extend((tri, v) for v in en.solutions)
    lines.append(f"single triple {len(en.solutions)} solutions")
    record(7, ok, "; ".join(lines))


def test_criterion_8_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    disagree, n_sat, biggest = 0, 0, 0
    for _ in range(200):
        c = random_context_set(rng)
        biggest = max(biggest, len(c))
        bt = search_valuation(c, enumerate_all=True)
        first = search_valuation(c)
        ex = search_valuation(c, "exhaustive")
        same = (bt.sat == ex.sat == first.sat
                and sorted(v.values for v in bt.solutions) == sorted(v.values for v in ex.solutions)
                and (not first.sat or first.valuation == ex.solutions[0]))
        disagree += not same
        n_sat += bt.sat
        SAT_VALUATIONS.extend((c, v) for v in bt.solutions)
    elapsed = time.perf_counter() - t
    ok = disagree == 0 and biggest <= 20 and elapsed < 60
    record(8, ok, f"200 sets (<= {biggest} elements, {n_sat} sat), {disagree} disagreements, {elapsed:.2f}s")


def test_criterion_9_pba_axioms():
    sets = {name: load_rays(name) for name in BUNDLED}
    sets["spin1-chain closure"] = spin1_chain()[1]
    sets["single triple"] = single_triple()
    failing = [name for name, c in sets.items() if not verify_pba_axioms(c).passed]
    base = single_triple()
    bent = OneTimeHistory(0.9 * base.elements[0].projector, 0.0, "bent", validate=False)
    corrupted = make_context_set([bent, *base.elements[1:]], [])
    neg = verify_pba_axioms(corrupted)
    ax8 = neg.axioms[8]
    ok = not failing and not ax8.passed and ax8.witness is not None
    record(9, ok, f"{len(sets) - len(failing)}/{len(sets)} bundled sets pass all nine; "
                  f"corrupted set fails axiom 8 with witness {ax8.witness}")


def test_criterion_10_homomorphism_laws():
    if not SAT_VALUATIONS:
        test_criterion_7_kochen_specker()
        test_criterion_8_oracle_equivalence()
    bad = sum(not check_homomorphism(v, c).passed for c, v in SAT_VALUATIONS)
    record(10, bad == 0 and len(SAT_VALUATIONS) > 0,
           f"{len(SAT_VALUATIONS)} sat valuations checked, {bad} with violations")


def summary_lines():
    return [RESULTS[k] for k in sorted(RESULTS)]


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(summary_lines()))
