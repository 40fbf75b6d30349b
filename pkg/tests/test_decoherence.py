import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from histkit.decoherence import (
    additivity_audit,
    check_consistency,
    class_operator,
    decoherence_functional,
    density_from_vector,
    probability,
)
from histkit.histories import Decomposition, Family, TimeGrid
from histkit.linalg import ContractError, Tolerances
from histkit.scenarios import spin_half, three_box, two_slit

from randoms import decomposition, density, family


def brute_force_d(f, w):
    """D(a;b) = Tr[C_a W C_b^dagger] by explicit products, one pair at a time."""
    idx = list(itertools.product(*[range(len(d)) for d in f.decomps]))
    cs = []
    for i in idx:
        c = np.eye(f.dim)
        for d, u, k in zip(f.decomps, f.unitaries, i):
            c = d.members[k] @ u @ c
        cs.append(c)
    return np.array([[np.trace(a @ w @ b.conj().T) for b in cs] for a in cs])


@pytest.mark.parametrize("seed", range(6))
def test_functional_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    f = family(rng, d, slices=int(rng.integers(1, 4)))
    w = density(rng, d, int(rng.integers(1, d + 1)))
    got = decoherence_functional(f, w).entries
    assert np.max(np.abs(got - brute_force_d(f, w))) < 1e-12


def test_two_slit_matches_brute_force():
    s = two_slit()
    f = s.family("twotimes")
    d = decoherence_functional(f, s.initial_state)
    ref = brute_force_d(f, s.initial_state)
    assert np.max(np.abs(d.entries - ref)) < 1e-12
    off = np.abs(ref - np.diag(np.diag(ref)))
    norm = np.sqrt(np.outer(np.diag(ref).real, np.diag(ref).real))
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(norm > 1e-12, off / norm, 0)
    assert normalized.max() > 0.01


def test_probability_matches_diagonal():
    rng = np.random.default_rng(7)
    f = family(rng, 4, slices=2)
    w = density(rng, 4)
    d = decoherence_functional(f, w)
    for k, i in enumerate(d.indices):
        assert probability(f.fine_history(i), f, w) == pytest.approx(d.diagonal[k], abs=1e-12)


def test_spin_half_probabilities():
    s = spin_half()
    d = decoherence_functional(s.family("z"), s.initial_state)
    assert d.probabilities() == pytest.approx({"z_up": 0.5, "z_down": 0.5}, abs=1e-12)
    assert np.abs(d.entries[0, 1]) < 1e-12


def test_identity_and_null_history():
    rng = np.random.default_rng(8)
    f = family(rng, 3, slices=2)
    w = density(rng, 3)
    assert probability(f.identity_history(), f, w) == pytest.approx(1.0, abs=1e-12)
    assert probability(f.history([tuple(0 for _ in f.decomps[0].members), None]), f, w) == 0.0


def test_density_shape_checked():
    rng = np.random.default_rng(9)
    f = family(rng, 3)
    with pytest.raises(ContractError):
        decoherence_functional(f, np.eye(2) / 2)
    with pytest.raises(ContractError):
        decoherence_functional(f, np.diag([1.0, 0.5, -0.5]))


def test_class_operator_order():
    d = Decomposition((np.diag([1.0, 0]), np.diag([0, 1.0])), ("u", "d"), "z")
    x = np.array([[0, 1], [1, 0]])
    f = Family(TimeGrid((1.0, 2.0)), (d, d), unitaries=(np.eye(2), x))
    c = class_operator(f.fine_history((0, 1)), f).matrix
    assert np.allclose(c, np.diag([0, 1.0]) @ x @ np.diag([1.0, 0]))


def test_one_time_families_decohere():
    rng = np.random.default_rng(10)
    for _ in range(50):
        dim = int(rng.integers(2, 9))
        f = family(rng, dim, slices=1)
        rep = check_consistency(decoherence_functional(f, density(rng, dim)), "medium")
        assert rep.passed and rep.degree < 1e-10


def test_medium_implies_weak():
    rng = np.random.default_rng(11)
    for _ in range(30):
        f = family(rng, 3, slices=2)
        d = decoherence_functional(f, density(rng, 3))
        med, weak = check_consistency(d, "medium"), check_consistency(d, "weak")
        assert not med.passed or weak.passed
        assert weak.worst_normalized <= med.worst_normalized + 1e-15


def test_two_slit_consistency_reports():
    s = two_slit()
    w = s.initial_state
    assert check_consistency(decoherence_functional(s.family("t1"), w)).passed
    assert check_consistency(decoherence_functional(s.family("t1t2"), w)).passed
    rep = check_consistency(decoherence_functional(s.family("twotimes"), w))
    assert not rep.passed and rep.degree > 1e-3
    assert rep.worst_pair is not None


def test_three_box_family_one_decoheres():
    s = three_box()
    rep = check_consistency(decoherence_functional(s.family("fam1"), s.initial_state))
    assert rep.passed
    # the cross term <psi|(1-P_A) P_phi P_A|psi> vanishes by hand
    psi = np.ones(3) / np.sqrt(3)
    phi = np.array([1, 1, -1]) / np.sqrt(3)
    pa = np.diag([1.0, 0, 0])
    assert abs(psi @ (np.eye(3) - pa) @ np.outer(phi, phi) @ pa @ psi) < 1e-15


def test_zero_probability_pairs_skipped():
    # W supported on the first member only: every other branch is null
    d = Decomposition((np.diag([1.0, 0, 0]), np.diag([0, 1.0, 1.0])), ("a", "b"), "ab")
    f = Family(TimeGrid((1.0, 2.0)), (d, d))
    rep = check_consistency(decoherence_functional(f, np.diag([1.0, 0, 0])))
    assert rep.passed and rep.worst_pair is None


def test_unknown_mode():
    s = spin_half()
    with pytest.raises(ContractError):
        check_consistency(decoherence_functional(s.family("z"), s.initial_state), "strong")


def test_additivity_one_time_and_decohered():
    rng = np.random.default_rng(12)
    f = family(rng, 5, slices=1)
    assert additivity_audit(f, density(rng, 5)).max_discrepancy < 1e-10
    basis = Decomposition(tuple(np.diag(np.eye(4)[k]) for k in range(4)), ("a", "b", "c", "d"), "diag")
    g = Family(TimeGrid((1.0, 2.0, 3.0)), (basis, basis, basis))
    rep = additivity_audit(g, np.diag([0.1, 0.2, 0.3, 0.4]))
    assert rep.max_discrepancy < 1e-10 and rep.passed and not rep.sampled


def test_additivity_two_slit():
    s = two_slit()
    rep = additivity_audit(s.family("twotimes"), s.initial_state)
    rows = [r for r in rep.discrepancies if r["slice"] == 1 and sorted(r["members"]) == ["d1", "d2"]]
    assert len(rows) == 16
    assert max(r["discrepancy"] for r in rows) > 0.01
    assert not rep.passed


def test_additivity_sampling():
    rng = np.random.default_rng(13)
    f = family(rng, 4, slices=3)
    rep = additivity_audit(f, density(rng, 4), budget=10, seed=1)
    assert rep.sampled and rep.checked == 10
    again = additivity_audit(f, density(np.random.default_rng(13 + 0), 4), budget=10, seed=1)
    assert again.checked == 10


def test_medium_decoherent_coarse_sums():
    # block-diagonal dynamics keep a diagonal W decoherent in the block basis
    basis = Decomposition(tuple(np.diag(np.eye(4)[k]) for k in range(4)), ("a", "b", "c", "d"), "diag")
    f = Family(TimeGrid((1.0, 2.0)), (basis, basis))
    w = np.diag([0.4, 0.3, 0.2, 0.1])
    d = decoherence_functional(f, w)
    assert check_consistency(d).passed
    p = probability(f.history([(1, 1, 0, 0), (0, 1, 1, 0)]), f, w)
    fine = sum(probability(f.fine_history((i, j)), f, w) for i in (0, 1) for j in (1, 2))
    assert p == pytest.approx(fine, abs=10 * Tolerances().eps_decoherence)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), dim=st.integers(2, 8), slices=st.integers(1, 3))
def test_trace_and_hermiticity(seed, dim, slices):
    rng = np.random.default_rng(seed)
    f = family(rng, dim, slices)
    d = decoherence_functional(f, density(rng, dim))
    assert abs(d.trace_sum - 1) < 1e-9
    assert np.max(np.abs(d.entries - d.entries.conj().T)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), dim=st.integers(2, 6))
def test_probability_invariant_under_relabeling(seed, dim):
    rng = np.random.default_rng(seed)
    f = family(rng, dim, 2)
    w = density(rng, dim)
    perms = [rng.permutation(len(dd)) for dd in f.decomps]
    shuffled = tuple(Decomposition(tuple(dd.members[k] for k in p), tuple(dd.labels[k] for k in p), dd.name)
                     for dd, p in zip(f.decomps, perms))
    g = Family(f.grid, shuffled, unitaries=f.unitaries)
    for idx in itertools.product(*[range(len(dd)) for dd in f.decomps]):
        new_idx = tuple(int(np.flatnonzero(p == k)[0]) for p, k in zip(perms, idx))
        assert probability(f.fine_history(idx), f, w) == pytest.approx(
            probability(g.fine_history(new_idx), g, w), abs=1e-12)


def test_density_from_vector():
    w = density_from_vector([1, 1j])
    assert np.allclose(w, [[0.5, -0.5j], [0.5j, 0.5]])


def test_random_decomposition_helper_is_valid():
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = decomposition(rng, 5)
        assert np.allclose(sum(d.members), np.eye(5))
