"""Ready-to-run scenarios: spin-1/2, two slits, three boxes, spin-1 triples, KS sets."""

from __future__ import annotations

import math

import numpy as np

from .decoherence import density_from_vector
from .hislogic import ContextSet, load_rays, search_valuation
from .histories import Decomposition, Family, TimeGrid
from .linalg import ContractError, identity, ket_projector
from .queries import Scenario, context_set_for

TWO_SLIT_FLIGHT = 40.0


def spin_half() -> Scenario:
    x_up = np.array([1.0, 1.0]) / math.sqrt(2)
    sz = Decomposition((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), ("z_up", "z_down"), "Sz")
    fam = Family(TimeGrid((1.0,), t0=0.0), (sz,), name="z")
    queries = [
        {"op": "probabilities", "family": "z"},
        {"op": "check", "family": "z", "mode": "medium"},
    ]
    expected = [
        {"query": 0, "path": "probabilities.z_up", "equals": 0.5, "tol": 1e-12},
        {"query": 0, "path": "probabilities.z_down", "equals": 0.5, "tol": 1e-12},
        {"query": 0, "path": "trace_sum", "equals": 1.0, "tol": 1e-12},
        {"query": 1, "path": "passed", "equals": True},
        {"query": 1, "path": "degree", "lt": 1e-12},
    ]
    return Scenario("spin-half", density_from_vector(x_up), {"z": fam}, queries, expected,
                    "spin-1/2 prepared along +x, one-time family in the z basis", state_vector=x_up)


def lattice_hamiltonian(n: int) -> np.ndarray:
    """Free particle on a periodic chain: H = -(discrete Laplacian), unit spacing."""
    h = 2.0 * np.eye(n, dtype=np.complex128)
    for i in range(n):
        h[i, (i + 1) % n] = -1.0
        h[(i + 1) % n, i] = -1.0
    return h


def _diag_projector(n: int, sites) -> np.ndarray:
    d = np.zeros(n)
    d[list(sites)] = 1.0
    return np.diag(d).astype(np.complex128)


def two_slit(n: int = 128, slit_centers=(-8, 8), slit_width: float = 2.0, bins: int = 16,
             flight: float = TWO_SLIT_FLIGHT) -> Scenario:
    """Two Gaussian packets on a periodic grid, detected in equal bins after ``flight``.

    Each slit is the aperture ``|x - c| <= 3 * slit_width`` and carries a
    Gaussian of width ``slit_width`` truncated to it, so the state has no
    amplitude on the absorbing complement ``C``.
    """
    if n < 64 or n & (n - 1):
        raise ContractError(f"grid size must be a power of two >= 64, got {n}")
    if bins < 1 or n % bins:
        raise ContractError(f"{bins} bins do not tile a grid of {n} points")
    x = np.arange(n) - n // 2
    half = 3 * slit_width
    apertures = [np.flatnonzero(np.abs(x - c) <= half) for c in slit_centers]
    if len(apertures) != 2 or any(len(a) == 0 for a in apertures):
        raise ContractError("two slits inside the grid are required")
    if np.intersect1d(*apertures).size:
        raise ContractError(f"slits at {slit_centers} with half-width {half} overlap")
    psi = np.zeros(n)
    for c, ap in zip(slit_centers, apertures):
        packet = np.zeros(n)
        packet[ap] = np.exp(-((x[ap] - c) ** 2) / (4 * slit_width**2))
        psi += packet / np.linalg.norm(packet)
    w = density_from_vector(psi)

    both = np.union1d(*apertures)
    rest = np.setdiff1d(np.arange(n), both)
    p_d1, p_d2 = (_diag_projector(n, a) for a in apertures)
    p_c = _diag_projector(n, rest)
    slits = Decomposition((p_d1, p_d2, p_c), ("d1", "d2", "C"), "slits", {"d12": (1, 1, 0)})
    slits_c = Decomposition((_diag_projector(n, both), p_c), ("d12", "C"), "slits_coarse")
    width = n // bins
    screen = Decomposition(tuple(_diag_projector(n, range(j * width, (j + 1) * width)) for j in range(bins)),
                           tuple(f"D{j}" for j in range(bins)), "bins")
    h = lattice_hamiltonian(n)
    grid1 = TimeGrid((0.0,), t0=0.0)
    grid2 = TimeGrid((0.0, float(flight)), t0=0.0)
    families = {
        "t1": Family(grid1, (slits,), hamiltonian=h, name="t1"),
        "t1t2": Family(grid2, (slits_c, screen), hamiltonian=h, name="t1t2"),
        "twotimes": Family(grid2, (slits, screen), hamiltonian=h, name="twotimes"),
    }
    queries = [
        {"op": "check", "family": "t1", "mode": "medium"},
        {"op": "check", "family": "t1t2", "mode": "medium"},
        {"op": "check", "family": "twotimes", "mode": "medium"},
        {"op": "audit", "family": "twotimes", "slice": 1, "members": ["d1", "d2"]},
        {"op": "profile", "family": "t1t2", "prefix": "@1:d12"},
        {"op": "probabilities", "family": "t1"},
    ]
    expected = [
        {"query": 0, "path": "passed", "equals": True},
        {"query": 1, "path": "passed", "equals": True},
        {"query": 2, "path": "passed", "equals": False},
        {"query": 2, "path": "degree", "gt": 1e-3},
        {"query": 3, "path": "selected.max_discrepancy", "gt": 0.01},
        {"query": 4, "path": "local_maxima", "gt": 2},
        {"query": 4, "path": "visibility", "gt": 0.2},
        {"query": 5, "path": "probabilities.C", "equals": 0.0, "tol": 1e-12},
    ]
    return Scenario("two-slit", w, families, queries, expected,
                    f"{n}-site periodic chain, slits at {tuple(slit_centers)}, {bins} screen bins, flight {flight}",
                    state_vector=psi)


def three_box() -> Scenario:
    """Pre- and post-selected three-state system with contrary inferences.

    Prepared in (1,1,1)/sqrt3 and post-selected in (1,1,-1)/sqrt3: within
    the A family the post-selection implies A, within the B family it
    implies B, although A and B are orthogonal.
    """
    psi = np.ones(3) / math.sqrt(3)
    phi = np.array([1.0, 1.0, -1.0]) / math.sqrt(3)
    eye = identity(3)
    p_a, p_b = ket_projector([1, 0, 0]), ket_projector([0, 1, 0])
    p_phi = ket_projector(phi)
    d_a = Decomposition((p_a, eye - p_a), ("A", "notA"), "boxA")
    d_b = Decomposition((p_b, eye - p_b), ("B", "notB"), "boxB")
    d_phi = Decomposition((p_phi, eye - p_phi), ("phi", "notphi"), "post")
    grid = TimeGrid((1.0, 2.0), t0=0.0)
    families = {
        "fam1": Family(grid, (d_a, d_phi), name="fam1"),
        "fam2": Family(grid, (d_b, d_phi), name="fam2"),
    }
    queries = [
        {"op": "check", "family": "fam1", "mode": "medium"},
        {"op": "check", "family": "fam2", "mode": "medium"},
        {"op": "implies", "family": "fam1", "a": "@2:10", "b": "@1:10;@2:10"},
        {"op": "implies", "family": "fam2", "a": "@2:10", "b": "@1:10;@2:10"},
        {"op": "conjunction", "family": "fam1", "a": "@1:10;@2:10", "b": "@1:10;@2:10",
         "b_family": "fam2", "expect_error": True},
        {"op": "conjunction", "family": "fam2", "a": "@1:10;@2:10", "a_family": "fam1",
         "b": "@1:10;@2:10", "expect_error": True},
        {"op": "relation", "a": ["boxA", "A"], "b": ["boxB", "B"]},
        {"op": "probability", "family": "fam1", "history": "@2:10"},
    ]
    expected = [
        {"query": 0, "path": "passed", "equals": True},
        {"query": 1, "path": "passed", "equals": True},
        {"query": 2, "path": "verdict", "equals": "holds"},
        {"query": 2, "path": "ratio", "equals": 1.0, "tol": 1e-9},
        {"query": 3, "path": "verdict", "equals": "holds"},
        {"query": 3, "path": "ratio", "equals": 1.0, "tol": 1e-9},
        {"query": 4, "path": "raised", "equals": "SingleFamilyViolation"},
        {"query": 5, "path": "raised", "equals": "SingleFamilyViolation"},
        {"query": 6, "path": "orthogonal", "equals": True},
        {"query": 6, "path": "complementary", "equals": False},
        {"query": 7, "path": "p", "equals": 1 / 9, "tol": 1e-12},
    ]
    return Scenario("three-box", density_from_vector(psi), families, queries, expected,
                    "three-box contrary inferences under pre- and post-selection", state_vector=psi)


SPIN1 = {
    "x": np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.complex128) / math.sqrt(2),
    "y": np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=np.complex128) / math.sqrt(2),
    "z": np.diag([1.0, 0.0, -1.0]).astype(np.complex128),
}


def spin_component(direction) -> np.ndarray:
    nx_, ny_, nz_ = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    return nx_ * SPIN1["x"] + ny_ * SPIN1["y"] + nz_ * SPIN1["z"]


def null_ray(op: np.ndarray) -> np.ndarray:
    """Projector onto the kernel of the square of a spin-1 component."""
    evals, vecs = np.linalg.eigh(op @ op)
    if abs(evals[0]) > 1e-12 or evals[1] < 0.5:
        raise ContractError("squared spin component has no isolated zero eigenvalue")
    return ket_projector(vecs[:, 0])


def spin1_triple(theta: float = 0.0) -> dict:
    """alpha/beta/gamma projectors for the axes (x', y', z) rotated by ``theta`` about z.

    ``alpha`` spans the kernel of S_z^2, ``beta`` that of S_y'^2 and
    ``gamma`` that of S_x'^2, so that S_x'^2 = alpha + beta,
    S_y'^2 = alpha + gamma and S_z^2 = beta + gamma.
    """
    c, s = math.cos(theta), math.sin(theta)
    ops = {"x": spin_component((c, s, 0)), "y": spin_component((-s, c, 0)), "z": SPIN1["z"]}
    rays = {"alpha": null_ray(ops["z"]), "beta": null_ray(ops["y"]), "gamma": null_ray(ops["x"])}
    squares = {k: v @ v for k, v in ops.items()}
    table = {("x", "alpha"): 1, ("x", "beta"): 1, ("x", "gamma"): 0,
             ("y", "alpha"): 1, ("y", "beta"): 0, ("y", "gamma"): 1,
             ("z", "alpha"): 0, ("z", "beta"): 1, ("z", "gamma"): 1}
    for (axis, ray), eig in table.items():
        p = rays[ray]
        if np.max(np.abs(squares[axis] @ p - eig * p)) > 1e-12:
            raise ContractError(f"eigenvalue table mismatch for S_{axis}^2 on {ray}")
    return {**rays, "squares": squares}


def spin1_chain(thetas=(math.pi / 4,)):
    """Spin-1 triples sharing the z axis; returns ``(scenario, context_set)``.

    The self-test seeds h[alpha] = 1 and expects h[Sx2] = h[Sy2] = 1,
    h[Sz2] = 0 on the base triple and, on every rotated triple,
    h[alpha'] = 1, h[beta'] = h[gamma'] = 0, hence h[Sx2'] = h[Sy2'] = 1
    and h[Sz2'] = 0.
    """
    thetas = [float(t) for t in thetas]
    for t in thetas:
        if not 0.0 < t < math.pi / 2:
            raise ContractError(f"rotation angle {t} must lie strictly inside (0, pi/2)")
    if len({round(t, 12) for t in thetas}) != len(thetas):
        raise ContractError("rotation angles must be pairwise distinct")
    coarse = {"Sx2": (1, 1, 0), "Sy2": (1, 0, 1), "Sz2": (0, 1, 1)}
    grid = TimeGrid((1.0,), t0=0.0)
    families = {}
    tags = [""] + [f"_{math.degrees(t):g}" for t in thetas]
    for tag, theta in zip(tags, [0.0] + thetas):
        tri = spin1_triple(theta)
        d = Decomposition((tri["alpha"], tri["beta"], tri["gamma"]),
                          tuple(f"{r}{tag}" for r in ("alpha", "beta", "gamma")),
                          f"xyz{tag}", {f"{k}{tag}": v for k, v in coarse.items()})
        families[f"xyz{tag}"] = Family(grid, (d,), name=f"xyz{tag}")
    names = list(families)
    queries = [
        {"op": "propagate", "families": names, "seeds": {"alpha": 1},
         "report": [f"{k}{tag}" for tag in tags for k in
                    ("alpha", "beta", "gamma", "Sx2", "Sy2", "Sz2")]},
        {"op": "pba_axioms", "families": names},
    ]
    expected = [
        {"query": 0, "path": "conflict", "equals": None},
        {"query": 1, "path": "passed", "equals": True},
    ]
    for tag in tags:
        want = {"alpha": 1, "beta": 0, "gamma": 0, "Sx2": 1, "Sy2": 1, "Sz2": 0}
        expected += [{"query": 0, "path": f"values.{k}{tag}", "equals": v, "tol": 0}
                     for k, v in want.items()]
    for tag in tags[1:]:
        queries.append({"op": "same_history", "a": "@1:beta,gamma", "a_family": "xyz",
                        "b": f"@1:beta{tag},gamma{tag}", "b_family": f"xyz{tag}"})
        expected.append({"query": len(queries) - 1, "path": "same", "equals": True})
    scen = Scenario("spin1-chain", identity(3) / 3, families, queries, expected,
                    "spin-1 orthogonal triples rotated about a shared z axis")
    return scen, context_set_for(scen, names, scen.families[names[0]].tol)


def ks_dataset(name: str) -> ContextSet:
    """Bundled ray set (``cabello18``, ``peres33``, ``spin1-chain``) or a ray-file path."""
    return load_rays(name)


def single_triple() -> ContextSet:
    return load_rays("ray a 1 0 0\nray b 0 1 0\nray c 0 0 1\nbasis a b c\n")


def ks_report(random_orders: int = 100) -> dict:
    """Valuation search on the bundled sets plus the single-triple control."""
    cab = ks_dataset("cabello18")
    per = ks_dataset("peres33")
    tri = single_triple()
    rows = []
    bt = search_valuation(cab)
    ex = search_valuation(cab, "exhaustive")
    rows.append({"dataset": "cabello18", "elements": len(cab), "contexts": len(cab.contexts),
                 "sat": bt.sat, "oracle_sat": ex.sat, "stats": bt.stats})
    bt = search_valuation(per)
    seeded = [search_valuation(per, seed=s).sat for s in range(random_orders)]
    rows.append({"dataset": "peres33", "elements": len(per), "contexts": len(per.contexts),
                 "sat": bt.sat, "random_orders": random_orders,
                 "random_orders_sat": sum(seeded), "stats": bt.stats})
    en = search_valuation(tri, enumerate_all=True)
    rows.append({"dataset": "single-triple", "elements": len(tri), "contexts": len(tri.contexts),
                 "sat": en.sat, "solutions": len(en.solutions), "stats": en.stats})
    passed = (not rows[0]["sat"] and not rows[0]["oracle_sat"] and not rows[1]["sat"]
              and rows[1]["random_orders_sat"] == 0 and rows[2]["sat"] and rows[2]["solutions"] == 3)
    return {"scenario": "ks", "results": rows, "passed": passed}


DEMOS = {
    "spin-half": spin_half,
    "two-slit": two_slit,
    "three-box": three_box,
    "spin1-chain": lambda: spin1_chain()[0],
}
