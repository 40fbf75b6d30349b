"""Regenerate the bundled ray files in src/histkit/data."""

import itertools
import math
from pathlib import Path

import numpy as np

from histkit.hislogic.rays import dump_rays
from histkit.scenarios import spin1_triple

DATA = Path(__file__).resolve().parents[1] / "src" / "histkit" / "data"

CABELLO_BASES = [
    [(0, 0, 0, 1), (0, 0, 1, 0), (1, 1, 0, 0), (1, -1, 0, 0)],
    [(0, 0, 0, 1), (0, 1, 0, 0), (1, 0, 1, 0), (1, 0, -1, 0)],
    [(1, -1, 1, -1), (1, -1, -1, 1), (1, 1, 0, 0), (0, 0, 1, 1)],
    [(1, -1, 1, -1), (1, 1, 1, 1), (1, 0, -1, 0), (0, 1, 0, -1)],
    [(0, 0, 1, 0), (0, 1, 0, 0), (1, 0, 0, 1), (1, 0, 0, -1)],
    [(1, -1, -1, 1), (1, 1, 1, 1), (1, 0, 0, -1), (0, 1, -1, 0)],
    [(1, 1, -1, 1), (1, 1, 1, -1), (1, -1, 0, 0), (0, 0, 1, 1)],
    [(1, 1, -1, 1), (-1, 1, 1, 1), (1, 0, 1, 0), (0, 1, 0, -1)],
    [(1, 1, 1, -1), (-1, 1, 1, 1), (1, 0, 0, 1), (0, 1, -1, 0)],
]


def from_bases(bases, prefix):
    ids, vecs, out = [], [], []
    for basis in bases:
        row = []
        for v in basis:
            v = np.asarray(v, dtype=float)
            v = v / np.linalg.norm(v)
            k = next((i for i, w in enumerate(vecs) if abs(abs(np.vdot(w, v)) - 1) < 1e-12), None)
            if k is None:
                vecs.append(v)
                ids.append(f"{prefix}{len(ids) + 1}")
                k = len(ids) - 1
            row.append(k)
        out.append(row)
    return ids, vecs, out


def canonical(v):
    k = next(i for i, x in enumerate(v) if abs(x) > 1e-12)
    return v if v[k] > 0 else -v


def peres():
    r2 = math.sqrt(2)
    raw = {}
    for pattern in [(0, 0, 1), (0, 1, 1), (0, 1, r2), (1, 1, r2)]:
        for perm in itertools.permutations(pattern):
            for signs in itertools.product((1, -1), repeat=3):
                v = canonical(np.array(perm) * np.array(signs))
                raw[tuple(round(x, 12) for x in v)] = v
    vecs = [raw[k] / np.linalg.norm(raw[k]) for k in sorted(raw, reverse=True)]
    assert len(vecs) == 33, len(vecs)
    triads = [list(t) for t in itertools.combinations(range(33), 3)
              if all(abs(vecs[a] @ vecs[b]) < 1e-12 for a, b in itertools.combinations(t, 2))]
    return [f"p{i + 1}" for i in range(33)], vecs, triads


def in_plane_null(phi):
    """Zero-eigenvalue state of S_n for n = (cos phi, sin phi, 0), in the S_z basis."""
    return np.array([-np.exp(-1j * phi), 0.0, np.exp(1j * phi)]) / math.sqrt(2)


def spin1_chain(degrees=(30, 45, 60)):
    ids, vecs, bases = ["alpha"], [np.array([0.0, 1.0, 0.0])], []
    for deg in (0,) + tuple(degrees):
        theta = math.radians(deg)
        tri = spin1_triple(theta)
        tag = "" if deg == 0 else f"_{deg}"
        row = [0]
        for name, phi in (("beta", theta + math.pi / 2), ("gamma", theta)):
            v = in_plane_null(phi)
            v = np.where(np.abs(v.real) < 1e-15, 0, v.real) + 1j * np.where(np.abs(v.imag) < 1e-15, 0, v.imag)
            assert np.allclose(np.outer(v, v.conj()), tri[name], atol=1e-12)
            ids.append(name + tag)
            vecs.append(v)
            row.append(len(ids) - 1)
        bases.append(row)
    return ids, vecs, bases


def main():
    ids, vecs, bases = from_bases(CABELLO_BASES, "c")
    (DATA / "cabello18.rays").write_text(dump_rays(
        ids, vecs, bases, "Cabello 18-ray set in dimension 4: 9 bases, every ray in exactly two"))
    ids, vecs, bases = peres()
    (DATA / "peres33.rays").write_text(dump_rays(
        ids, vecs, bases, "Peres 33-ray set in dimension 3 with all its orthogonal triads"))
    ids, vecs, bases = spin1_chain()
    (DATA / "spin1-chain.rays").write_text(dump_rays(
        ids, vecs, bases,
        "spin-1 triples: null rays of Sz^2, Sy'^2, Sx'^2 for axes rotated about z\n"
        "by 0, 30, 45 and 60 degrees; alpha (the Sz = 0 state) is shared"))


if __name__ == "__main__":
    main()
