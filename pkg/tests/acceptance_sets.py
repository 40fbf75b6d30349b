"""Random context sets of at most 20 elements for the oracle-equivalence check."""

import itertools
from functools import lru_cache

import numpy as np

from histkit.hislogic import OneTimeHistory, load_rays, make_context_set
from histkit.scenarios import spin1_chain


@lru_cache(maxsize=None)
def integer_pool():
    """Directions with entries in {-1, 0, 1, 2} and all orthogonal triads among them."""
    seen, rays = set(), []
    for v in itertools.product((-1, 0, 1, 2), repeat=3):
        v = np.array(v, dtype=float)
        if not v.any():
            continue
        k = np.flatnonzero(v)[0]
        v = v if v[k] > 0 else -v
        key = tuple(np.round(v / np.linalg.norm(v), 12))
        if key not in seen:
            seen.add(key)
            rays.append(v / np.linalg.norm(v))
    triads = [t for t in itertools.combinations(range(len(rays)), 3)
              if all(abs(rays[a] @ rays[b]) < 1e-12 for a, b in itertools.combinations(t, 2))]
    return rays, triads


def _from_triads(rays, triads, rng, limit):
    order = rng.permutation(len(triads))
    chosen, used = [], set()
    target = int(rng.integers(1, 10))
    # prefer triads that touch what is already there, so contexts overlap
    for _ in range(target):
        touching = [i for i in order if set(triads[i]) & used and triads[i] not in chosen]
        pool = touching if touching and rng.random() < 0.8 else [i for i in order if triads[i] not in chosen]
        if not pool:
            break
        t = triads[pool[0]]
        if len(used | set(t)) > limit:
            break
        chosen.append(t)
        used |= set(t)
        order = rng.permutation(len(triads))
    ids = sorted(used)
    pos = {r: k for k, r in enumerate(ids)}
    elements = [OneTimeHistory(np.outer(rays[r], rays[r].conj()), 0.0, f"r{r}") for r in ids]
    return make_context_set(elements, [[pos[r] for r in t] for t in chosen])


def _subset_of(name, rng, limit):
    c = load_rays(name)
    k = int(rng.integers(1, len(c.contexts) + 1))
    if name == "cabello18" and rng.random() < 0.5:
        k = len(c.contexts)  # the full set is the interesting unsat case
    ctxs = [c.contexts[i] for i in rng.choice(len(c.contexts), size=k, replace=False)]
    chosen, used = [], set()
    for ctx in ctxs:
        if len(used | set(ctx)) > limit:
            continue
        chosen.append(ctx)
        used |= set(ctx)
    ids = sorted(used)
    pos = {r: k for k, r in enumerate(ids)}
    return make_context_set([c.elements[r] for r in ids], [[pos[r] for r in ctx] for ctx in chosen])


def random_context_set(rng, limit=20):
    kind = int(rng.integers(4))
    if kind == 0:
        rays, triads = integer_pool()
        return _from_triads(rays, triads, rng, limit)
    if kind == 1:
        return _subset_of("cabello18", rng, limit)
    if kind == 2:
        return _subset_of("peres33", rng, limit)
    theta = float(rng.uniform(0.05, np.pi / 2 - 0.05))
    return spin1_chain([theta])[1]
