"""Two slits on a periodic chain: fringes on the screen, and which-slit questions."""

import numpy as np

from histkit import check_consistency, decoherence_functional
from histkit.queries import run_query
from histkit.scenarios import two_slit

s = two_slit()

# at the first time the particle is at one slit or the other, never absorbed
d = decoherence_functional(s.family("t1"), s.initial_state)
print("slit probabilities:", {k: round(v, 6) for k, v in d.probabilities().items()})

# screen profile after the slits, summed over both slits
prof = run_query(s, {"op": "profile", "family": "t1t2", "prefix": "@1:d12"})
for k, p in enumerate(prof["profile"]):
    print(f"D{k:<3} {p:.4f} " + "#" * int(200 * p))
print("local maxima:", prof["local_maxima"], "visibility: %.3f" % prof["visibility"])

# which slit, then which bin: the two branches interfere
for name in ("t1t2", "twotimes"):
    rep = check_consistency(decoherence_functional(s.family(name), s.initial_state), "medium")
    print(f"{name:>9}: consistent={rep.passed} degree={rep.degree:.3f}")

audit = run_query(s, {"op": "audit", "family": "twotimes", "slice": 1, "members": ["d1", "d2"]})
print("slit additivity gap: %.3f" % audit["selected"]["max_discrepancy"])
dt = decoherence_functional(s.family("twotimes"), s.initial_state).entries
print("largest |D| off the diagonal: %.4f" % np.max(np.abs(dt - np.diag(np.diag(dt)))))
