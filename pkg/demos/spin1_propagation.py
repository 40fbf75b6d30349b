"""Spin-1 triples about a shared z axis: one truth value forces the rest."""

import math

from histkit import propagate_truth, verify_pba_axioms
from histkit.scenarios import spin1_chain

_, cs = spin1_chain(thetas=(math.pi / 6, math.pi / 4, math.pi / 3))
print(len(cs), "elements,", len(cs.contexts), "contexts")
print("axioms:", verify_pba_axioms(cs).passed)

res = propagate_truth({"alpha": 1}, cs)
for lab in ("alpha", "Sx2", "Sy2", "Sz2", "alpha_30", "beta_30", "Sz2_30", "Sz2_60"):
    print(f"  h[{lab}] = {res.forced.get(cs, lab)}")

# setting two members of one triple true is refused
bad = propagate_truth({"alpha": 1, "beta": 1}, cs)
print("conflict:", bad.conflict)
