"""Spin-1/2 prepared along +x, asked about z at one time."""

from histkit import check_consistency, decoherence_functional
from histkit.scenarios import spin_half

s = spin_half()
fam = s.family("z")
d = decoherence_functional(fam, s.initial_state)

print("D =")
print(d.entries.round(6))
print("probabilities:", d.probabilities())

# a one-time family always decoheres
rep = check_consistency(d, "medium")
print("medium consistent:", rep.passed, "degree", rep.degree)
