"""Three boxes: each family alone infers a different box from the same post-selection."""

from histkit import SingleFamilyViolation, implies
from histkit.hislogic import conjunction
from histkit.queries import parse_mask_spec
from histkit.scenarios import three_box

s = three_box()
w = s.initial_state
f1, f2 = s.family("fam1"), s.family("fam2")

for f, box in ((f1, "A"), (f2, "B")):
    post = parse_mask_spec("@2:10", f)
    both = parse_mask_spec("@1:10;@2:10", f)
    r = implies(post, both, f, w)
    print(f"{f.name}: phi => {box} ({r.verdict}, ratio {r.ratio:.6f})")

# the two inferences live in different families and cannot be combined
a = parse_mask_spec("@1:10;@2:10", f1)
b = parse_mask_spec("@1:10;@2:10", f2)
try:
    conjunction(a, b, f1)
except SingleFamilyViolation as exc:
    print("refused:", exc)
