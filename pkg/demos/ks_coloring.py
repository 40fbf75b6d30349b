"""Search for two-valued valuations on Kochen-Specker ray sets."""

from histkit import load_rays, search_valuation

for name in ("cabello18", "peres33", "spin1-chain"):
    cs = load_rays(name)
    res = search_valuation(cs)
    print(f"{name:>12}: {len(cs)} elements, {len(cs.contexts)} contexts, sat={res.sat}, "
          f"nodes={res.stats['nodes']}")

# an isolated triple has exactly three valuations
tri = load_rays("ray a 1 0 0\nray b 0 1 0\nray c 0 0 1\nbasis a b c\n")
res = search_valuation(tri, enumerate_all=True)
print("single triple:", len(res.solutions), "solutions")
