"""
Generating the problem set
==========================

Seven domains, each a single unknown, each with a bracketed reference root.
"""

# %%
from collections import Counter

from hybridsolve.domains import build_residual, exact_root, generate_dataset, dumps_dataset, dataset_fingerprint
from hybridsolve import expr as ex

ds = generate_dataset(seed=0)
print(len(ds), "problems")
print(Counter(p.domain.value for p in ds))

# %%
# One problem from each domain: the query text, the residual and the reference root.
seen = set()
for p in ds:
    if p.domain in seen:
        continue
    seen.add(p.domain)
    r = build_residual(p.domain, p.params)
    print(f"[{p.domain.value}] {p.query}")
    print("   f(x) =", ex.render(r.expr))
    print(f"   root {exact_root(p.domain, p.params):.9g}  stored as {p.ground_truth}\n")

# %%
# Same seed, same bytes.
assert dumps_dataset(generate_dataset(0)) == dumps_dataset(ds)
print(dataset_fingerprint(ds))

# %%
# A smaller set for quick experiments.
small = generate_dataset(seed=3, counts={"electronics": 3, "heat_transfer": 2})
for p in small:
    print(p.id, p.domain.value, p.ground_truth)
