"""
Both paradigms without a network
================================

The mock formulator answers each query with the exact residual, and the echo
answerer returns the reference value, so this exercises the plumbing end to
end. Perturbations show what a sloppy formulator looks like.
"""

# %%
from hybridsolve.domains import generate_dataset
from hybridsolve.harness import EchoAnswerer, MockFormulator, run_assisted, run_direct
from hybridsolve.metrics import build_report, format_text

ds = generate_dataset(seed=0)

direct = run_direct(ds, EchoAnswerer(ds, scale=1.25))
assisted = run_assisted(ds, MockFormulator(ds))
print(format_text(build_report(direct.records + assisted.records)))

# %%
# Every assisted record keeps the raw exchange for auditing.
x = assisted.exchanges[0]
print(x["response"])
print(x["solver"])

# %%
for knob in ("wrong_constant", "bad_x0", "wrong_sign"):
    run = run_assisted(ds, MockFormulator(ds, knob))
    report = build_report(run.records)
    print(f"{knob:15s} MRE={report.assisted_mre:.3f}  buckets={report.buckets.counts}")

# %%
# Saving a run writes the records, a manifest and the exchanges next to each other.
import tempfile
from pathlib import Path

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "assisted.jsonl"
    assisted.save(path)
    print(sorted(p.name for p in Path(tmp).iterdir()))
