"""
Metric arithmetic
=================

MRE, improvement and convergence buckets on hand-made records.
"""

# %%
from hybridsolve.metrics import (
    ASSISTED, DIRECT, PredictionRecord, build_report, format_csv, format_text, improvement,
)

# Six models as (direct MRE, assisted MRE).
models = {
    "model-a": (0.765, 0.246), "model-b": (0.891, 0.262), "model-c": (0.865, 0.258),
    "model-d": (1.237, 0.225), "model-e": (1.085, 0.301), "model-f": (1.155, 0.250),
}
for name, (d, a) in models.items():
    print(f"{name}: {improvement(d, a):.1f}%")

# %%
# Records that reproduce those MREs exactly, spread over two domains, with a
# few slow and failed solves mixed in.
iters = [3, 8, 12, 40, 250, 1000]
records, by_model = [], {}
for name, (d, a) in models.items():
    recs = []
    for pid in range(1, 7):
        gt = 0.5 * pid
        dom = "electronics" if pid % 2 else "heat_transfer"
        status = "max_iterations" if iters[pid - 1] == 1000 else "converged"
        recs.append(PredictionRecord(pid, dom, DIRECT, gt * (1 + d), gt))
        recs.append(PredictionRecord(pid, dom, ASSISTED, gt * (1 - a), gt, iters[pid - 1], status))
    by_model[name] = recs
    records += recs

report = build_report(records, by_model)
print(format_text(report))

# %%
print(format_csv(by_model["model-a"])[:400])
