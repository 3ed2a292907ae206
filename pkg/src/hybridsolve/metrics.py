"""Relative-error metrics, per-domain tables and convergence buckets."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

from .domains import DOMAINS, DomainId

DIRECT = "direct"
ASSISTED = "assisted"

FAST_MAX = 15
SLOW_MAX = 100
BUCKETS = ("fast", "slow", "very_slow", "failed")

# statuses that are not a finished (if slow) Newton run
FAILED_STATUSES = {"derivative_vanished", "eval_error", "formulation_error", "transport_error"}


@dataclass
class PredictionRecord:
    problem_id: int
    domain: DomainId
    paradigm: str
    predicted: float
    ground_truth: float
    iterations: Optional[int] = None
    solve_status: Optional[str] = None
    annotation: Optional[str] = None

    def __post_init__(self):
        self.domain = DomainId(self.domain)
        if self.paradigm not in (DIRECT, ASSISTED):
            raise ValueError(f"paradigm must be {DIRECT!r} or {ASSISTED!r}, got {self.paradigm!r}")
        if self.predicted is None:
            self.predicted = math.nan
        self.predicted = float(self.predicted)
        self.ground_truth = float(self.ground_truth)
        if self.paradigm == ASSISTED and (self.iterations is None or self.solve_status is None):
            raise ValueError("assisted records carry iterations and solve_status")
        if self.paradigm == DIRECT and (self.iterations is not None or self.solve_status is not None):
            raise ValueError("direct records carry no solver fields")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["domain"] = self.domain.value
        # JSON has no NaN; null stands for a missing prediction
        d["predicted"] = None if math.isnan(self.predicted) else self.predicted
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PredictionRecord":
        return cls(**data)


def relative_error(predicted: float, ground_truth: float) -> float:
    return abs(predicted - ground_truth) / abs(ground_truth)


def _valid(r: PredictionRecord) -> bool:
    return not math.isnan(r.ground_truth) and not math.isnan(r.predicted) and r.ground_truth != 0


def mean_relative_error(records: Iterable[PredictionRecord]) -> float:
    """Mean relative error over records with a usable prediction and a non-zero truth.

    Records with NaN on either side, or a zero ground truth, are skipped. An
    empty selection gives NaN.
    """
    errors = [relative_error(r.predicted, r.ground_truth) for r in records if _valid(r)]
    if not errors:
        return math.nan
    return math.fsum(errors) / len(errors)


def improvement(direct_mre: float, assisted_mre: float) -> float:
    """Percentage reduction of MRE going from direct to assisted."""
    if not direct_mre > 0:
        raise ValueError(f"direct MRE must be positive, got {direct_mre!r}")
    return (direct_mre - assisted_mre) / direct_mre * 100.0


def _improvement_or_nan(direct_mre: float, assisted_mre: float) -> float:
    if math.isnan(direct_mre) or math.isnan(assisted_mre) or direct_mre <= 0:
        return math.nan
    return improvement(direct_mre, assisted_mre)


def bucket_of(record: PredictionRecord) -> str:
    """Convergence bucket of one assisted record.

    A run that exhausted the iteration cap counts as very slow; runs that
    stopped on a vanished derivative, a non-finite value or a formulation
    problem count as failed. Fewer than 5 iterations is still fast.
    """
    status = record.solve_status
    if status in FAILED_STATUSES or record.iterations is None:
        return "failed"
    if status not in ("converged", "max_iterations"):
        return "failed"
    if record.iterations <= FAST_MAX:
        return "fast"
    if record.iterations <= SLOW_MAX:
        return "slow"
    return "very_slow"


@dataclass
class BucketTable:
    counts: dict
    percentages: dict
    failure_reasons: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def convergence_buckets(records: Iterable[PredictionRecord]) -> BucketTable:
    counts = dict.fromkeys(BUCKETS, 0)
    reasons: dict = defaultdict(int)
    for r in records:
        if r.paradigm != ASSISTED:
            raise ValueError("convergence buckets apply to assisted records only")
        b = bucket_of(r)
        counts[b] += 1
        if b == "failed" or r.solve_status == "max_iterations":
            reasons[r.solve_status or "unknown"] += 1
    total = sum(counts.values())
    pct = {k: (100.0 * v / total if total else 0.0) for k, v in counts.items()}
    return BucketTable(counts, pct, dict(reasons))


@dataclass
class DomainRow:
    domain: DomainId
    n: int
    direct_mre: float
    assisted_mre: float
    improvement: float


def per_domain_aggregate(records: Iterable[PredictionRecord]) -> list[DomainRow]:
    """One row per domain present, in the canonical domain order.

    ``n`` counts distinct problems in the domain.
    """
    grouped: dict = defaultdict(lambda: {DIRECT: [], ASSISTED: []})
    for r in records:
        grouped[r.domain][r.paradigm].append(r)
    rows = []
    for domain in DOMAINS:
        if domain not in grouped:
            continue
        g = grouped[domain]
        n = len({r.problem_id for r in g[DIRECT] + g[ASSISTED]})
        d = mean_relative_error(g[DIRECT])
        a = mean_relative_error(g[ASSISTED])
        rows.append(DomainRow(domain, n, d, a, _improvement_or_nan(d, a)))
    return rows


@dataclass
class ModelRow:
    model: str
    direct_mre: float
    assisted_mre: float
    improvement: float


@dataclass
class MetricsReport:
    direct_mre: float
    assisted_mre: float
    improvement_percent: float
    domains: list
    buckets: BucketTable
    models: list = field(default_factory=list)
    unparseable: int = 0

    @property
    def mean_model_improvement(self) -> float:
        """Average of the per-model improvements (not the improvement of the pooled MREs)."""
        vals = [m.improvement for m in self.models if not math.isnan(m.improvement)]
        return math.fsum(vals) / len(vals) if vals else math.nan

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and math.isnan(v):
                return None
            if isinstance(v, dict):
                return {str(k): clean(x) for k, x in v.items()}
            if isinstance(v, list):
                return [clean(x) for x in v]
            if isinstance(v, DomainId):
                return v.value
            return v

        return clean({
            "direct_mre": self.direct_mre,
            "assisted_mre": self.assisted_mre,
            "improvement_percent": self.improvement_percent,
            "mean_model_improvement": self.mean_model_improvement,
            "unparseable": self.unparseable,
            "models": [asdict(m) for m in self.models],
            "domains": [asdict(r) for r in self.domains],
            "convergence": {
                "counts": self.buckets.counts,
                "percentages": self.buckets.percentages,
                "failure_reasons": self.buckets.failure_reasons,
            },
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_report(records: Sequence[PredictionRecord], models: Optional[dict] = None) -> MetricsReport:
    """Aggregate records into a report.

    ``models`` optionally maps a model label to that model's records and adds
    one overall row per model.
    """
    direct = [r for r in records if r.paradigm == DIRECT]
    assisted = [r for r in records if r.paradigm == ASSISTED]
    d = mean_relative_error(direct)
    a = mean_relative_error(assisted)
    rows = []
    for name, recs in (models or {}).items():
        md = mean_relative_error(r for r in recs if r.paradigm == DIRECT)
        ma = mean_relative_error(r for r in recs if r.paradigm == ASSISTED)
        rows.append(ModelRow(name, md, ma, _improvement_or_nan(md, ma)))
    return MetricsReport(
        direct_mre=d,
        assisted_mre=a,
        improvement_percent=_improvement_or_nan(d, a),
        domains=per_domain_aggregate(records),
        buckets=convergence_buckets(assisted),
        models=rows,
        unparseable=sum(1 for r in records if math.isnan(r.predicted)),
    )


# ---------------------------------------------------------------------------
# text / csv output

def _num(v: float, digits: int = 3) -> str:
    return "-" if math.isnan(v) else f"{v:.{digits}f}"


def _pct(v: float) -> str:
    return "-" if math.isnan(v) else f"{v:.1f}%"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    lines = []
    for i, row in enumerate([header, *rows]):
        cells = [str(c).ljust(w) if j == 0 else str(c).rjust(w) for j, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def format_text(report: MetricsReport) -> str:
    parts = []
    rows = [[m.model, _num(m.direct_mre), _num(m.assisted_mre), _pct(m.improvement)] for m in report.models]
    if report.models:
        rows.append(["Mean", _num(report.direct_mre), _num(report.assisted_mre),
                     _pct(report.mean_model_improvement)])
    else:
        rows.append(["All", _num(report.direct_mre), _num(report.assisted_mre),
                     _pct(report.improvement_percent)])
    parts.append("Overall performance\n" + _table(["Model", "Direct MRE", "Assisted MRE", "Improvement"], rows))

    rows = [[r.domain.value, str(r.n), _num(r.direct_mre), _num(r.assisted_mre), _pct(r.improvement)]
            for r in report.domains]
    parts.append("Per-domain performance\n" + _table(["Domain", "N", "Direct", "Assisted", "Improvement"], rows))

    b = report.buckets
    rows = [[k, str(b.counts[k]), _pct(b.percentages[k])] for k in BUCKETS]
    parts.append("Newton-Raphson convergence\n" + _table(["Bucket", "Count", "Share"], rows))
    if report.unparseable:
        parts.append(f"records without a usable prediction: {report.unparseable}")
    return "\n\n".join(parts) + "\n"


def format_csv(records: Iterable[PredictionRecord]) -> str:
    """Per-record CSV with relative error, for external plotting."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["problem_id", "domain", "paradigm", "predicted", "ground_truth",
                "relative_error", "iterations", "solve_status", "bucket"])
    for r in records:
        err = relative_error(r.predicted, r.ground_truth) if _valid(r) else math.nan
        w.writerow([r.problem_id, r.domain.value, r.paradigm, r.predicted, r.ground_truth, err,
                    "" if r.iterations is None else r.iterations, r.solve_status or "",
                    bucket_of(r) if r.paradigm == ASSISTED else ""])
    return buf.getvalue()
