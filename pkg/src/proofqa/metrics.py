"""Answer / proof / full accuracy with a per-depth breakdown.

A proof prediction counts as correct when its node set and edge set both
equal those of ANY gold proof.  Full accuracy needs the answer and the
proof right on the same example, so FA <= min(QA, PA) by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import IdMismatch, LengthMismatch
from .reasoner import Example


@dataclass
class DepthRow:
    count: int = 0
    qa: float = 0.0
    pa: float = 0.0
    fa: float = 0.0


@dataclass
class Metrics:
    qa: float
    pa: float
    fa: float
    per_depth: dict[int, DepthRow] = field(default_factory=dict)
    count: int = 0


def evaluate(predictions, examples) -> Metrics:
    """Aggregate accuracies for aligned prediction/example sequences.

    The sequences must have equal length; ids are checked whenever a
    prediction carries one.
    """
    predictions = list(predictions)
    examples = list(examples)
    if len(predictions) != len(examples):
        raise LengthMismatch(
            f"{len(predictions)} predictions vs {len(examples)} examples")

    qa_hits: dict[int, int] = {}
    pa_hits: dict[int, int] = {}
    fa_hits: dict[int, int] = {}
    counts: dict[int, int] = {}
    for pred, ex in zip(predictions, examples):
        if pred.example_id is not None and pred.example_id != ex.id:
            raise IdMismatch(f"prediction {pred.example_id} aligned with {ex.id}")
        d = ex.depth
        counts[d] = counts.get(d, 0) + 1
        answer_ok = bool(pred.answer) == bool(ex.answer)
        proof_ok = any(pred.proof.nodes == g.nodes and pred.proof.edges == g.edges
                       for g in ex.gold_proofs)
        qa_hits[d] = qa_hits.get(d, 0) + answer_ok
        pa_hits[d] = pa_hits.get(d, 0) + proof_ok
        fa_hits[d] = fa_hits.get(d, 0) + (answer_ok and proof_ok)

    total = sum(counts.values())
    per_depth = {
        d: DepthRow(count=c,
                    qa=qa_hits.get(d, 0) / c,
                    pa=pa_hits.get(d, 0) / c,
                    fa=fa_hits.get(d, 0) / c)
        for d, c in sorted(counts.items())
    }
    if total == 0:
        return Metrics(qa=0.0, pa=0.0, fa=0.0, per_depth={}, count=0)
    return Metrics(
        qa=sum(qa_hits.values()) / total,
        pa=sum(pa_hits.values()) / total,
        fa=sum(fa_hits.values()) / total,
        per_depth=per_depth,
        count=total,
    )


def report(metrics: Metrics) -> dict:
    """JSON-ready document mirroring the metrics object."""
    return {
        "qa": metrics.qa,
        "pa": metrics.pa,
        "fa": metrics.fa,
        "per_depth": {
            str(d): {"count": row.count, "qa": row.qa, "pa": row.pa, "fa": row.fa}
            for d, row in metrics.per_depth.items()
        },
    }


def format_table(metrics: Metrics) -> str:
    """Plain-text table with one row per depth plus a footer for all depths."""
    lines = [f"{'D':>3}  {'Cnt':>5}  {'QA':>6}  {'PA':>6}  {'FA':>6}"]
    for d, row in metrics.per_depth.items():
        lines.append(f"{d:>3}  {row.count:>5}  {row.qa:>6.3f}  {row.pa:>6.3f}  {row.fa:>6.3f}")
    lines.append(f"{'All':>3}  {metrics.count:>5}  {metrics.qa:>6.3f}  "
                 f"{metrics.pa:>6.3f}  {metrics.fa:>6.3f}")
    return "\n".join(lines)
