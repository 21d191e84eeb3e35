"""Tagging metrics: token accuracy and exact-match chunk precision/recall/F1.

Chunks are decoded from BIO labels leniently: an "I-X" with no live chunk
of type X opens a new one instead of crashing, since decoded model output
is not constrained to legal BIO transitions. A predicted chunk counts as
correct only when the gold side contains an identical (type, start, end)
span in the same sentence. All 0/0 ratios are defined as 0.

Plain (non-BIO) label sets get token accuracy only; the chunk fields of
their reports are None.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import LabelScheme
from .errors import ShapeMismatchError


@dataclass(frozen=True)
class ChunkSpan:
    """One labeled span: [start, end) token indices within a sentence."""

    type: str
    start: int
    end: int


@dataclass(frozen=True)
class TypeMetrics:
    precision: float
    recall: float
    f1: float
    gold_count: float
    pred_count: float
    runs_missing: int = 0  # only nonzero in aggregated reports


@dataclass(frozen=True)
class EvalReport:
    token_accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    per_type: dict[str, TypeMetrics] = field(default_factory=dict)


def extract_chunks(labels) -> list[ChunkSpan]:
    """Decode maximal BIO spans; spans come out disjoint and start-sorted."""
    chunks: list[ChunkSpan] = []
    open_type = None
    open_start = 0
    for i, label in enumerate(labels):
        if label.startswith("B-"):
            boundary, ctype = True, label[2:]
        elif label.startswith("I-"):
            ctype = label[2:]
            boundary = ctype != open_type
        else:
            boundary, ctype = True, None
        if boundary and open_type is not None:
            chunks.append(ChunkSpan(open_type, open_start, i))
            open_type = None
        if boundary and ctype is not None:
            open_type, open_start = ctype, i
    if open_type is not None:
        chunks.append(ChunkSpan(open_type, open_start, len(labels)))
    return chunks


def _prf(correct: int, pred: int, gold: int) -> tuple[float, float, float]:
    p = correct / pred if pred else 0.0
    r = correct / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def score(gold, pred, scheme: LabelScheme = LabelScheme.BIO) -> EvalReport:
    """Compare label sequences; ``gold`` and ``pred`` must align exactly."""
    gold = [tuple(g) for g in gold]
    pred = [tuple(p) for p in pred]
    if len(gold) != len(pred):
        raise ShapeMismatchError(
            f"{len(gold)} gold sentences vs {len(pred)} predicted"
        )
    total = matched = 0
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ShapeMismatchError(
                f"sentence {i}: gold has {len(g)} tokens, prediction has {len(p)}"
            )
        total += len(g)
        matched += sum(a == b for a, b in zip(g, p))
    accuracy = matched / total if total else 0.0

    if scheme is not LabelScheme.BIO:
        return EvalReport(accuracy, None, None, None, {})

    correct = pred_n = gold_n = 0
    by_type: dict[str, list[int]] = {}  # type -> [correct, pred, gold]
    for g, p in zip(gold, pred):
        gold_chunks = set(extract_chunks(g))
        pred_chunks = set(extract_chunks(p))
        correct += len(gold_chunks & pred_chunks)
        pred_n += len(pred_chunks)
        gold_n += len(gold_chunks)
        for ctype in {c.type for c in gold_chunks | pred_chunks}:
            counts = by_type.setdefault(ctype, [0, 0, 0])
            g_t = {c for c in gold_chunks if c.type == ctype}
            p_t = {c for c in pred_chunks if c.type == ctype}
            counts[0] += len(g_t & p_t)
            counts[1] += len(p_t)
            counts[2] += len(g_t)

    p, r, f1 = _prf(correct, pred_n, gold_n)
    per_type = {}
    for ctype in sorted(by_type):
        c_t, p_t, g_t = by_type[ctype]
        tp, tr, tf = _prf(c_t, p_t, g_t)
        per_type[ctype] = TypeMetrics(tp, tr, tf, g_t, p_t)
    return EvalReport(accuracy, p, r, f1, per_type)


def primary_metric(report: EvalReport) -> float:
    """Chunk F1 when available, token accuracy otherwise."""
    return report.f1 if report.f1 is not None else report.token_accuracy


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def aggregate_runs(reports: list[EvalReport]) -> EvalReport:
    """Field-wise arithmetic mean over runs.

    A type absent from some run contributes 0 to that run's mean and the
    aggregate records how many runs lacked it in ``runs_missing``.
    """
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    n = len(reports)
    chunked = reports[0].f1 is not None

    per_type = {}
    all_types = sorted({t for rep in reports for t in rep.per_type})
    zero = TypeMetrics(0.0, 0.0, 0.0, 0.0, 0.0)
    for ctype in all_types:
        rows = [rep.per_type.get(ctype, zero) for rep in reports]
        per_type[ctype] = TypeMetrics(
            precision=_mean(m.precision for m in rows),
            recall=_mean(m.recall for m in rows),
            f1=_mean(m.f1 for m in rows),
            gold_count=_mean(m.gold_count for m in rows),
            pred_count=_mean(m.pred_count for m in rows),
            runs_missing=sum(ctype not in rep.per_type for rep in reports),
        )
    return EvalReport(
        token_accuracy=_mean(r.token_accuracy for r in reports),
        precision=_mean(r.precision for r in reports) if chunked else None,
        recall=_mean(r.recall for r in reports) if chunked else None,
        f1=_mean(r.f1 for r in reports) if chunked else None,
        per_type=per_type,
    )


def report_to_dict(report: EvalReport) -> dict:
    """JSON-ready form of a report (used by run records and the CLI)."""
    return {
        "token_accuracy": report.token_accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "per_type": {
            t: {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "gold_count": m.gold_count,
                "pred_count": m.pred_count,
                "runs_missing": m.runs_missing,
            }
            for t, m in report.per_type.items()
        },
    }


def report_from_dict(data: dict) -> EvalReport:
    per_type = {
        t: TypeMetrics(
            precision=m["precision"],
            recall=m["recall"],
            f1=m["f1"],
            gold_count=m["gold_count"],
            pred_count=m["pred_count"],
            runs_missing=m.get("runs_missing", 0),
        )
        for t, m in data["per_type"].items()
    }
    return EvalReport(
        token_accuracy=data["token_accuracy"],
        precision=data["precision"],
        recall=data["recall"],
        f1=data["f1"],
        per_type=per_type,
    )
