"""Per-image accuracy under one-to-one IoU matching and Average Domain Accuracy."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .geometry import Box, iou

DEFAULT_CONF_THRESHOLDS = (0.25, 0.30, 0.35)
DEFAULT_MATCH_IOU = 0.5


@dataclass
class GroundTruth:
    image_id: str
    domain: str
    boxes: list[Box] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.domain:
            raise ValueError("ground truth needs a non-empty domain tag")


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: list[tuple[int, int, float]] = field(default_factory=list)


@dataclass
class DomainReport:
    per_domain: dict[str, tuple[int, float]]
    ada: float


def match(
    preds: Sequence[Box],
    gts: Sequence[Box],
    iou_thr: float = DEFAULT_MATCH_IOU,
    conf_thr: float = 0.0,
) -> MatchResult:
    """Greedy one-to-one matching, most confident prediction first.

    Each kept prediction takes the still-unmatched ground truth of highest IoU
    if that IoU is strictly above ``iou_thr``. Pair indices refer to the
    original ``preds`` and ``gts`` sequences.
    """
    if not 0.0 < iou_thr <= 1.0:
        raise ValueError("iou_thr must lie in (0, 1]")
    kept = [i for i, b in enumerate(preds) if b.score >= conf_thr]
    kept.sort(key=lambda i: (-preds[i].score, preds[i].coords, i))

    free = set(range(len(gts)))
    pairs = []
    for i in kept:
        best, best_iou = None, iou_thr
        for j in sorted(free):
            v = iou(preds[i], gts[j])
            if v > best_iou:
                best, best_iou = j, v
        if best is not None:
            free.discard(best)
            pairs.append((i, best, best_iou))
    tp = len(pairs)
    return MatchResult(tp=tp, fp=len(kept) - tp, fn=len(gts) - tp, pairs=pairs)


def image_accuracy(m: MatchResult) -> float:
    denom = m.tp + m.fp + m.fn
    if denom == 0:
        return 1.0
    return m.tp / denom


def ada(reports: Iterable[tuple[str, Sequence[float]]]) -> DomainReport:
    """Average the per-image accuracies within each domain, then across domains.

    ``reports`` yields ``(domain, accuracies)`` pairs; repeated domains are merged.
    """
    grouped: dict[str, list[float]] = {}
    for domain, accs in reports:
        grouped.setdefault(domain, []).extend(accs)
    if not grouped:
        raise ValueError("need at least one domain")
    per_domain = {}
    for domain in sorted(grouped):
        accs = grouped[domain]
        if not accs:
            raise ValueError(f"domain {domain!r} has no images")
        per_domain[domain] = (len(accs), sum(accs) / len(accs))
    means = [per_domain[d][1] for d in per_domain]
    return DomainReport(per_domain=per_domain, ada=sum(means) / len(means))


def evaluate(
    predictions: Mapping[str, Sequence[Box]],
    ground_truth: Iterable[GroundTruth],
    conf_thr: float,
    iou_thr: float = DEFAULT_MATCH_IOU,
) -> DomainReport:
    """ADA of ``predictions`` (image_id -> boxes) at one confidence threshold.

    Images without predictions count as empty predictions.
    """
    by_domain: dict[str, list[float]] = {}
    for gt in ground_truth:
        m = match(predictions.get(gt.image_id, ()), gt.boxes, iou_thr, conf_thr)
        by_domain.setdefault(gt.domain, []).append(image_accuracy(m))
    return ada(by_domain.items())


def format_threshold(t: float) -> str:
    return f"{t:.2f}"


def report_csv(table: Mapping[str, Mapping[float, float]], thresholds: Sequence[float]) -> str:
    """Rows are variant combinations, columns confidence thresholds."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["variants"] + [format_threshold(t) for t in thresholds])
    for row, values in table.items():
        writer.writerow([row] + [f"{values[t]:.6f}" for t in thresholds])
    return buf.getvalue()


def report_table(table: Mapping[str, Mapping[float, float]], thresholds: Sequence[float]) -> str:
    header = ["Variants"] + [f"conf {format_threshold(t)}" for t in thresholds]
    rows = [[row] + [f"{values[t]:.3f}" for t in thresholds] for row, values in table.items()]
    widths = [max(len(r[k]) for r in [header] + rows) for k in range(len(header))]
    line = "+".join("-" * (w + 2) for w in widths)

    def fmt(cells):
        return "|".join(f" {c:<{w}} " for c, w in zip(cells, widths))

    return "\n".join([fmt(header), line] + [fmt(r) for r in rows])
