"""Weighted boxes fusion across detection sets of one image."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .geometry import Box, iou


@dataclass
class DetectionSet:
    image_id: str
    source_id: str
    boxes: list[Box] = field(default_factory=list)
    model_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.model_weight <= 0:
            raise ValueError("model_weight must be positive")
        for b in self.boxes:
            if not isinstance(b, Box):
                raise TypeError(f"expected Box, got {type(b).__name__}")


SCORE_MODES = ("mean", "weighted-mean")


@dataclass
class FusionParams:
    iou_thr: float = 0.55
    skip_box_thr: float = 0.0
    score_mode: str = "weighted-mean"
    rescale_by_models: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_thr <= 1.0:
            raise ValueError("iou_thr must lie in (0, 1]")
        if not 0.0 <= self.skip_box_thr < 1.0:
            raise ValueError("skip_box_thr must lie in [0, 1)")
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}")


@dataclass
class _Member:
    box: Box
    weight: float
    source: str
    set_index: int


def _box_order(b: Box) -> tuple:
    return (-b.score, b.x_min, b.y_min, b.x_max, b.y_max, b.label)


def _fused_coords(members: list[_Member]) -> tuple[float, float, float, float]:
    ws = [m.box.score * m.weight for m in members]
    total = sum(ws)
    if total <= 0.0:
        ws = [1.0] * len(members)
        total = float(len(members))
    coords = []
    for k in range(4):
        c = sum(w * m.box.coords[k] for w, m in zip(ws, members)) / total
        # keep inside the members' hull despite rounding
        lo = min(m.box.coords[k] for m in members)
        hi = max(m.box.coords[k] for m in members)
        coords.append(min(max(c, lo), hi))
    return tuple(coords)


def _fused_score(members: list[_Member], mode: str) -> float:
    if mode == "mean":
        return sum(m.box.score for m in members) / len(members)
    total_w = sum(m.weight for m in members)
    return sum(m.box.score * m.weight for m in members) / total_w


def cluster_boxes(
    sets: Sequence[DetectionSet], p: FusionParams | None = None
) -> list[tuple[Box, list[tuple[int, Box]]]]:
    """Greedy clustering behind :func:`fuse`.

    Boxes are visited in descending score order. Each joins the first cluster
    (in creation order) of the same label whose running fused box overlaps it
    with IoU strictly above ``iou_thr``; otherwise it seeds a new cluster.
    Returns ``(fused box, [(set index, member box), ...])`` in creation order.
    """
    p = p or FusionParams()
    if not sets:
        raise ValueError("need at least one detection set")
    image_ids = {s.image_id for s in sets}
    if len(image_ids) != 1:
        raise ValueError(f"detection sets disagree on image_id: {sorted(image_ids)}")

    members = [
        _Member(b, s.model_weight, s.source_id, i)
        for i, s in enumerate(sets)
        for b in s.boxes
        if b.score >= p.skip_box_thr
    ]
    members.sort(key=lambda m: (_box_order(m.box), m.source, m.weight))

    clusters: list[list[_Member]] = []
    fused: list[Box] = []
    for m in members:
        for k, fb in enumerate(fused):
            if fb.label == m.box.label and iou(fb, m.box) > p.iou_thr:
                clusters[k].append(m)
                fused[k] = Box(*_fused_coords(clusters[k]), score=0.0, label=fb.label)
                break
        else:
            clusters.append([m])
            fused.append(Box(*m.box.coords, score=0.0, label=m.box.label))

    n_sets = len(sets)
    out = []
    for members_k, fb in zip(clusters, fused):
        score = _fused_score(members_k, p.score_mode)
        if p.rescale_by_models:
            n_sources = len({m.set_index for m in members_k})
            score *= min(n_sources, n_sets) / n_sets
        out.append((fb.with_score(min(max(score, 0.0), 1.0)),
                    [(m.set_index, m.box) for m in members_k]))
    return out


def fuse(sets: Sequence[DetectionSet], p: FusionParams | None = None) -> DetectionSet:
    """Fuse detection sets of a single image into one set, sorted by score then position."""
    boxes = sorted((fb for fb, _ in cluster_boxes(sets, p)), key=_box_order)
    source = "+".join(s.source_id for s in sorted(sets, key=lambda s: s.source_id))
    return DetectionSet(sets[0].image_id, f"wbf({source})", boxes)
