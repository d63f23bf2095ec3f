"""Seeded random detection instances with plenty of overlap and score ties."""

from __future__ import annotations

import numpy as np

from glarefuse.geometry import Box, iou
from glarefuse.wbf import DetectionSet


def random_box(rng, centres, labels=(0,), tie_scores=False) -> Box:
    cx, cy = centres[rng.integers(len(centres))]
    w, h = rng.uniform(4, 14, 2)
    x0, y0 = cx - w / 2 + rng.normal(0, 1.5), cy - h / 2 + rng.normal(0, 1.5)
    score = rng.choice([0.3, 0.5, 0.9]) if tie_scores else rng.uniform(0.01, 1.0)
    return Box(x0, y0, x0 + w, y0 + h, score=float(score), label=int(rng.choice(labels)))


def random_sets(rng, max_boxes=12, max_sets=4) -> list[DetectionSet]:
    n_sets = int(rng.integers(1, max_sets + 1))
    n_boxes = int(rng.integers(0, max_boxes + 1))
    centres = rng.uniform(10, 60, (int(rng.integers(1, 4)), 2))
    ties = bool(rng.random() < 0.3)
    owner = rng.integers(0, n_sets, n_boxes)
    sets = []
    for k in range(n_sets):
        boxes = [random_box(rng, centres, (0, 1), ties) for _ in range(int((owner == k).sum()))]
        weight = float(rng.choice([0.5, 1.0, 2.0]))
        sets.append(DetectionSet("img", f"s{k}", boxes, weight))
    return sets


def non_overlapping(boxes, thr) -> list[Box]:
    """Drop boxes until no same-label pair overlaps with IoU above ``thr``."""
    kept = []
    for b in boxes:
        if all(b.label != k.label or iou(b, k) <= thr for k in kept):
            kept.append(b)
    return kept


def random_matching(rng, max_per_side=6) -> tuple[list[Box], list[Box]]:
    centres = rng.uniform(10, 40, (int(rng.integers(1, 4)), 2))
    preds = [random_box(rng, centres) for _ in range(int(rng.integers(0, max_per_side + 1)))]
    gts = [random_box(rng, centres).with_score(1.0) for _ in range(int(rng.integers(0, max_per_side + 1)))]
    return preds, gts
