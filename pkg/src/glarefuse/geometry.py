"""Axis-aligned boxes and overlap arithmetic.

Coordinates are continuous pixel positions in the image frame (origin top-left);
a box covers ``[x_min, x_max) x [y_min, y_max)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float = 1.0
    label: int = 0

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"box must have positive area, got ({self.x_min}, {self.y_min}, "
                f"{self.x_max}, {self.y_max})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if self.label < 0 or int(self.label) != self.label:
            raise ValueError(f"label must be a non-negative integer, got {self.label}")

    @property
    def coords(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @classmethod
    def from_coords(cls, coords: Sequence[float], score: float = 1.0, label: int = 0) -> "Box":
        x0, y0, x1, y1 = (float(c) for c in coords)
        return cls(x0, y0, x1, y1, float(score), int(label))

    def with_score(self, score: float) -> "Box":
        return Box(self.x_min, self.y_min, self.x_max, self.y_max, score, self.label)

    def shifted(self, dx: float, dy: float) -> "Box":
        return Box(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy,
                   self.score, self.label)


def area(a: Box) -> float:
    return (a.x_max - a.x_min) * (a.y_max - a.y_min)


def intersection(a: Box, b: Box) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 for disjoint or edge-touching boxes."""
    if a.coords == b.coords:
        return 1.0
    inter = intersection(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (area(a) + area(b) - inter)


def enclosing(boxes: Iterable[Box]) -> tuple[float, float, float, float]:
    """Componentwise (min x_min, min y_min, max x_max, max y_max)."""
    boxes = list(boxes)
    if not boxes:
        raise ValueError("need at least one box")
    return (
        min(b.x_min for b in boxes),
        min(b.y_min for b in boxes),
        max(b.x_max for b in boxes),
        max(b.y_max for b in boxes),
    )
