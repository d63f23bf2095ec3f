"""Seeded synthetic scenes with glare and a detector that is fooled by it.

Scenes contain textured elliptical "heads" (the objects to detect) and soft
bright glare blobs. The simulated detector finds heads with a fixed hit rate
and additionally reports a box on every glare blob that is still bright in the
image it is shown, so inpainted variants lose those false positives.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .evaluation import GroundTruth
from .geometry import Box
from .glare_mask import to_grayscale
from .wbf import DetectionSet

GLARE_GATE = 170
BACKGROUND_TINT = (12.0, 0.0, -18.0)
HEAD_TINT = (8.0, 4.0, -30.0)


@dataclass
class SceneSpec:
    seed: int = 0
    width: int = 128
    height: int = 128
    n_heads: int = 12
    n_glare: int = 2
    head_intensity_range: tuple[int, int] = (105, 150)
    glare_intensity_range: tuple[int, int] = (210, 255)
    background_intensity: int = 70
    domain: str = "synthetic"
    head_axes_range: tuple[float, float] = (3.0, 6.0)
    glare_radius_range: tuple[float, float] = (5.0, 9.0)
    glare_softness: float = 3.0
    max_retries: int = 500

    def __post_init__(self) -> None:
        if self.width < 8 or self.height < 8:
            raise ValueError("scene must be at least 8x8")
        if self.n_heads < 0 or self.n_glare < 0:
            raise ValueError("object counts must be non-negative")
        lo, hi = self.glare_intensity_range
        if not GLARE_GATE <= lo <= hi <= 255:
            raise ValueError(f"glare intensities must lie within [{GLARE_GATE}, 255]")
        lo, hi = self.head_intensity_range
        if not 0 <= lo <= hi <= 255:
            raise ValueError("head intensities must lie within [0, 255]")
        if not 0 <= self.background_intensity <= 255:
            raise ValueError("background intensity must lie within [0, 255]")
        if not 1.0 <= self.head_axes_range[0] <= self.head_axes_range[1]:
            raise ValueError("head axes must be >= 1 pixel")
        if not 1.0 <= self.glare_radius_range[0] <= self.glare_radius_range[1]:
            raise ValueError("glare radius must be >= 1 pixel")
        if not self.domain:
            raise ValueError("domain must be non-empty")


@dataclass
class Scene:
    image: np.ndarray
    ground_truth: GroundTruth
    glare_boxes: list[Box]
    glare_footprint: np.ndarray

    @property
    def image_id(self) -> str:
        return self.ground_truth.image_id


@dataclass
class SimDetectorSpec:
    tp_rate: float = 0.9
    glare_fp_rate: float = 0.8
    base_fp_rate: float = 0.1
    max_base_fp: int = 2
    jitter: float = 0.8
    tp_score_range: tuple[float, float] = (0.55, 0.98)
    fp_score_range: tuple[float, float] = (0.30, 0.70)
    brightness_gate: float = GLARE_GATE

    def __post_init__(self) -> None:
        for name in ("tp_rate", "glare_fp_rate", "base_fp_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.jitter < 0 or self.max_base_fp < 0:
            raise ValueError("jitter and max_base_fp must be non-negative")
        tlo, thi = self.tp_score_range
        flo, fhi = self.fp_score_range
        if not (0 <= tlo <= thi <= 1 and 0 <= flo <= fhi <= 1):
            raise ValueError("score ranges must be ordered sub-ranges of [0, 1]")
        if flo > tlo or fhi > thi:
            raise ValueError("false-positive scores must be stochastically below true-positive scores")


def derive_seed(base: int, *keys: str) -> int:
    """Stable 64-bit seed from a base seed and string keys (independent of PYTHONHASHSEED)."""
    words = [int(base) & 0xFFFFFFFF] + [zlib.crc32(k.encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def _ellipse(shape, cy, cx, a, b, theta) -> np.ndarray:
    yy, xx = np.indices(shape, dtype=np.float64)
    dy, dx = yy + 0.5 - cy, xx + 0.5 - cx
    c, s = np.cos(theta), np.sin(theta)
    u = (dx * c + dy * s) / a
    v = (-dx * s + dy * c) / b
    return u * u + v * v <= 1.0


def _pixel_bbox(region: np.ndarray) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(region.any(axis=1))
    cols = np.flatnonzero(region.any(axis=0))
    return cols[0], rows[0], cols[-1] + 1, rows[-1] + 1


def _free(occupied: np.ndarray, region: np.ndarray) -> bool:
    x0, y0, x1, y1 = _pixel_bbox(region)
    # one pixel of clearance between objects
    return not occupied[max(y0 - 1, 0):y1 + 1, max(x0 - 1, 0):x1 + 1].any()


def _mark(occupied: np.ndarray, region: np.ndarray) -> None:
    x0, y0, x1, y1 = _pixel_bbox(region)
    occupied[y0:y1, x0:x1] = True


def generate_scene(spec: SceneSpec, image_id: Optional[str] = None) -> Scene:
    rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    image_id = image_id or f"{spec.domain}_{spec.seed}"
    tint = np.asarray(BACKGROUND_TINT)
    canvas = np.empty((h, w, 3), dtype=np.float64)
    canvas[:] = spec.background_intensity + tint
    occupied = np.zeros((h, w), dtype=bool)

    # glare first: big objects are the hardest to place
    glare_boxes = []
    footprint = np.zeros((h, w), dtype=bool)
    yy, xx = np.indices((h, w), dtype=np.float64)
    for _ in range(spec.n_glare):
        for _ in range(spec.max_retries):
            r = rng.uniform(*spec.glare_radius_range)
            reach = r + spec.glare_softness
            cy = rng.uniform(reach, h - reach)
            cx = rng.uniform(reach, w - reach)
            dist = np.hypot(yy + 0.5 - cy, xx + 0.5 - cx)
            ramp = np.clip((reach - dist) / spec.glare_softness, 0.0, 1.0)
            weight = 0.5 - 0.5 * np.cos(np.pi * ramp)
            region = weight > 0
            if 2 * reach < min(h, w) and _free(occupied, region):
                break
        else:
            raise ValueError(f"could not place glare blob after {spec.max_retries} tries")
        peak = rng.uniform(*spec.glare_intensity_range)
        canvas = canvas * (1.0 - weight[..., None]) + peak * weight[..., None]
        _mark(occupied, region)
        # pixels where the blob contributes at least half the value
        footprint |= weight >= 0.5
        glare_boxes.append(Box(*map(float, _pixel_bbox(region))))

    heads = []
    head_tint = np.asarray(HEAD_TINT)
    hlo, hhi = spec.head_intensity_range
    for _ in range(spec.n_heads):
        for _ in range(spec.max_retries):
            a = rng.uniform(*spec.head_axes_range)
            b = rng.uniform(spec.head_axes_range[0], a)
            theta = rng.uniform(0.0, np.pi)
            cy = rng.uniform(a, h - a)
            cx = rng.uniform(a, w - a)
            region = _ellipse((h, w), cy, cx, a, b, theta)
            if region.any() and _free(occupied, region):
                break
        else:
            raise ValueError(f"could not place head after {spec.max_retries} tries")
        base = rng.uniform(hlo, hhi)
        texture = rng.normal(0.0, 6.0, size=(h, w))
        shade = np.clip(base + texture, hlo, hhi)
        canvas[region] = shade[region][:, None] + head_tint
        _mark(occupied, region)
        heads.append(Box(*map(float, _pixel_bbox(region))))

    image = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
    gt = GroundTruth(image_id=image_id, domain=spec.domain, boxes=heads)
    return Scene(image=image, ground_truth=gt, glare_boxes=glare_boxes, glare_footprint=footprint)


def _jittered(rng, coords, jitter: float, width: int, height: int) -> tuple[float, ...]:
    noise = rng.normal(0.0, 1.0, size=4) * jitter
    x0, y0, x1, y1 = (float(c + n) for c, n in zip(coords, noise))
    x0, x1 = min(max(x0, 0.0), width - 1.0), min(max(x1, 1.0), float(width))
    y0, y1 = min(max(y0, 0.0), height - 1.0), min(max(y1, 1.0), float(height))
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    return x0, y0, x1, y1


def region_brightness(gray: np.ndarray, box: Box) -> float:
    """Mean intensity over the central half (per axis) of ``box``."""
    h, w = gray.shape
    qx = 0.25 * (box.x_max - box.x_min)
    qy = 0.25 * (box.y_max - box.y_min)
    x0, y0 = max(int(np.floor(box.x_min + qx)), 0), max(int(np.floor(box.y_min + qy)), 0)
    x1, y1 = min(int(np.ceil(box.x_max - qx)), w), min(int(np.ceil(box.y_max - qy)), h)
    if x1 <= x0 or y1 <= y0:
        return 0.0
    return float(gray[y0:y1, x0:x1].mean())


def simulate_detector(
    img: np.ndarray,
    gt: GroundTruth,
    glare_regions: Sequence[Box],
    spec: SimDetectorSpec,
    seed: int,
    source_id: str = "sim",
) -> DetectionSet:
    """Detections for ``img``; glare boxes appear only where the image is still bright.

    Random draws are made in a fixed order per object whatever the outcome, so
    the same seed gives the same head detections on every variant of an image.
    """
    rng = np.random.default_rng(seed)
    gray = to_grayscale(img)
    h, w = gray.shape
    boxes = []

    for g in gt.boxes:
        hit = rng.random() < spec.tp_rate
        coords = _jittered(rng, g.coords, spec.jitter, w, h)
        score = rng.uniform(*spec.tp_score_range)
        if hit:
            boxes.append(Box(*coords, score=score, label=g.label))

    for region in glare_regions:
        fires = rng.random() < spec.glare_fp_rate
        coords = _jittered(rng, region.coords, spec.jitter, w, h)
        score = rng.uniform(*spec.fp_score_range)
        if fires and region_brightness(gray, region) > spec.brightness_gate:
            boxes.append(Box(*coords, score=score, label=0))

    for _ in range(spec.max_base_fp):
        fires = rng.random() < spec.base_fp_rate
        bw, bh = rng.uniform(6.0, 12.0, size=2)
        x0 = rng.uniform(0.0, max(w - bw, 0.0))
        y0 = rng.uniform(0.0, max(h - bh, 0.0))
        score = rng.uniform(*spec.fp_score_range)
        if fires:
            boxes.append(Box(x0, y0, min(x0 + bw, w), min(y0 + bh, h), score=score, label=0))

    return DetectionSet(image_id=gt.image_id, source_id=source_id, boxes=boxes)


@dataclass
class DomainTemplate:
    name: str
    scene: SceneSpec = field(default_factory=SceneSpec)


DEFAULT_DOMAINS = (
    DomainTemplate("sunlit_soil", SceneSpec(background_intensity=95, n_heads=10, n_glare=3)),
    DomainTemplate("dark_canopy", SceneSpec(background_intensity=45, n_heads=16, n_glare=2)),
    DomainTemplate("mixed_field", SceneSpec(background_intensity=70, n_heads=12, n_glare=4,
                                            head_intensity_range=(115, 160))),
)


def benchmark_scenes(
    seed: int,
    images_per_domain: int = 50,
    domains: Sequence[DomainTemplate] = DEFAULT_DOMAINS,
) -> list[Scene]:
    scenes = []
    for d in domains:
        for k in range(images_per_domain):
            image_id = f"{d.name}_{k:04d}"
            spec = replace(d.scene, seed=derive_seed(seed, d.name, str(k)), domain=d.name)
            scenes.append(generate_scene(spec, image_id=image_id))
    return scenes
