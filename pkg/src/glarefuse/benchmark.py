"""Seeded synthetic benchmark: ADA of every variant combination, no disk I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import formats
from .evaluation import DEFAULT_CONF_THRESHOLDS, DEFAULT_MATCH_IOU
from .glare_mask import MaskParams
from .inpaint import InpaintParams
from .pipeline import VARIANTS, SimulatedDetector, SmoothParams, make_variants, score_table
from .synth import DEFAULT_DOMAINS, DomainTemplate, Scene, SimDetectorSpec, benchmark_scenes
from .wbf import FusionParams


@dataclass
class BenchmarkConfig:
    images_per_domain: int = 50
    domains: Sequence[DomainTemplate] = DEFAULT_DOMAINS
    detector: SimDetectorSpec = field(default_factory=SimDetectorSpec)
    variants: tuple[str, ...] = VARIANTS
    mask: MaskParams = field(default_factory=MaskParams)
    inpaint: InpaintParams = field(default_factory=InpaintParams)
    smooth: SmoothParams = field(default_factory=SmoothParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    conf_thresholds: tuple[float, ...] = DEFAULT_CONF_THRESHOLDS
    match_iou: float = DEFAULT_MATCH_IOU


def run_benchmark(seed: int, cfg: BenchmarkConfig | None = None) -> dict[str, dict[float, float]]:
    """ADA table (combination name -> threshold -> ADA) for one benchmark seed."""
    cfg = cfg or BenchmarkConfig()
    scenes = benchmark_scenes(seed, cfg.images_per_domain, cfg.domains)
    detector = SimulatedDetector(
        cfg.detector,
        seed,
        {s.image_id: s.ground_truth for s in scenes},
        {s.image_id: s.glare_boxes for s in scenes},
    )
    detections = {}
    for s in scenes:
        images = make_variants(s.image, cfg.variants, cfg.mask, cfg.inpaint, cfg.smooth)
        detections[s.image_id] = {v: detector(s.image_id, v, im) for v, im in images.items()}
    table, _ = score_table(detections, [s.ground_truth for s in scenes], cfg.variants,
                           cfg.fusion, cfg.conf_thresholds, cfg.match_iou)
    return table


def write_scenes(scenes: Sequence[Scene], out_dir: Path) -> None:
    """``images/<id>.png`` plus ``ground_truth.jsonl`` (with domain and glare boxes)."""
    out_dir = Path(out_dir)
    for s in scenes:
        formats.write_image(out_dir / "images" / f"{s.image_id}.png", s.image)
    formats.write_jsonl(
        out_dir / "ground_truth.jsonl",
        (formats.ground_truth_to_json(s.ground_truth, s.glare_boxes) for s in scenes),
    )
