"""End-to-end workflow: image variants -> detections -> box fusion -> evaluation.

For every image the original, an inpainted copy (glare mask + Navier-Stokes
fill) and a smoothed copy (inpainted, then blurred along the mask border) are
run through a detector. Every combination of variants that contains the
original is fused and, when ground truth is available, scored at each
confidence threshold.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw

from . import formats
from .adapter import DEFAULT_TIMEOUT, AdapterError, detector_adapter
from .evaluation import (
    DEFAULT_CONF_THRESHOLDS,
    DEFAULT_MATCH_IOU,
    DomainReport,
    GroundTruth,
    evaluate,
    report_csv,
    report_table,
)
from .geometry import Box
from .glare_mask import MaskParams, build_mask, default_sigma, dilate, erode, gaussian_blur_float
from .inpaint import InpaintParams, inpaint_ns
from .synth import SimDetectorSpec, derive_seed, simulate_detector
from .wbf import DetectionSet, FusionParams, fuse

log = logging.getLogger(__name__)

ORIGINAL, INPAINTED, SMOOTHED = "original", "inpainted", "smoothed"
VARIANTS = (ORIGINAL, INPAINTED, SMOOTHED)

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class SmoothParams:
    kernel: int = 5
    sigma: Optional[float] = None
    border: int = 2


def smooth_inpainted(inpainted: np.ndarray, mask: np.ndarray, p: SmoothParams) -> np.ndarray:
    """Blur ``inpainted`` only on a band of ``p.border`` pixels around the mask edge."""
    out = inpainted.copy()
    if not mask.any() or p.border == 0:
        return out
    band = dilate(mask, 3, p.border) & ~erode(mask, 3, p.border)
    sigma = p.sigma if p.sigma is not None else default_sigma(p.kernel)
    blurred = gaussian_blur_float(inpainted, p.kernel, sigma)
    out[band] = np.clip(np.rint(blurred[band]), 0, 255).astype(out.dtype)
    return out


def make_variants(
    img: np.ndarray,
    variants: Sequence[str],
    mask_p: MaskParams,
    inpaint_p: InpaintParams,
    smooth_p: SmoothParams,
) -> dict[str, np.ndarray]:
    out = {ORIGINAL: img}
    if INPAINTED in variants or SMOOTHED in variants:
        mask = build_mask(img, mask_p)
        if mask.all():
            # nothing left to inpaint from; every variant degenerates to the original
            filled = img
        else:
            filled = inpaint_ns(img, mask, inpaint_p)
        if INPAINTED in variants:
            out[INPAINTED] = filled
        if SMOOTHED in variants:
            out[SMOOTHED] = smooth_inpainted(filled, mask, smooth_p)
    return {v: out[v] for v in variants}


def variant_combinations(variants: Sequence[str]) -> list[tuple[str, ...]]:
    """Every combination containing the original, smallest first, in variant order."""
    ordered = [v for v in VARIANTS if v in variants]
    extras = [v for v in ordered if v != ORIGINAL]
    combos = []
    for k in range(len(extras) + 1):
        for extra in combinations(extras, k):
            combos.append((ORIGINAL,) + extra)
    return combos


def combo_name(combo: Sequence[str]) -> str:
    return "+".join(combo)


def combine(sets: Mapping[str, DetectionSet], combo: Sequence[str], p: FusionParams) -> DetectionSet:
    """Raw detections for the original alone, fused detections otherwise."""
    if len(combo) == 1:
        return sets[combo[0]]
    return fuse([sets[v] for v in combo], p)


# -- detectors ---------------------------------------------------------------

Detector = Callable[[str, str, Optional[np.ndarray]], DetectionSet]


@dataclass
class SimulatedDetector:
    """In-process stand-in for a trained detector.

    The seed depends on the image only, so every variant of an image sees the
    same head detections and background false positives; the variants differ
    only where the glare was removed.
    """

    spec: SimDetectorSpec
    seed: int
    ground_truth: Mapping[str, GroundTruth]
    glare: Mapping[str, list[Box]] = field(default_factory=dict)
    needs_images = True

    def __call__(self, image_id: str, variant: str, image: Optional[np.ndarray]) -> DetectionSet:
        gt = self.ground_truth.get(image_id)
        if gt is None:
            raise KeyError(f"simulated detector has no ground truth for {image_id!r}")
        seed = derive_seed(self.seed, image_id)
        return simulate_detector(image, gt, self.glare.get(image_id, []), self.spec, seed, variant)


@dataclass
class CommandDetector:
    """Writes each variant to ``workdir/<variant>/<image_id>.png`` and runs the external program."""

    command: Optional[str]
    workdir: Path
    timeout: float = DEFAULT_TIMEOUT
    needs_images = True

    def __call__(self, image_id: str, variant: str, image: Optional[np.ndarray]) -> DetectionSet:
        path = Path(self.workdir) / variant / f"{image_id}.png"
        formats.write_image(path, image)
        ds = detector_adapter(self.command, path, self.timeout)
        return DetectionSet(image_id, variant, ds.boxes, ds.model_weight)


class FileDetector:
    """Pre-computed detections: ``<dir>/<variant>.jsonl``, ``<dir>/<variant>.json`` or ``<dir>/<variant>/``."""

    needs_images = False

    def __init__(self, directory: Path, variants: Sequence[str]):
        self.sets: dict[str, dict[str, DetectionSet]] = {}
        directory = Path(directory)
        for v in variants:
            candidates = [directory / f"{v}.jsonl", directory / f"{v}.json", directory / v]
            found = next((c for c in candidates if c.exists()), None)
            if found is None:
                raise ConfigError(f"no detections for variant {v!r} under {directory}")
            self.sets[v] = {ds.image_id: ds for ds in formats.read_detections(found)}

    def image_ids(self) -> list[str]:
        return sorted({i for sets in self.sets.values() for i in sets})

    def __call__(self, image_id: str, variant: str, image: Optional[np.ndarray]) -> DetectionSet:
        ds = self.sets[variant].get(image_id)
        if ds is None:
            return DetectionSet(image_id, variant, [])
        return DetectionSet(image_id, variant, ds.boxes, ds.model_weight)


def variant_images(
    image: Optional[np.ndarray],
    variants: Sequence[str],
    detector: Detector,
    mask_p: MaskParams,
    inpaint_p: InpaintParams,
    smooth_p: SmoothParams,
) -> dict[str, Optional[np.ndarray]]:
    """Variant pixels, or ``None`` placeholders for detectors that never look at them."""
    if not getattr(detector, "needs_images", True):
        return {v: None for v in variants}
    if image is None:
        raise ValueError("detector needs pixels but no image was loaded")
    return make_variants(image, variants, mask_p, inpaint_p, smooth_p)


# -- configuration and orchestration -----------------------------------------


@dataclass
class PipelineConfig:
    output_dir: Path
    input_dir: Optional[Path] = None
    ground_truth: Optional[Path] = None
    variants: tuple[str, ...] = VARIANTS
    detector: str = "sim"
    detector_command: Optional[str] = None
    detections_dir: Optional[Path] = None
    sim: SimDetectorSpec = field(default_factory=SimDetectorSpec)
    seed: int = 0
    mask: MaskParams = field(default_factory=MaskParams)
    inpaint: InpaintParams = field(default_factory=InpaintParams)
    smooth: SmoothParams = field(default_factory=SmoothParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    conf_thresholds: tuple[float, ...] = DEFAULT_CONF_THRESHOLDS
    match_iou: float = DEFAULT_MATCH_IOU
    workers: int = 1
    overlays: bool = False
    save_variants: bool = False
    timeout: float = DEFAULT_TIMEOUT

    def validate(self) -> None:
        if not self.variants:
            raise ConfigError("at least one variant is required")
        unknown = set(self.variants) - set(VARIANTS)
        if unknown:
            raise ConfigError(f"unknown variants {sorted(unknown)}; choose from {VARIANTS}")
        if ORIGINAL not in self.variants:
            raise ConfigError("the original variant is always fused and must be included")
        if self.detector not in ("sim", "command", "files"):
            raise ConfigError(f"unknown detector mode {self.detector!r}")
        if self.detector == "files" and self.detections_dir is None:
            raise ConfigError("detector mode 'files' needs a detections directory")
        if self.detector == "sim" and self.ground_truth is None:
            raise ConfigError("the simulated detector needs ground truth (with glare boxes)")
        if self.detector != "files" and self.input_dir is None:
            raise ConfigError(f"detector mode {self.detector!r} needs an input image directory")
        if self.input_dir is not None and not Path(self.input_dir).is_dir():
            raise ConfigError(f"input directory {self.input_dir} does not exist")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.conf_thresholds:
            raise ConfigError("at least one confidence threshold is required")

    @property
    def ordered_variants(self) -> tuple[str, ...]:
        return tuple(v for v in VARIANTS if v in self.variants)


@dataclass
class PipelineResult:
    detections: dict[str, dict[str, DetectionSet]]
    fused: dict[str, DetectionSet]
    table: dict[str, dict[float, float]]
    reports: dict[str, dict[float, DomainReport]]
    failures: dict[str, str]

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failures else EXIT_OK


def _build_detector(cfg: PipelineConfig, gts: Mapping[str, GroundTruth]) -> Detector:
    if cfg.detector == "sim":
        glare = formats.read_glare_boxes(cfg.ground_truth)
        return SimulatedDetector(cfg.sim, cfg.seed, gts, glare)
    if cfg.detector == "command":
        return CommandDetector(cfg.detector_command, Path(cfg.output_dir) / "work", cfg.timeout)
    return FileDetector(Path(cfg.detections_dir), cfg.ordered_variants)


_worker_state: dict = {}


def _init_worker(cfg: PipelineConfig, detector: Detector) -> None:
    _worker_state["cfg"] = cfg
    _worker_state["detector"] = detector


def _process_one(task: tuple[str, Optional[str]]):
    image_id, path = task
    cfg: PipelineConfig = _worker_state["cfg"]
    detector: Detector = _worker_state["detector"]
    try:
        image = formats.read_image(path) if path is not None else None
        images = variant_images(image, cfg.ordered_variants, detector,
                                cfg.mask, cfg.inpaint, cfg.smooth)
        sets = {v: detector(image_id, v, im) for v, im in images.items()}
        fused = combine(sets, cfg.ordered_variants, cfg.fusion)
        if cfg.save_variants:
            for v, im in images.items():
                if im is not None:
                    formats.write_image(Path(cfg.output_dir) / "variants" / v / f"{image_id}.png", im)
        if cfg.overlays and image is not None:
            render_overlay(image, sets[ORIGINAL], fused, min(cfg.conf_thresholds)).save(
                _mkparent(Path(cfg.output_dir) / "overlays" / f"{image_id}.png"))
        return image_id, sets, None
    except (AdapterError, OSError, ValueError, KeyError) as exc:
        return image_id, None, f"{type(exc).__name__}: {exc}"


def _mkparent(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def render_overlay(image: np.ndarray, original: DetectionSet, fused: DetectionSet,
                   min_score: float) -> Image.Image:
    """Side by side: original detections (left) and fused detections (right)."""
    base = Image.fromarray(image).convert("RGB")
    w, h = base.size
    canvas = Image.new("RGB", (2 * w, h))
    for k, (ds, colour) in enumerate(((original, (230, 40, 40)), (fused, (40, 220, 60)))):
        panel = base.copy()
        draw = ImageDraw.Draw(panel)
        for b in ds.boxes:
            if b.score >= min_score:
                draw.rectangle([b.x_min, b.y_min, b.x_max - 1, b.y_max - 1], outline=colour)
        canvas.paste(panel, (k * w, 0))
    return canvas


def _image_tasks(cfg: PipelineConfig, gts: Mapping[str, GroundTruth], detector: Detector):
    if cfg.input_dir is not None:
        paths = formats.list_images(cfg.input_dir)
        if not paths:
            raise ConfigError(f"no PNG/JPEG images in {cfg.input_dir}")
        return [(p.stem, str(p)) for p in paths]
    ids = set(gts)
    if isinstance(detector, FileDetector):
        ids |= set(detector.image_ids())
    return [(i, None) for i in sorted(ids)]


def score_table(
    detections: Mapping[str, Mapping[str, DetectionSet]],
    ground_truth: Iterable[GroundTruth],
    variants: Sequence[str],
    fusion_p: FusionParams,
    thresholds: Sequence[float],
    match_iou: float = DEFAULT_MATCH_IOU,
) -> tuple[dict[str, dict[float, float]], dict[str, dict[float, DomainReport]]]:
    """ADA of every variant combination at every threshold; rows keyed by combo name."""
    gts = list(ground_truth)
    table, reports = {}, {}
    for combo in variant_combinations(variants):
        preds = {
            image_id: combine(sets, combo, fusion_p).boxes
            for image_id, sets in detections.items()
        }
        name = combo_name(combo)
        reports[name] = {t: evaluate(preds, gts, t, match_iou) for t in thresholds}
        table[name] = {t: r.ada for t, r in reports[name].items()}
    return table, reports


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    gts: dict[str, GroundTruth] = {}
    if cfg.ground_truth is not None:
        gts = {g.image_id: g for g in formats.read_ground_truth(cfg.ground_truth)}
    detector = _build_detector(cfg, gts)
    tasks = _image_tasks(cfg, gts, detector)

    if cfg.workers == 1:
        _init_worker(cfg, detector)
        results = [_process_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker,
                                 initargs=(cfg, detector)) as pool:
            results = list(pool.map(_process_one, tasks))

    detections: dict[str, dict[str, DetectionSet]] = {}
    failures: dict[str, str] = {}
    for image_id, sets, err in results:
        if err is not None:
            log.error("skipping %s: %s", image_id, err)
            failures[image_id] = err
        else:
            detections[image_id] = sets

    variants = cfg.ordered_variants
    ordered_ids = sorted(detections)
    for v in variants:
        formats.write_jsonl(out / "detections" / f"{v}.jsonl",
                            (formats.detection_to_json(detections[i][v]) for i in ordered_ids))
    fused = {i: combine(detections[i], variants, cfg.fusion) for i in ordered_ids}
    formats.write_jsonl(out / "fused.jsonl", (formats.detection_to_json(fused[i]) for i in ordered_ids))

    table: dict[str, dict[float, float]] = {}
    reports: dict[str, dict[float, DomainReport]] = {}
    if gts and detections:
        scored = [gts[i] for i in sorted(gts) if i in detections]
        table, reports = score_table(detections, scored, variants, cfg.fusion,
                                     cfg.conf_thresholds, cfg.match_iou)
        (out / "report.csv").write_text(report_csv(table, cfg.conf_thresholds))
        (out / "report.txt").write_text(report_table(table, cfg.conf_thresholds) + "\n")
    if failures:
        (out / "failures.txt").write_text(
            "".join(f"{i}\t{e}\n" for i, e in sorted(failures.items())))
    return PipelineResult(detections, fused, table, reports, failures)
