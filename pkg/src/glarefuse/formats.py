"""Detection / ground-truth JSON, images and masks on disk.

A detection document describes one image::

    {"image_id": "img_001", "source_id": "original",
     "boxes": [{"bbox": [x_min, y_min, x_max, y_max], "score": 0.91, "label": 0}]}

Ground truth is the same minus ``score`` and with a ``domain`` tag. Files hold
either one document (``.json``), a JSON list of documents, or one document per
line (``.jsonl``).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Union

import numpy as np
from PIL import Image

from .evaluation import GroundTruth
from .geometry import Box
from .wbf import DetectionSet

PathLike = Union[str, Path]
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


class FormatError(ValueError):
    """A detection or ground-truth document does not follow the expected schema."""


def _box_from_json(obj: dict, with_score: bool) -> Box:
    try:
        bbox = obj["bbox"]
        if len(bbox) != 4:
            raise FormatError(f"bbox must have 4 numbers, got {bbox!r}")
        score = float(obj["score"]) if with_score else 1.0
        return Box.from_coords(bbox, score=score, label=int(obj.get("label", 0)))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed box entry {obj!r}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"invalid box {obj!r}: {exc}") from exc


def _box_to_json(b: Box, with_score: bool) -> dict:
    out = {"bbox": [b.x_min, b.y_min, b.x_max, b.y_max]}
    if with_score:
        out["score"] = b.score
    out["label"] = b.label
    return out


def detection_from_json(doc: dict) -> DetectionSet:
    if not isinstance(doc, dict) or "image_id" not in doc or "boxes" not in doc:
        raise FormatError("detection document needs 'image_id' and 'boxes'")
    return DetectionSet(
        image_id=str(doc["image_id"]),
        source_id=str(doc.get("source_id", "")),
        boxes=[_box_from_json(b, with_score=True) for b in doc["boxes"]],
        model_weight=float(doc.get("model_weight", 1.0)),
    )


def detection_to_json(ds: DetectionSet) -> dict:
    doc = {
        "image_id": ds.image_id,
        "source_id": ds.source_id,
        "boxes": [_box_to_json(b, with_score=True) for b in ds.boxes],
    }
    if ds.model_weight != 1.0:
        doc["model_weight"] = ds.model_weight
    return doc


def ground_truth_from_json(doc: dict) -> GroundTruth:
    if not isinstance(doc, dict) or "image_id" not in doc or "boxes" not in doc:
        raise FormatError("ground-truth document needs 'image_id' and 'boxes'")
    return GroundTruth(
        image_id=str(doc["image_id"]),
        domain=str(doc.get("domain", "default")),
        boxes=[_box_from_json(b, with_score=False) for b in doc["boxes"]],
    )


def ground_truth_to_json(gt: GroundTruth, glare_boxes: Iterable[Box] = ()) -> dict:
    doc = {
        "image_id": gt.image_id,
        "domain": gt.domain,
        "boxes": [_box_to_json(b, with_score=False) for b in gt.boxes],
    }
    glare = [list(b.coords) for b in glare_boxes]
    if glare:
        doc["glare_boxes"] = glare
    return doc


def glare_boxes_from_json(doc: dict) -> list[Box]:
    return [Box.from_coords(c) for c in doc.get("glare_boxes", [])]


def read_documents(path: PathLike) -> list[dict]:
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix == ".jsonl":
            return [json.loads(line) for line in text.splitlines() if line.strip()]
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    return doc if isinstance(doc, list) else [doc]


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: PathLike, docs: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for doc in docs:
            fh.write(dumps(doc) + "\n")


def read_detections(path: PathLike) -> list[DetectionSet]:
    """Detection sets from a file, or from every ``*.json``/``*.jsonl`` in a directory."""
    path = Path(path)
    files = sorted(p for p in path.iterdir() if p.suffix in (".json", ".jsonl")) if path.is_dir() else [path]
    return [detection_from_json(d) for f in files for d in read_documents(f)]


def read_ground_truth(path: PathLike) -> list[GroundTruth]:
    path = Path(path)
    files = sorted(p for p in path.iterdir() if p.suffix in (".json", ".jsonl")) if path.is_dir() else [path]
    return [ground_truth_from_json(d) for f in files for d in read_documents(f)]


def read_glare_boxes(path: PathLike) -> dict[str, list[Box]]:
    """image_id -> glare regions, from ground-truth files written by the synthetic generator."""
    path = Path(path)
    files = sorted(p for p in path.iterdir() if p.suffix in (".json", ".jsonl")) if path.is_dir() else [path]
    return {str(d["image_id"]): glare_boxes_from_json(d) for f in files for d in read_documents(f)}


def list_images(directory: PathLike) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def read_image(path: PathLike) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            return np.asarray(im.convert("L"))
        return np.asarray(im.convert("RGB"))


def write_image(path: PathLike, img: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(img, dtype=np.uint8)).save(path)


def write_mask(path: PathLike, mask: np.ndarray) -> None:
    """8-bit single-channel PNG: 0 keep, 255 inpaint."""
    write_image(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def read_mask(path: PathLike) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 127
