"""Command line: ``glarefuse {mask,inpaint,fuse,eval,synth,run}``.

Exit status is 0 on success, 1 when some images failed (they are logged and
skipped) and 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import formats
from .adapter import DEFAULT_TIMEOUT, DETECTOR_ENV
from .benchmark import write_scenes
from .evaluation import DEFAULT_CONF_THRESHOLDS, evaluate, report_csv, report_table
from .glare_mask import MaskParams, build_mask
from .inpaint import InpaintParams, inpaint_ns
from .pipeline import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_PARTIAL,
    VARIANTS,
    ConfigError,
    PipelineConfig,
    SmoothParams,
    run_pipeline,
)
from .synth import DEFAULT_DOMAINS, SimDetectorSpec, benchmark_scenes
from .wbf import SCORE_MODES, FusionParams, fuse

log = logging.getLogger("glarefuse")


def _floats(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _names(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _add_mask_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("glare mask")
    g.add_argument("--low", type=int, default=170, help="lower brightness threshold (default 170)")
    g.add_argument("--high", type=int, default=255, help="upper brightness threshold (default 255)")
    g.add_argument("--blur", type=int, default=9, help="Gaussian kernel size (default 9)")
    g.add_argument("--blur-sigma", type=float, default=None, help="Gaussian sigma (default derived from size)")
    g.add_argument("--erode", type=int, default=2, help="erosion iterations (default 2)")
    g.add_argument("--dilate", type=int, default=4, help="dilation iterations (default 4)")
    g.add_argument("--morph-kernel", type=int, default=3, help="square structuring element size (default 3)")


def _add_inpaint_flags(ap: argparse.ArgumentParser) -> None:
    d = InpaintParams()
    g = ap.add_argument_group("inpainting")
    g.add_argument("--radius", type=int, default=d.radius)
    g.add_argument("--max-iters", type=int, default=d.max_iters)
    g.add_argument("--dt", type=float, default=d.dt)
    g.add_argument("--tol", type=float, default=d.tol)
    g.add_argument("--diffusion-weight", type=float, default=d.diffusion_weight)
    g.add_argument("--diffusion-every", type=int, default=d.diffusion_every)
    g.add_argument("--harmonic-iters", type=int, default=d.harmonic_iters)


def _add_fusion_flags(ap: argparse.ArgumentParser) -> None:
    d = FusionParams()
    g = ap.add_argument_group("box fusion")
    g.add_argument("--fuse-iou", type=float, default=d.iou_thr, help=f"clustering IoU (default {d.iou_thr})")
    g.add_argument("--skip-box-thr", type=float, default=d.skip_box_thr)
    g.add_argument("--score-mode", choices=SCORE_MODES, default=d.score_mode)
    g.add_argument("--no-rescale", action="store_true", help="do not scale scores by set agreement")


def _add_eval_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("evaluation")
    g.add_argument("--iou", type=float, default=0.5, help="match IoU, strictly exceeded (default 0.5)")
    g.add_argument("--conf", type=_floats, default=DEFAULT_CONF_THRESHOLDS,
                   help="confidence thresholds (default 0.25,0.30,0.35)")


def _add_sim_flags(ap: argparse.ArgumentParser) -> None:
    d = SimDetectorSpec()
    g = ap.add_argument_group("simulated detector")
    g.add_argument("--tp-rate", type=float, default=d.tp_rate)
    g.add_argument("--glare-fp-rate", type=float, default=d.glare_fp_rate)
    g.add_argument("--base-fp-rate", type=float, default=d.base_fp_rate)
    g.add_argument("--jitter", type=float, default=d.jitter)


def _mask_params(a) -> MaskParams:
    return MaskParams(low=a.low, high=a.high, blur_kernel=a.blur, blur_sigma=a.blur_sigma,
                      erode_iters=a.erode, dilate_iters=a.dilate, morph_kernel=a.morph_kernel)


def _inpaint_params(a) -> InpaintParams:
    return InpaintParams(radius=a.radius, max_iters=a.max_iters, dt=a.dt, tol=a.tol,
                         diffusion_weight=a.diffusion_weight, diffusion_every=a.diffusion_every,
                         harmonic_iters=a.harmonic_iters)


def _fusion_params(a) -> FusionParams:
    return FusionParams(iou_thr=a.fuse_iou, skip_box_thr=a.skip_box_thr,
                        score_mode=a.score_mode, rescale_by_models=not a.no_rescale)


def _sim_spec(a) -> SimDetectorSpec:
    return SimDetectorSpec(tp_rate=a.tp_rate, glare_fp_rate=a.glare_fp_rate,
                           base_fp_rate=a.base_fp_rate, jitter=a.jitter)


def _inputs(path: Path) -> list[Path]:
    """The image itself, or every image in a directory."""
    if path.is_dir():
        files = formats.list_images(path)
        if not files:
            raise ConfigError(f"no PNG/JPEG images in {path}")
        return files
    if not path.exists():
        raise ConfigError(f"{path} does not exist")
    return [path]


def _per_image(src_path: Path, out: Path, work) -> int:
    """Apply ``work(src, dst)`` to each input image, skipping failures; returns the exit status."""
    files = _inputs(src_path)
    failed = 0
    for src in files:
        dst = out / f"{src.stem}.png" if src_path.is_dir() else out
        try:
            work(src, dst)
        except (OSError, ValueError) as exc:
            log.error("skipping %s: %s", src, exc)
            failed += 1
    if failed == len(files):
        return EXIT_CONFIG if len(files) == 1 else EXIT_PARTIAL
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_mask(a) -> int:
    p = _mask_params(a)

    def work(src, dst):
        formats.write_mask(dst, build_mask(formats.read_image(src), p))

    return _per_image(Path(a.input), Path(a.output), work)


def cmd_inpaint(a) -> int:
    mp, ip = _mask_params(a), _inpaint_params(a)
    mask_dir = Path(a.mask) if a.mask else None

    def work(src, dst):
        img = formats.read_image(src)
        if mask_dir is None:
            mask = build_mask(img, mp)
        else:
            mask = formats.read_mask(mask_dir / f"{src.stem}.png" if mask_dir.is_dir() else mask_dir)
        formats.write_image(dst, img if not mask.any() else inpaint_ns(img, mask, ip))

    return _per_image(Path(a.input), Path(a.output), work)


def cmd_fuse(a) -> int:
    by_image: dict[str, list] = {}
    for path in a.detections:
        for ds in formats.read_detections(path):
            by_image.setdefault(ds.image_id, []).append(ds)
    p = _fusion_params(a)
    docs = [formats.detection_to_json(fuse(by_image[i], p)) for i in sorted(by_image)]
    if a.output == "-":
        for d in docs:
            print(formats.dumps(d))
    else:
        formats.write_jsonl(a.output, docs)
    return EXIT_OK


def cmd_eval(a) -> int:
    gts = formats.read_ground_truth(a.ground_truth)
    preds = {}
    for ds in formats.read_detections(a.detections):
        preds.setdefault(ds.image_id, []).extend(ds.boxes)
    name = a.name or Path(a.detections).stem
    table = {name: {t: evaluate(preds, gts, t, a.iou).ada for t in a.conf}}
    print(report_table(table, a.conf))
    if a.csv:
        Path(a.csv).parent.mkdir(parents=True, exist_ok=True)
        Path(a.csv).write_text(report_csv(table, a.conf))
    return EXIT_OK


def cmd_synth(a) -> int:
    domains = DEFAULT_DOMAINS
    if a.domains:
        wanted = set(a.domains)
        domains = tuple(d for d in DEFAULT_DOMAINS if d.name in wanted)
        missing = wanted - {d.name for d in domains}
        if missing:
            raise ConfigError(f"unknown domains {sorted(missing)}; "
                              f"choose from {[d.name for d in DEFAULT_DOMAINS]}")
    scenes = benchmark_scenes(a.seed, a.images, domains)
    write_scenes(scenes, Path(a.output))
    print(f"wrote {len(scenes)} images to {a.output}")
    return EXIT_OK


def cmd_run(a) -> int:
    cfg = PipelineConfig(
        output_dir=Path(a.output),
        input_dir=Path(a.input) if a.input else None,
        ground_truth=Path(a.ground_truth) if a.ground_truth else None,
        variants=a.variants,
        detector=a.detector,
        detector_command=a.detector_cmd,
        detections_dir=Path(a.detections) if a.detections else None,
        sim=_sim_spec(a),
        seed=a.seed,
        mask=_mask_params(a),
        inpaint=_inpaint_params(a),
        smooth=SmoothParams(kernel=a.smooth_kernel, border=a.smooth_border),
        fusion=_fusion_params(a),
        conf_thresholds=a.conf,
        match_iou=a.iou,
        workers=a.workers,
        overlays=a.overlays,
        save_variants=a.save_variants,
        timeout=a.timeout,
    )
    result = run_pipeline(cfg)
    if result.table:
        print(report_table(result.table, cfg.conf_thresholds))
    if result.failures:
        log.warning("%d image(s) failed; see %s", len(result.failures), Path(a.output) / "failures.txt")
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glarefuse", description="Glare-aware detection post-processing.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", help="binary glare mask (PNG, 255 = glare)")
    p.add_argument("input", help="image or directory of images")
    p.add_argument("output", help="mask file, or directory when the input is a directory")
    _add_mask_flags(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("inpaint", help="fill glare regions")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mask", help="precomputed mask PNG (or directory of masks); default: compute one")
    _add_mask_flags(p)
    _add_inpaint_flags(p)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("fuse", help="weighted boxes fusion of detection files, per image")
    p.add_argument("detections", nargs="+", help="detection files or directories, one per set")
    p.add_argument("-o", "--output", default="-", help="JSON-lines output (default stdout)")
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="average domain accuracy of a detection set")
    p.add_argument("detections")
    p.add_argument("ground_truth")
    p.add_argument("--name", help="row label (default: detections file stem)")
    p.add_argument("--csv", help="also write the report as CSV")
    _add_eval_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a seeded multi-domain synthetic benchmark")
    p.add_argument("output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images", type=int, default=50, help="images per domain")
    p.add_argument("--domains", type=_names, default=None,
                   help=f"subset of {','.join(d.name for d in DEFAULT_DOMAINS)}")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="variants -> detector -> fusion -> report")
    p.add_argument("--input", help="image directory")
    p.add_argument("--ground-truth", help="ground-truth file or directory")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--variants", type=_names, default=VARIANTS)
    p.add_argument("--detector", choices=("sim", "command", "files"), default="sim")
    p.add_argument("--detector-cmd", help=f"external detector command (or set {DETECTOR_ENV})")
    p.add_argument("--detections", help="directory of precomputed detections for --detector files")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="per-image detector timeout (s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--overlays", action="store_true", help="write overlay PNGs")
    p.add_argument("--save-variants", action="store_true", help="write variant images")
    p.add_argument("--smooth-kernel", type=int, default=SmoothParams.kernel)
    p.add_argument("--smooth-border", type=int, default=SmoothParams.border)
    _add_mask_flags(p)
    _add_inpaint_flags(p)
    _add_fusion_flags(p)
    _add_eval_flags(p)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except (ConfigError, formats.FormatError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
