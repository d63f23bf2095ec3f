"""Simulated detector as an external program, for exercising the detector adapter.

    glarefuse-simdet --gt ground_truth.jsonl --seed 0 work/inpainted/img_001.png

The image id is the file stem and the variant (source id) is the parent
directory name unless ``--source`` is given. Prints one detection document.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import formats
from .synth import SimDetectorSpec, derive_seed, simulate_detector


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="glarefuse-simdet", description=__doc__.splitlines()[0])
    ap.add_argument("image")
    ap.add_argument("--gt", required=True, help="ground-truth file or directory (with glare boxes)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--source", default=None)
    ap.add_argument("--tp-rate", type=float, default=SimDetectorSpec.tp_rate)
    ap.add_argument("--glare-fp-rate", type=float, default=SimDetectorSpec.glare_fp_rate)
    ap.add_argument("--base-fp-rate", type=float, default=SimDetectorSpec.base_fp_rate)
    ap.add_argument("--jitter", type=float, default=SimDetectorSpec.jitter)
    args = ap.parse_args(argv)

    path = Path(args.image)
    image_id = path.stem
    source = args.source or path.parent.name
    gts = {g.image_id: g for g in formats.read_ground_truth(args.gt)}
    if image_id not in gts:
        print(f"no ground truth for {image_id}", file=sys.stderr)
        return 3
    glare = formats.read_glare_boxes(args.gt).get(image_id, [])
    spec = SimDetectorSpec(tp_rate=args.tp_rate, glare_fp_rate=args.glare_fp_rate,
                           base_fp_rate=args.base_fp_rate, jitter=args.jitter)
    ds = simulate_detector(formats.read_image(path), gts[image_id], glare, spec,
                           derive_seed(args.seed, image_id), source)
    json.dump(formats.detection_to_json(ds), sys.stdout)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
