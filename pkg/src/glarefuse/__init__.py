"""Glare masking, Navier-Stokes inpainting and weighted boxes fusion for detection post-processing."""

from .evaluation import GroundTruth, ada, evaluate, image_accuracy, match
from .geometry import Box, iou
from .glare_mask import MaskParams, build_mask
from .inpaint import InpaintParams, inpaint_ns
from .losses import masked_mse_loss, penalty_matrix, smooth_l1
from .wbf import DetectionSet, FusionParams, fuse

__all__ = [
    "Box", "iou", "DetectionSet", "FusionParams", "fuse", "GroundTruth", "match",
    "image_accuracy", "ada", "evaluate", "MaskParams", "build_mask", "InpaintParams",
    "inpaint_ns", "penalty_matrix", "masked_mse_loss", "smooth_l1",
]
