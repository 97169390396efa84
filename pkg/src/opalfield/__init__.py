"""Occlusion-pattern-aware plane-sweep disparity estimation for 4D light fields."""

from .estimator import SweepConfig, estimate, preset
from .lightfield import Direction, DisparityMap, LightField, extract_view_line, load_lightfield, save_lightfield
from .patterns import generate_pattern_set, pattern_table, upsample_pattern
from .pfm import read_pfm, write_pfm

__all__ = [
    "Direction",
    "DisparityMap",
    "LightField",
    "SweepConfig",
    "estimate",
    "extract_view_line",
    "generate_pattern_set",
    "load_lightfield",
    "pattern_table",
    "preset",
    "read_pfm",
    "save_lightfield",
    "upsample_pattern",
    "write_pfm",
]

__version__ = "0.1.0"
