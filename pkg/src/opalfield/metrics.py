"""Disparity error metrics and map rendering."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .lightfield import DisparityMap

BADPIX_EPS = 0.07
GOOD_TONE = (235, 235, 235)
BAD_TONE = (200, 30, 30)


class MetricsError(ValueError):
    pass


def default_border(d_max: float = 4.0) -> int:
    return int(math.ceil(d_max)) + 1


def border_mask(shape: tuple[int, int], border: int) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    h, w = shape
    if 2 * border < h and 2 * border < w:
        m[border:h - border, border:w - border] = True
    return m


def _arrays(est, gt, mask):
    e = est.values if isinstance(est, DisparityMap) else np.asarray(est, dtype=np.float64)
    g = gt.values if isinstance(gt, DisparityMap) else np.asarray(gt, dtype=np.float64)
    if e.shape != g.shape:
        raise MetricsError(f"shape mismatch: {e.shape} vs {g.shape}")
    m = np.ones(e.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != e.shape:
        raise MetricsError("mask shape mismatch")
    if not m.any():
        raise MetricsError("empty evaluation mask")
    return e, g, m


def mse_x100(est, gt, mask=None) -> float:
    e, g, m = _arrays(est, gt, mask)
    return float(100.0 * np.mean((e[m] - g[m]) ** 2))


def badpix(est, gt, mask=None, eps: float = BADPIX_EPS) -> float:
    """Percentage of masked pixels with |est - gt| > eps (strict)."""
    if eps <= 0:
        raise MetricsError("eps must be positive")
    e, g, m = _arrays(est, gt, mask)
    return float(100.0 * np.mean(np.abs(e[m] - g[m]) > eps))


@dataclass
class MetricsReport:
    mse_x100: float
    badpix: dict[str, float]
    evaluated_pixels: int
    mask_spec: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(est, gt, border: int | None = None, eps=(BADPIX_EPS,), mask=None, mask_path=None) -> MetricsReport:
    shape = (est.values if isinstance(est, DisparityMap) else np.asarray(est)).shape
    border = default_border() if border is None else border
    m = border_mask(shape, border)
    if mask is not None:
        m &= np.asarray(mask, dtype=bool)
    bp = {f"{e:g}": badpix(est, gt, m, e) for e in eps}
    return MetricsReport(
        mse_x100=mse_x100(est, gt, m),
        badpix=bp,
        evaluated_pixels=int(m.sum()),
        mask_spec={"border_crop": border, "external_mask": None if mask_path is None else str(mask_path)},
    )


def disparity_image(disp, d_max: float = 4.0) -> np.ndarray:
    v = disp.values if isinstance(disp, DisparityMap) else np.asarray(disp, dtype=np.float64)
    g = (np.clip(v, -d_max, d_max) + d_max) / (2.0 * d_max)
    return np.round(g * 255.0).astype(np.uint8)


def error_image(est, gt, eps: float = BADPIX_EPS) -> np.ndarray:
    e, g, _ = _arrays(est, gt, None)
    bad = np.abs(e - g) > eps
    out = np.empty(e.shape + (3,), dtype=np.uint8)
    out[:] = GOOD_TONE
    out[bad] = BAD_TONE
    return out


def render_maps(est, out_dir, gt=None, d_max: float = 4.0, eps: float = BADPIX_EPS, prefix: str = "") -> list[Path]:
    """Write a grayscale disparity image and, with ``gt``, a two-tone error map."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / f"{prefix}disparity.png"
    Image.fromarray(disparity_image(est, d_max)).save(p)
    written.append(p)
    if gt is not None:
        p = out_dir / f"{prefix}error.png"
        Image.fromarray(error_image(est, gt, eps)).save(p)
        written.append(p)
    return written
