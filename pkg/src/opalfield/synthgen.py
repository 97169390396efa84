"""Layered fronto-parallel scenes with exact disparity and occlusion ground truth.

Each layer is a textured rectangle (or the full frame) at a constant
disparity. The view at angular offset ``o`` shows the layer point that sits
at ``x`` in the central view at ``x + o * D``; per view, the front-most layer
(largest disparity) covering a pixel wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .lightfield import DisparityMap, LightField

D_MAX = 4.0


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class Texture:
    kind: str = "noise"  # noise | gradient | checker | constant
    seed: int = 0
    value: float = 0.5  # constant level
    scale: float = 2.0  # noise correlation length / checker period, pixels

    def __post_init__(self):
        if self.kind not in ("noise", "gradient", "checker", "constant"):
            raise SceneError(f"unknown texture kind {self.kind!r}")


@dataclass(frozen=True)
class Layer:
    disparity: float
    texture: Texture = field(default_factory=Texture)
    region: tuple[int, int, int, int] | None = None  # (y0, x0, y1, x1), half-open; None = full frame

    def covers(self, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Membership of real-valued central-frame positions."""
        if self.region is None:
            return np.ones(np.broadcast(ys, xs).shape, dtype=bool)
        y0, x0, y1, x1 = self.region
        return (ys >= y0 - 0.5) & (ys < y1 - 0.5) & (xs >= x0 - 0.5) & (xs < x1 - 0.5)


@dataclass(frozen=True)
class SceneSpec:
    layers: tuple[Layer, ...]  # back to front
    angular_n: int = 9
    height: int = 128
    width: int = 128
    channels: int = 3

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        validate_scene(self)

    def mirrored(self) -> "SceneSpec":
        """Left-right mirror image of the scene geometry."""
        layers = []
        for L in self.layers:
            region = None
            if L.region is not None:
                y0, x0, y1, x1 = L.region
                region = (y0, self.width - x1, y1, self.width - x0)
            layers.append(replace(L, region=region))
        return replace(self, layers=tuple(layers))


@dataclass(frozen=True)
class GroundTruth:
    disparity: DisparityMap
    occlusion: np.ndarray  # (N, N, H, W) bool: central pixel not visible in view
    layer_index: np.ndarray  # (H, W) front-most layer index in the central view


def _overlap(a: Layer, b: Layer, h: int, w: int) -> bool:
    ra = a.region or (0, 0, h, w)
    rb = b.region or (0, 0, h, w)
    return ra[0] < rb[2] and rb[0] < ra[2] and ra[1] < rb[3] and rb[1] < ra[3]


def validate_scene(spec: SceneSpec) -> None:
    if spec.angular_n < 3 or spec.angular_n % 2 == 0:
        raise SceneError("angular resolution must be odd and >= 3")
    if not spec.layers:
        raise SceneError("scene needs at least one layer")
    if spec.channels not in (1, 3):
        raise SceneError("channels must be 1 or 3")
    for L in spec.layers:
        if abs(L.disparity) > D_MAX:
            raise SceneError(f"layer disparity {L.disparity} outside [-{D_MAX}, {D_MAX}]")
        if L.region is not None:
            y0, x0, y1, x1 = L.region
            if not (y1 > y0 and x1 > x0):
                raise SceneError(f"empty layer region {L.region}")
    for i, back in enumerate(spec.layers):
        for front in spec.layers[i + 1:]:
            if _overlap(back, front, spec.height, spec.width) and not front.disparity > back.disparity:
                raise SceneError(
                    "layer ordering violates disparity invariant: a front layer must have strictly "
                    f"larger disparity than the layers it overlaps ({front.disparity} <= {back.disparity})"
                )


def _margin(spec: SceneSpec) -> int:
    r = (spec.angular_n - 1) // 2
    return int(math.ceil(r * max(abs(L.disparity) for L in spec.layers))) + 2


def _texture_grid(tex: Texture, h: int, w: int, channels: int) -> np.ndarray:
    """Texture on an (h, w) pixel grid; generated at 2x and area-downsampled."""
    hh, ww = 2 * h, 2 * w
    if tex.kind == "constant":
        return np.full((h, w, channels), float(tex.value))
    if tex.kind == "noise":
        rng = np.random.default_rng(tex.seed)
        hi = rng.random((hh, ww, channels))
        sigma = max(2.0 * tex.scale - 2.0, 0.0) / 2.0
        if sigma > 0:
            hi = ndimage.gaussian_filter(hi, sigma=(sigma, sigma, 0), mode="wrap")
            lo, top = hi.min(), hi.max()
            hi = (hi - lo) / max(top - lo, 1e-12)
    elif tex.kind == "gradient":
        rng = np.random.default_rng(tex.seed)
        yy, xx = np.meshgrid(np.linspace(0, 1, hh), np.linspace(0, 1, ww), indexing="ij")
        chans = []
        for _ in range(channels):
            a, b = rng.uniform(0.3, 1.0, size=2) * rng.choice([-1, 1], size=2)
            g = a * xx + b * yy
            chans.append((g - g.min()) / (g.max() - g.min()))
        hi = 0.1 + 0.8 * np.stack(chans, axis=-1)
    else:  # checker
        period = max(tex.scale, 1.0) * 2.0
        yy, xx = np.meshgrid(np.arange(hh), np.arange(ww), indexing="ij")
        cell = ((yy // period).astype(int) + (xx // period).astype(int)) % 2
        hi = np.repeat((0.2 + 0.6 * cell)[..., None], channels, axis=-1).astype(np.float64)
    return hi.reshape(h, 2, w, 2, channels).mean(axis=(1, 3))


def _layer_textures(spec: SceneSpec) -> tuple[int, list[np.ndarray]]:
    pad = _margin(spec)
    h, w = spec.height + 2 * pad, spec.width + 2 * pad
    return pad, [_texture_grid(L.texture, h, w, spec.channels) for L in spec.layers]


def _front_layer(spec: SceneSpec, ys: np.ndarray, xs: np.ndarray, du: int, dv: int) -> np.ndarray:
    """Index of the front-most layer seen at view-frame positions (ys, xs) in view (du, dv); -1 if none."""
    idx = np.full(np.broadcast(ys, xs).shape, -1, dtype=np.int64)
    for k, L in enumerate(spec.layers):
        hit = L.covers(ys - du * L.disparity, xs - dv * L.disparity)
        idx = np.where(hit, k, idx)
    return idx


def render_scene(spec: SceneSpec) -> tuple[LightField, GroundTruth]:
    n, h, w = spec.angular_n, spec.height, spec.width
    r = (n - 1) // 2
    pad, textures = _layer_textures(spec)
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")

    views = np.zeros((n, n, h, w, spec.channels))
    for du in range(-r, r + 1):
        for dv in range(-r, r + 1):
            front = _front_layer(spec, yy, xx, du, dv)
            img = np.zeros((h, w, spec.channels))
            for k, L in enumerate(spec.layers):
                sel = front == k
                if not sel.any():
                    continue
                img[sel] = _sample_texture(textures[k], yy[sel] - du * L.disparity + pad,
                                           xx[sel] - dv * L.disparity + pad)
            views[du + r, dv + r] = img

    central = _front_layer(spec, yy, xx, 0, 0)
    if (central < 0).any():
        raise SceneError("scene leaves central-view pixels uncovered; add a full-frame background layer")
    disp = np.array([L.disparity for L in spec.layers])[central]
    occlusion = np.zeros((n, n, h, w), dtype=bool)
    for du in range(-r, r + 1):
        for dv in range(-r, r + 1):
            seen = _front_layer(spec, yy + du * disp, xx + dv * disp, du, dv)
            occlusion[du + r, dv + r] = seen != central
    gt = GroundTruth(disparity=DisparityMap(disp), occlusion=occlusion, layer_index=central)
    return LightField(np.clip(views, 0.0, 1.0)), gt


def _sample_texture(tex: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    h, w = tex.shape[:2]
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 2)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[:, None]
    top = tex[y0, x0] * (1.0 - fx) + tex[y0, x0 + 1] * fx
    bot = tex[y0 + 1, x0] * (1.0 - fx) + tex[y0 + 1, x0 + 1] * fx
    return top * (1.0 - fy) + bot * fy


# --- standard suite ---------------------------------------------------------

OCCLUDER_SCENES = ("single_occluder", "double_occluder", "thin_bar")
TEXTURELESS_SCENES = ("textureless_patch",)


def standard_suite(n: int = 9, size: int = 128) -> list[tuple[str, SceneSpec]]:
    """Fixed, seeded scenes covering the main occlusion configurations.

    Every disparity is an integer so that all view shifts land on the pixel
    grid and the rendered views carry no interpolation error.
    """
    s = size
    c = s // 2

    def px(v: int) -> int:
        # geometry is laid out for 128 px and scaled to the requested size
        return int(round(v * s / 128))

    def noise(seed, scale=2.0):
        return Texture("noise", seed=seed, scale=scale)

    scenes = [
        ("no_occlusion", [Layer(1.0, Texture("gradient", seed=11))]),
        ("single_occluder", [
            Layer(0.0, noise(21)),
            Layer(2.0, noise(22), (c - px(20), c - px(20), c + px(20), c + px(20))),
        ]),
        ("double_occluder", [
            Layer(-1.0, noise(31)),
            Layer(1.0, noise(32), (c - px(36), px(16), c + px(4), px(48))),
            Layer(2.0, noise(33), (c - px(4), s - px(48), c + px(36), s - px(16))),
        ]),
        ("thin_bar", [
            Layer(0.0, noise(41)),
            Layer(1.0, noise(42), (px(16), c - 1, s - px(16), c + 2)),
        ]),
        ("textureless_patch", [
            Layer(-1.0, noise(51)),
            Layer(1.0, Texture("constant", value=0.45), (c - px(16), c - px(16), c + px(16), c + px(16))),
        ]),
        ("high_frequency_noise", [Layer(-2.0, noise(61, scale=1.0))]),
    ]
    return [(name, SceneSpec(tuple(layers), angular_n=n, height=s, width=s)) for name, layers in scenes]


def suite_scene(name: str, n: int = 9, size: int = 128) -> SceneSpec:
    for key, spec in standard_suite(n, size):
        if key == name:
            return spec
    raise KeyError(name)
