"""4D light field container, angular conventions and directional view lines.

Views are stored as a single array of shape ``(N, N, H, W, C)`` indexed by
``[row, col]`` with the central view at ``row = col = (N - 1) // 2``. The
angular coordinate of a view is ``(u, v) = (row - c, col - c)``; ``u`` moves
along image rows (y) and ``v`` along image columns (x). A scene point with
disparity ``D`` seen at ``x`` in the central view appears at
``x + (u, v) * D`` in view ``(u, v)``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


class LightFieldError(ValueError):
    """Raised when light field data violates the container contract."""


class Direction(enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    DIAGONAL_MAIN = "diagonal_main"
    DIAGONAL_ANTI = "diagonal_anti"

    @property
    def step(self) -> tuple[int, int]:
        """Angular (du, dv) increment per unit of line parameter t."""
        return _STEPS[self]

    @classmethod
    def parse(cls, name: str) -> "Direction":
        key = name.strip().lower().replace("-", "_")
        aliases = {"h": "horizontal", "v": "vertical", "d": "diagonal_main", "a": "diagonal_anti"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise LightFieldError(f"unknown direction {name!r}") from None


_STEPS = {
    Direction.HORIZONTAL: (0, 1),
    Direction.VERTICAL: (1, 0),
    Direction.DIAGONAL_MAIN: (1, 1),
    Direction.DIAGONAL_ANTI: (1, -1),
}

ALL_DIRECTIONS = tuple(Direction)
FAST_DIRECTIONS = (Direction.HORIZONTAL, Direction.VERTICAL)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LightField:
    views: np.ndarray  # (N, N, H, W, C) in [0, 1]

    def __post_init__(self):
        v = np.asarray(self.views)
        if v.ndim == 4:
            v = v[..., None]
        if v.ndim != 5:
            raise LightFieldError(f"views must have shape (N, N, H, W, C), got {v.shape}")
        n, n2, _, _, c = v.shape
        if n != n2:
            raise LightFieldError("angular grid must be square")
        if n < 3 or n % 2 == 0:
            raise LightFieldError("angular resolution must be odd and >= 3")
        if c not in (1, 3):
            raise LightFieldError(f"expected 1 or 3 channels, got {c}")
        object.__setattr__(self, "views", _frozen(v))

    @property
    def angular_n(self) -> int:
        return self.views.shape[0]

    @property
    def height(self) -> int:
        return self.views.shape[2]

    @property
    def width(self) -> int:
        return self.views.shape[3]

    @property
    def channels(self) -> int:
        return self.views.shape[4]

    @property
    def radius(self) -> int:
        return (self.angular_n - 1) // 2

    @property
    def center(self) -> np.ndarray:
        r = self.radius
        return self.views[r, r]

    def view(self, u: int, v: int) -> np.ndarray:
        """View at angular coordinate (u, v), both in [-(N-1)/2, (N-1)/2]."""
        r = self.radius
        if abs(u) > r or abs(v) > r:
            raise IndexError(f"angular coordinate ({u}, {v}) outside grid of radius {r}")
        return self.views[u + r, v + r]


@dataclass(frozen=True)
class ViewLine:
    direction: Direction
    views: np.ndarray  # (N, H, W, C), ordered by t
    offsets: np.ndarray  # (N, 2) integer angular displacements (du, dv)

    @property
    def center_index(self) -> int:
        return (len(self.offsets) - 1) // 2


@dataclass(frozen=True)
class DisparityMap:
    values: np.ndarray  # (H, W) pixels per unit angular step
    valid: np.ndarray = field(default=None)  # (H, W) bool

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise LightFieldError(f"disparity must be 2D, got shape {vals.shape}")
        valid = np.isfinite(vals) if self.valid is None else np.asarray(self.valid, dtype=bool)
        if valid.shape != vals.shape:
            raise LightFieldError("validity mask shape mismatch")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid", valid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def constant(cls, value: float, shape: tuple[int, int]) -> "DisparityMap":
        return cls(np.full(shape, float(value)))


def extract_view_line(lf: LightField, d: Direction) -> ViewLine:
    """Views on the line through the central view along ``d``, ordered by t."""
    r = lf.radius
    du, dv = d.step
    ts = np.arange(-r, r + 1)
    offsets = np.stack([ts * du, ts * dv], axis=1).astype(np.int64)
    views = np.stack([lf.views[ou + r, ov + r] for ou, ov in offsets])
    views.flags.writeable = False
    offsets.flags.writeable = False
    return ViewLine(direction=d, views=views, offsets=offsets)


# --- container I/O --------------------------------------------------------

def view_filename(row: int, col: int) -> str:
    return f"view_{row}_{col}.png"


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        mode = im.mode
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            a = np.asarray(im, dtype=np.float64) / 65535.0
            return a[..., None]
        if mode == "L":
            return np.asarray(im, dtype=np.float64)[..., None] / 255.0
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def _write_png(path: Path, img: np.ndarray) -> None:
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    if img.ndim == 2:
        # grayscale keeps 16 bits so round trips stay well below 1e-3
        q = np.round(img * 65535.0).astype(np.uint16)
        Image.fromarray(q).save(path)
    else:
        q = np.round(img * 255.0).astype(np.uint8)
        Image.fromarray(q).save(path)


def load_lightfield(path: str | Path) -> LightField:
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise LightFieldError(f"missing meta.json in {path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    try:
        n = int(meta["angular_n"])
        h = int(meta["height"])
        w = int(meta["width"])
    except KeyError as e:
        raise LightFieldError(f"meta.json missing key {e.args[0]!r}") from None
    if n < 3 or n % 2 == 0:
        raise LightFieldError("angular resolution must be odd")
    present = sorted(path.glob("view_*_*.png"))
    if len(present) != n * n:
        raise LightFieldError(f"view count mismatch: expected {n * n}, found {len(present)}")
    rows = []
    for row in range(n):
        cols = []
        for col in range(n):
            p = path / view_filename(row, col)
            if not p.is_file():
                raise LightFieldError(f"view count mismatch: missing {p.name}")
            img = _read_png(p)
            if img.shape[:2] != (h, w):
                raise LightFieldError(f"inconsistent dimensions in {p.name}: {img.shape[:2]} != {(h, w)}")
            cols.append(img)
        chans = {c.shape[2] for c in cols}
        if len(chans) != 1:
            raise LightFieldError("inconsistent channel count across views")
        rows.append(np.stack(cols))
    views = np.stack(rows)
    return LightField(views)


def save_lightfield(lf: LightField, path: str | Path, extra_meta: dict | None = None) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    n = lf.angular_n
    for row in range(n):
        for col in range(n):
            _write_png(path / view_filename(row, col), lf.views[row, col])
    meta = {"angular_n": n, "height": lf.height, "width": lf.width}
    if extra_meta:
        meta.update(extra_meta)
    (path / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_meta(path: str | Path) -> dict:
    return json.loads((Path(path) / "meta.json").read_text(encoding="utf-8"))
