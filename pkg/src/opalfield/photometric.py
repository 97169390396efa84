"""Backward warping to the central view and occlusion-pattern matching costs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lightfield import DisparityMap, LightFieldError, ViewLine
from .patterns import PatternSet

TAU = 0.01
_EPS = 1e-9


@dataclass(frozen=True)
class ResidualStack:
    values: np.ndarray  # (L, H, W) >= 0, zero where invalid
    valid: np.ndarray  # (L, H, W) bool


@dataclass(frozen=True)
class PatternCosts:
    values: np.ndarray  # (M, H, W); +inf where a pattern has no usable view


def _bilinear(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``img`` (H, W, C) at real positions; taps with zero weight are never needed."""
    h, w = img.shape[:2]
    valid = (ys >= -_EPS) & (ys <= h - 1 + _EPS) & (xs >= -_EPS) & (xs <= w - 1 + _EPS)
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = (ys - y0)[..., None]
    fx = (xs - x0)[..., None]
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)
    y0c = np.clip(y0, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    top = img[y0c, x0c] * (1.0 - fx) + img[y0c, x1c] * fx
    bot = img[y1c, x0c] * (1.0 - fx) + img[y1c, x1c] * fx
    return top * (1.0 - fy) + bot * fy, valid


def _shift_axis(n: int, s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Tap indices, weights and validity for sampling a length-n axis at i + s.

    Computed per element exactly as in :func:`_bilinear` so that both paths
    agree bit for bit.
    """
    pos = np.arange(n, dtype=np.float64) + s
    valid = (pos >= -_EPS) & (pos <= n - 1 + _EPS)
    i0 = np.floor(pos)
    f = pos - i0
    i0 = i0.astype(np.int64)
    return np.clip(i0, 0, n - 1), np.clip(i0 + 1, 0, n - 1), f, valid


def shift_bilinear(img: np.ndarray, sy: float, sx: float, rows: slice | None = None):
    """Sample ``img`` at (y + sy, x + sx) for every output pixel (constant shift).

    Same arithmetic as the general warp, specialised to separable indexing.
    ``rows`` restricts the output to a band of rows.
    """
    h, w = img.shape[:2]
    yi0, yi1, fy, vy = _shift_axis(h, sy)
    xi0, xi1, fx, vx = _shift_axis(w, sx)
    if rows is not None:
        yi0, yi1, fy, vy = yi0[rows], yi1[rows], fy[rows], vy[rows]
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    r0 = img[yi0]
    r1 = img[yi1]
    top = r0[:, xi0] * (1.0 - fx) + r0[:, xi1] * fx
    bot = r1[:, xi0] * (1.0 - fx) + r1[:, xi1] * fx
    out = top * (1.0 - fy) + bot * fy
    return out, vy[:, None] & vx[None, :]


def warp_to_center(view: np.ndarray, offset, disp: DisparityMap | np.ndarray):
    """Backward-warp ``view`` to the central frame: out(x) = view(x + offset * D(x))."""
    view = np.asarray(view, dtype=np.float64)
    if view.ndim == 2:
        view = view[..., None]
    d = disp.values if isinstance(disp, DisparityMap) else np.asarray(disp, dtype=np.float64)
    if d.shape != view.shape[:2]:
        raise LightFieldError(f"dimension mismatch: view {view.shape[:2]} vs disparity {d.shape}")
    du, dv = int(offset[0]), int(offset[1])
    if du == 0 and dv == 0:
        return view.copy(), np.ones(d.shape, dtype=bool)
    h, w = d.shape
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    return _bilinear(view, yy + du * d, xx + dv * d)


def _abs_residual(warped: np.ndarray, center: np.ndarray) -> np.ndarray:
    return np.abs(warped - center).mean(axis=-1)


def point_residual_stack(line: ViewLine, ys: np.ndarray, xs: np.ndarray, ds: np.ndarray, positions) -> ResidualStack:
    """Residual stack for scattered central pixels (ys, xs), each with its own disparity."""
    c = line.center_index
    ys = np.asarray(ys, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    center = line.views[c][ys.astype(np.int64), xs.astype(np.int64)]
    vals, valids = [], []
    for i in positions:
        if i == c:
            vals.append(np.zeros(ys.shape))
            valids.append(np.ones(ys.shape, dtype=bool))
            continue
        du, dv = line.offsets[i]
        warped, valid = _bilinear(line.views[i], ys + du * ds, xs + dv * ds)
        r = _abs_residual(warped, center)
        vals.append(np.where(valid, r, 0.0))
        valids.append(valid)
    return ResidualStack(np.stack(vals), np.stack(valids))


def residual_stack(line: ViewLine, disp: DisparityMap | np.ndarray, positions=None) -> ResidualStack:
    """Per-view absolute residual against the central view, averaged over channels.

    ``positions`` selects line indices (default: all views of the line).
    """
    d = disp.values if isinstance(disp, DisparityMap) else np.asarray(disp, dtype=np.float64)
    if d.shape != line.views.shape[1:3]:
        raise LightFieldError(f"dimension mismatch: line {line.views.shape[1:3]} vs disparity {d.shape}")
    c = line.center_index
    center = line.views[c]
    idx = range(len(line.offsets)) if positions is None else positions
    vals, valids = [], []
    for i in idx:
        if i == c:
            vals.append(np.zeros(d.shape))
            valids.append(np.ones(d.shape, dtype=bool))
            continue
        warped, valid = warp_to_center(line.views[i], line.offsets[i], d)
        r = _abs_residual(warped, center)
        vals.append(np.where(valid, r, 0.0))
        valids.append(valid)
    return ResidualStack(np.stack(vals), np.stack(valids))


def constant_residual_stack(line: ViewLine, d: float, positions, rows: slice | None = None) -> ResidualStack:
    """Residual stack at a constant disparity, optionally for a band of rows."""
    c = line.center_index
    center = line.views[c] if rows is None else line.views[c][rows]
    shape = center.shape[:2]
    vals, valids = [], []
    for i in positions:
        if i == c:
            vals.append(np.zeros(shape))
            valids.append(np.ones(shape, dtype=bool))
            continue
        du, dv = line.offsets[i]
        warped, valid = shift_bilinear(line.views[i], du * d, dv * d, rows)
        r = _abs_residual(warped, center)
        vals.append(np.where(valid, r, 0.0))
        valids.append(valid)
    return ResidualStack(np.stack(vals), np.stack(valids))


def pattern_costs(rs: ResidualStack, ps: PatternSet, downsampled: bool = False) -> PatternCosts:
    """Masked mean residual for every pattern.

    ``rs`` holds either the full native line (default) or only the M pattern
    positions (``downsampled=True``). Invalid views drop out of both sums; a
    pattern left with no valid view besides the centre gets +inf.
    """
    if downsampled:
        res, val = rs.values, rs.valid
    else:
        pos = ps.native_positions
        res, val = rs.values[pos], rs.valid[pos]
    m = ps.m
    if res.shape[0] != m:
        raise LightFieldError(f"residual stack has {res.shape[0]} positions, patterns need {m}")
    centre = (m - 1) // 2
    shape = res.shape[1:]
    num = np.zeros((m,) + shape)
    den = np.zeros((m,) + shape)
    support = np.zeros((m,) + shape)
    masks = ps.masks.astype(np.float64)
    # fixed summation order over positions keeps results reproducible
    bshape = (m,) + (1,) * len(shape)
    for k in range(m):
        w = masks[:, k].reshape(bshape)
        vk = val[k].astype(np.float64)
        num += w * res[k]
        den += w * vk
        if k != centre:
            support += w * vk
    with np.errstate(invalid="ignore", divide="ignore"):
        cost = num / den
    cost[support == 0] = np.inf
    return PatternCosts(cost)


def select_pattern(pc: PatternCosts | np.ndarray, ps: PatternSet | int, tau: float = TAU) -> np.ndarray:
    """Index of the chosen pattern per pixel.

    Pattern 0 wins whenever the two half-line patterns (largest even and
    largest odd index) cost within ``tau`` of each other; otherwise the
    cheapest pattern wins, ties going to the smaller index.
    """
    costs = pc.values if isinstance(pc, PatternCosts) else np.asarray(pc, dtype=np.float64)
    m = costs.shape[0]
    if m < 3:
        raise ValueError("pattern selection needs at least 3 patterns")
    last_even = m - 1 if (m - 1) % 2 == 0 else m - 2
    last_odd = m - 1 if (m - 1) % 2 == 1 else m - 2
    with np.errstate(invalid="ignore"):
        gap = np.abs(costs[last_even] - costs[last_odd])
        no_occlusion = gap < tau
    best = np.argmin(costs, axis=0)
    return np.where(no_occlusion, 0, best)


def chosen_cost(pc: PatternCosts | np.ndarray, selection: np.ndarray) -> np.ndarray:
    costs = pc.values if isinstance(pc, PatternCosts) else np.asarray(pc)
    return np.take_along_axis(costs, selection[None], axis=0)[0]
