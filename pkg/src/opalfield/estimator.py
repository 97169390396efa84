"""Plane-sweep disparity estimation with occlusion-pattern-aware costs.

For every constant disparity candidate the views of each enabled direction
are warped to the central frame, every occlusion pattern is scored by its
masked mean residual, one pattern is selected per pixel and its cost enters
the volume. The volume is box-aggregated, regressed (hard or soft argmin)
and optionally refined by a confidence-gated weighted median.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import ndimage

from .lightfield import (
    ALL_DIRECTIONS,
    FAST_DIRECTIONS,
    DisparityMap,
    Direction,
    LightField,
    extract_view_line,
)
from .objective import GAMMA, LAMBDA1, LAMBDA1_FAST, LAMBDA2, LossBreakdown, direction_terms, total_objective
from .patterns import PatternSet, generate_pattern_set
from .photometric import (
    TAU,
    chosen_cost,
    constant_residual_stack,
    pattern_costs,
    point_residual_stack,
    select_pattern,
)

log = logging.getLogger(__name__)

D_MAX = 4.0
# cost of a candidate that no view can check; residuals never exceed 1
NO_EVIDENCE_COST = 1.0
TEXTURELESS_RANGE = 1e-4


@dataclass(frozen=True)
class SweepConfig:
    d_max: float = D_MAX
    num_candidates: int = 65
    beta: int = 1
    tau: float = TAU
    directions: tuple[Direction, ...] = ALL_DIRECTIONS
    aggregation_radius: int = 2
    regression: str = "hard"  # hard | soft
    soft_temperature: float = 10.0
    refine: bool = True
    use_patterns: bool = True  # False forces pattern 0 everywhere
    lambda1: float = LAMBDA1
    lambda2: float = LAMBDA2
    gamma: float = GAMMA
    threads: int | None = None
    band_budget: int = 1 << 22  # max H*W*K cost entries per row band
    refine_window: int = 5
    refine_percentile: float = 20.0
    refine_edge_sigma: float = 0.05
    refine_fit_scale: float = 0.02
    refine_max_iter: int = 8

    def __post_init__(self):
        object.__setattr__(self, "directions", tuple(self.directions))
        if self.num_candidates < 3 or self.num_candidates % 2 == 0:
            raise ValueError("num_candidates must be odd and >= 3 so that 0 is a candidate")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.regression not in ("hard", "soft"):
            raise ValueError(f"unknown regression mode {self.regression!r}")
        if self.soft_temperature <= 0:
            raise ValueError("soft_temperature must be positive")
        if self.aggregation_radius < 0:
            raise ValueError("aggregation_radius must be >= 0")
        if not self.directions:
            raise ValueError("at least one direction is required")
        if not 0.0 <= self.lambda1 <= 1.0:
            raise ValueError("lambda1 must lie in [0, 1]")

    @property
    def candidates(self) -> np.ndarray:
        k = np.arange(self.num_candidates)
        return -self.d_max + 2.0 * self.d_max * k / (self.num_candidates - 1)

    @property
    def step(self) -> float:
        return 2.0 * self.d_max / (self.num_candidates - 1)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["directions"] = [d.value for d in self.directions]
        return out


def preset(name: str, **overrides) -> SweepConfig:
    if name == "full":
        cfg = SweepConfig()
    elif name == "fast":
        cfg = SweepConfig(directions=FAST_DIRECTIONS, refine=False, lambda1=LAMBDA1_FAST)
    else:
        raise ValueError(f"unknown preset {name!r}")
    return replace(cfg, **overrides)


@dataclass
class CostVolume:
    costs: np.ndarray  # (H, W, K)
    candidates: np.ndarray  # (K,)
    selection: np.ndarray | None = None  # (n_dir, K, H, W) int8, per-candidate choices
    directions: tuple[Direction, ...] = ()

    def selection_at(self, k_index: np.ndarray) -> np.ndarray | None:
        """Per-direction pattern choices at one candidate index per pixel -> (n_dir, H, W)."""
        if self.selection is None:
            return None
        idx = np.broadcast_to(k_index, self.costs.shape[:2])[None, None]
        idx = np.broadcast_to(idx, (self.selection.shape[0], 1) + self.costs.shape[:2])
        return np.take_along_axis(self.selection, idx, axis=1)[:, 0]


def _workers(cfg: SweepConfig) -> int:
    return max(1, cfg.threads or os.cpu_count() or 1)


def candidate_cost(
    lines, ps: PatternSet, d: float, cfg: SweepConfig, rows: slice | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Cost of one constant-disparity candidate and the per-direction selections."""
    pos = ps.native_positions
    acc = None
    count = None
    sels = []
    for line in lines:
        rs = constant_residual_stack(line, d, pos, rows)
        pc = pattern_costs(rs, ps, downsampled=True)
        if cfg.use_patterns:
            sel = select_pattern(pc, ps, cfg.tau)
        else:
            sel = np.zeros(pc.values.shape[1:], dtype=np.int64)
        c = chosen_cost(pc, sel)
        finite = np.isfinite(c)
        if acc is None:
            acc = np.zeros(c.shape)
            count = np.zeros(c.shape)
        acc += np.where(finite, c, 0.0)
        count += finite
        sels.append(sel.astype(np.int8))
    with np.errstate(invalid="ignore", divide="ignore"):
        cost = acc / count
    cost[count == 0] = NO_EVIDENCE_COST
    return cost, np.stack(sels)


def build_cost_volume(lf: LightField, cfg: SweepConfig, keep_selection: bool = True) -> CostVolume:
    ps = generate_pattern_set(lf.angular_n, cfg.beta)
    lines = [extract_view_line(lf, d) for d in cfg.directions]
    cands = cfg.candidates
    h, w, k = lf.height, lf.width, len(cands)
    costs = np.empty((h, w, k))
    selection = np.empty((len(lines), k, h, w), dtype=np.int8) if keep_selection else None
    band = max(1, min(h, cfg.band_budget // max(1, w * k)))
    bands = [slice(r, min(h, r + band)) for r in range(0, h, band)]

    def job(args):
        ki, rows = args
        return ki, rows, candidate_cost(lines, ps, cands[ki], cfg, rows)

    tasks = [(ki, rows) for rows in bands for ki in range(k)]
    n_workers = _workers(cfg)
    if n_workers == 1:
        results = map(job, tasks)
    else:
        pool = ThreadPoolExecutor(max_workers=n_workers)
        results = pool.map(job, tasks)
    # each task owns a disjoint slice, so output does not depend on scheduling
    for ki, rows, (c, sel) in results:
        costs[rows, :, ki] = c
        if selection is not None:
            selection[:, ki, rows] = sel
    if n_workers > 1:
        pool.shutdown()
    return CostVolume(costs, cands, selection, cfg.directions)


def aggregate(cv: CostVolume, radius: int) -> CostVolume:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return replace(cv, costs=cv.costs.copy())
    size = 2 * radius + 1
    out = ndimage.uniform_filter(cv.costs, size=(size, size, 1), mode="nearest")
    return replace(cv, costs=out)


def _hard_index(costs: np.ndarray, cands: np.ndarray) -> np.ndarray:
    # ties go to the smaller |d|, then to the smaller d
    order = np.lexsort((cands, np.abs(cands)))
    best = np.argmin(costs[..., order], axis=-1)
    return order[best]


def soft_argmin(costs: np.ndarray, cands: np.ndarray, temperature: float) -> np.ndarray:
    logits = -temperature * costs
    logits = logits - logits.max(axis=-1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=-1, keepdims=True)
    return (p * cands).sum(axis=-1)


def regress_disparity(cv: CostVolume, cfg: SweepConfig) -> DisparityMap:
    costs = cv.costs
    if cfg.regression == "hard":
        vals = cv.candidates[_hard_index(costs, cv.candidates)]
    else:
        vals = soft_argmin(costs, cv.candidates, cfg.soft_temperature)
    vals = np.clip(vals, -cfg.d_max, cfg.d_max)
    valid = np.ptp(costs, axis=-1) >= TEXTURELESS_RANGE
    return DisparityMap(vals, valid)


# --- refinement ---------------------------------------------------------------

def confidence(lf: LightField, disp: DisparityMap, cfg: SweepConfig) -> np.ndarray:
    """exp(-mean warp residual), the mean taken over views the selected patterns keep."""
    ps = generate_pattern_set(lf.angular_n, cfg.beta)
    total = np.zeros(disp.shape)
    count = np.zeros(disp.shape)
    c = lf.radius
    for d in cfg.directions:
        t = direction_terms(lf, disp, ps, d, cfg.tau, cfg.use_patterns)
        wts = t.weights.copy()
        wts[c] = False
        total += (t.residuals.values * wts).sum(axis=0)
        count += wts.sum(axis=0)
    mean = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    return np.exp(-mean)


def point_costs(lf: LightField, ys, xs, ds, cfg: SweepConfig) -> np.ndarray:
    """Pattern-aware matching cost of scattered pixels, each at its own disparity."""
    ps = generate_pattern_set(lf.angular_n, cfg.beta)
    pos = ps.native_positions
    acc = np.zeros(ys.shape)
    count = np.zeros(ys.shape)
    for d in cfg.directions:
        rs = point_residual_stack(extract_view_line(lf, d), ys, xs, ds, pos)
        pc = pattern_costs(rs, ps, downsampled=True)
        sel = select_pattern(pc, ps, cfg.tau) if cfg.use_patterns else np.zeros(ys.shape, dtype=np.int64)
        c = chosen_cost(pc, sel)
        finite = np.isfinite(c)
        acc += np.where(finite, c, 0.0)
        count += finite
    with np.errstate(invalid="ignore", divide="ignore"):
        cost = acc / count
    cost[count == 0] = NO_EVIDENCE_COST
    return cost


def _window(a: np.ndarray, ys, xs, half: int) -> np.ndarray:
    """(P, (2*half+1)**2, ...) neighbourhoods of ``a`` around the given pixels, edge-replicated."""
    pad = [(half, half), (half, half)] + [(0, 0)] * (a.ndim - 2)
    ap = np.pad(a, pad, mode="edge")
    offs = [(dy, dx) for dy in range(-half, half + 1) for dx in range(-half, half + 1)]
    return np.stack([ap[ys + half + dy, xs + half + dx] for dy, dx in offs], axis=1)


def weighted_median(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Row-wise weighted median: smallest value whose cumulative weight reaches half."""
    order = np.argsort(values, axis=1, kind="stable")
    sv = np.take_along_axis(values, order, axis=1)
    sw = np.take_along_axis(weights, order, axis=1)
    cum = np.cumsum(sw, axis=1)
    pick = np.argmax(cum >= 0.5 * cum[:, -1:], axis=1)
    return sv[np.arange(values.shape[0]), pick]


def refine(disp: DisparityMap, lf: LightField, cfg: SweepConfig) -> DisparityMap:
    """Revise unreliable disparities with a weighted median over a small window.

    Gate: confidence below the configured percentile of the map and mean
    residual above ``tau``. Each neighbour's vote is weighted by its own
    confidence, by colour similarity to the gated pixel, and by how well its
    disparity explains the gated pixel. The pass repeats until no gated value
    changes, so refining an already refined map changes nothing.
    """
    vals = disp.values.copy()
    half = cfg.refine_window // 2
    floor = np.exp(-cfg.tau)
    center = lf.center
    for _ in range(cfg.refine_max_iter):
        conf = confidence(lf, DisparityMap(vals, disp.valid), cfg)
        cut = np.percentile(conf, cfg.refine_percentile)
        gate = (conf < cut) & (conf < floor)
        if not gate.any():
            break
        ys, xs = np.nonzero(gate)
        nv = _window(vals, ys, xs, half)
        nc = _window(conf, ys, xs, half)
        ni = _window(center, ys, xs, half)
        colour = np.abs(ni - center[ys, xs][:, None, :]).mean(axis=-1)
        k = nv.shape[1]
        fit = point_costs(lf, np.repeat(ys, k).astype(np.float64), np.repeat(xs, k).astype(np.float64),
                          nv.ravel(), cfg).reshape(nv.shape)
        w = nc * np.exp(-colour / cfg.refine_edge_sigma) * np.exp(-fit / cfg.refine_fit_scale)
        new = np.clip(weighted_median(nv, w), -cfg.d_max, cfg.d_max)
        if np.array_equal(new, vals[ys, xs]):
            break
        vals[ys, xs] = new
    return DisparityMap(vals, disp.valid)


# --- end to end ---------------------------------------------------------------

@dataclass
class EstimateResult:
    disparity: DisparityMap
    raw: DisparityMap
    losses: LossBreakdown
    stats: dict = field(default_factory=dict)
    selection: np.ndarray | None = None  # (n_dir, H, W) at the winning candidate


def cost_stats(cv: CostVolume, disp: DisparityMap, selection: np.ndarray | None) -> dict:
    best = cv.costs.min(axis=-1)
    stats = {
        "min_cost_mean": float(best.mean()),
        "cost_mean": float(cv.costs.mean()),
        "textureless_fraction": float(1.0 - disp.valid.mean()),
    }
    if selection is not None:
        stats["occlusion_pattern_fraction"] = float((selection > 0).mean())
    return stats


def estimate(lf: LightField, cfg: SweepConfig | None = None) -> EstimateResult:
    cfg = cfg or SweepConfig()
    log.debug("sweep config %s", cfg.to_dict())
    cv = build_cost_volume(lf, cfg)
    cv = aggregate(cv, cfg.aggregation_radius)
    raw = regress_disparity(cv, cfg)
    k_index = _hard_index(cv.costs, cv.candidates)
    selection = cv.selection_at(k_index)
    final = refine(raw, lf, cfg) if cfg.refine else raw
    losses = total_objective(
        lf, raw, final, lambda1=cfg.lambda1, lambda2=cfg.lambda2, gamma=cfg.gamma, tau=cfg.tau, beta=cfg.beta
    )
    return EstimateResult(final, raw, losses, cost_stats(cv, raw, selection), selection)
