"""Occlusion-pattern-aware photometric loss, edge-aware smoothness and their blend."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .lightfield import ALL_DIRECTIONS, DisparityMap, Direction, LightField, LightFieldError, extract_view_line
from .patterns import PatternSet, generate_pattern_set
from .photometric import TAU, ResidualStack, pattern_costs, residual_stack, select_pattern

GAMMA = 150.0
LAMBDA1 = 0.6
LAMBDA1_FAST = 1.0
LAMBDA2 = 0.3


@dataclass(frozen=True)
class DirectionTerms:
    """Everything the loss computes along one direction."""

    direction: Direction
    residuals: ResidualStack  # full native line
    selection: np.ndarray  # (H, W) chosen pattern index
    weights: np.ndarray  # (N, H, W) bool: upsampled pattern AND valid


@dataclass
class LossBreakdown:
    opal_per_direction: dict[str, float]
    opal_total: float
    opal_final: float
    smooth: float
    total: float
    constants: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _values(disp) -> np.ndarray:
    return disp.values if isinstance(disp, DisparityMap) else np.asarray(disp, dtype=np.float64)


def direction_terms(
    lf: LightField,
    disp,
    ps: PatternSet,
    d: Direction,
    tau: float = TAU,
    use_patterns: bool = True,
) -> DirectionTerms:
    line = extract_view_line(lf, d)
    rs = residual_stack(line, disp)
    if use_patterns:
        sel = select_pattern(pattern_costs(rs, ps), ps, tau)
    else:
        sel = np.zeros(rs.values.shape[1:], dtype=np.int64)
    oplf = np.moveaxis(ps.upsampled[sel], -1, 0)
    return DirectionTerms(d, rs, sel, oplf & rs.valid)


def opal_loss(
    lf: LightField,
    disp,
    ps: PatternSet | None = None,
    tau: float = TAU,
    directions=ALL_DIRECTIONS,
    pixel_mask: np.ndarray | None = None,
    use_patterns: bool = True,
) -> dict[Direction, float]:
    """Per-direction mean residual over the views each pixel's pattern keeps.

    The sum over (view, pixel) pairs is divided by the number of pairs that
    contribute, so values are comparable across image sizes and ``beta``.
    ``pixel_mask`` restricts the pixels that contribute.
    """
    ps = ps or generate_pattern_set(lf.angular_n, 1)
    if ps.native_n != lf.angular_n:
        raise LightFieldError(f"pattern set built for N={ps.native_n}, light field has N={lf.angular_n}")
    if _values(disp).shape != (lf.height, lf.width):
        raise LightFieldError("dimension mismatch between disparity and light field")
    out = {}
    for d in directions:
        terms = direction_terms(lf, disp, ps, d, tau, use_patterns)
        w = terms.weights if pixel_mask is None else terms.weights & pixel_mask[None]
        count = w.sum()
        out[d] = float(terms.residuals.values[w].sum() / count) if count else 0.0
    return out


def photometric_loss(lf: LightField, disp, directions=ALL_DIRECTIONS, pixel_mask=None) -> dict[Direction, float]:
    """Same normalisation as :func:`opal_loss` but every valid view counts."""
    ps = generate_pattern_set(lf.angular_n, 1)
    return opal_loss(lf, disp, ps, directions=directions, pixel_mask=pixel_mask, use_patterns=False)


def _grad_abs(a: np.ndarray, axis: int) -> np.ndarray:
    g = np.abs(np.diff(a, axis=axis))
    return g.mean(axis=-1) if g.ndim == 3 else g


def smoothness_loss(disp, center: np.ndarray, gamma: float = GAMMA) -> float:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d = _values(disp)
    img = np.asarray(center, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    dx = np.abs(np.diff(d, axis=1))[:-1, :]
    dy = np.abs(np.diff(d, axis=0))[:, :-1]
    ix = _grad_abs(img, 1)[:-1, :]
    iy = _grad_abs(img, 0)[:, :-1]
    if dx.size == 0:
        return 0.0
    return float(np.mean(dx * np.exp(-gamma * ix) + dy * np.exp(-gamma * iy)))


def total_objective(
    lf: LightField,
    disp_raw,
    disp_final=None,
    lambda1: float = LAMBDA1,
    lambda2: float = LAMBDA2,
    gamma: float = GAMMA,
    tau: float = TAU,
    beta: int = 1,
) -> LossBreakdown:
    """lambda1 * opal(raw) + (1 - lambda1) * opal(final) + lambda2 * smooth(final)."""
    if not 0.0 <= lambda1 <= 1.0:
        raise ValueError("lambda1 must lie in [0, 1]")
    if lambda2 < 0:
        raise ValueError("lambda2 must be non-negative")
    disp_final = disp_raw if disp_final is None else disp_final
    ps = generate_pattern_set(lf.angular_n, beta)
    raw = opal_loss(lf, disp_raw, ps, tau)
    opal_raw = float(sum(raw.values()))
    final = raw if disp_final is disp_raw else opal_loss(lf, disp_final, ps, tau)
    opal_final = float(sum(final.values()))
    smooth = smoothness_loss(disp_final, lf.center, gamma)
    total = lambda1 * opal_raw + (1.0 - lambda1) * opal_final + lambda2 * smooth
    return LossBreakdown(
        opal_per_direction={d.value: v for d, v in raw.items()},
        opal_total=opal_raw,
        opal_final=opal_final,
        smooth=smooth,
        total=float(total),
        constants={"tau": tau, "gamma": gamma, "lambda1": lambda1, "lambda2": lambda2, "beta": beta},
    )
