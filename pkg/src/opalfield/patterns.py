"""One-sided occlusion pattern families along a view line.

A pattern is a boolean mask over the positions of a view line (True = the
view is used). Pattern 0 keeps every view; odd patterns drop a run of views
at the low-t end, even patterns drop a run at the high-t end, and the run
grows by one view every two indices. With angular downsampling by ``beta``
only every ``beta``-th view of the native line is a pattern position, so a
native line of ``N`` views yields ``M = (N - 1) / beta + 1`` patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class OcclusionPattern:
    index: int
    mask: np.ndarray  # (M,) bool, ordered by t

    def __str__(self) -> str:
        return mask_to_str(self.mask)


@dataclass(frozen=True)
class PatternSet:
    native_n: int
    beta: int
    masks: np.ndarray  # (M, M) bool, row j is pattern j at downsampled positions
    upsampled: np.ndarray  # (M, N) bool, row j is pattern j at native positions

    @property
    def m(self) -> int:
        return self.masks.shape[0]

    @property
    def patterns(self) -> list[OcclusionPattern]:
        return [OcclusionPattern(j, self.masks[j]) for j in range(self.m)]

    @property
    def native_positions(self) -> np.ndarray:
        """Indices into the native view line (0..N-1) sampled by the pattern positions."""
        r = (self.native_n - 1) // 2
        rm = (self.m - 1) // 2
        return np.arange(-rm, rm + 1) * self.beta + r

    @property
    def last_even(self) -> int:
        return self.m - 1 if (self.m - 1) % 2 == 0 else self.m - 2

    @property
    def last_odd(self) -> int:
        return self.m - 1 if (self.m - 1) % 2 == 1 else self.m - 2


def mask_to_str(mask) -> str:
    return "".join("1" if b else "0" for b in np.asarray(mask, dtype=bool))


def str_to_mask(s: str) -> np.ndarray:
    return np.array([c == "1" for c in s], dtype=bool)


def check_sizes(n: int, beta: int) -> int:
    """Validate (N, beta) and return the downsampled line length M."""
    if n < 3 or n % 2 == 0:
        raise PatternError(f"angular resolution must be odd and >= 3, got {n}")
    if beta < 1:
        raise PatternError(f"beta must be >= 1, got {beta}")
    if (n - 1) % beta != 0:
        raise PatternError(f"(N - 1) = {n - 1} is not divisible by beta = {beta}")
    m = (n - 1) // beta + 1
    # the central view has to survive downsampling
    if m % 2 == 0:
        raise PatternError(f"beta = {beta} drops the central view of a {n}-view line")
    return m


def valid_betas(n: int) -> list[int]:
    out = []
    for b in range(1, n):
        try:
            check_sizes(n, b)
        except PatternError:
            continue
        out.append(b)
    return out


def pattern_mask(j: int, m: int) -> np.ndarray:
    r = (m - 1) // 2
    t = np.arange(-r, r + 1)
    if j == 0:
        return np.ones(m, dtype=bool)
    if j % 2 == 1:
        return t >= -r + math.ceil(j / 2)
    return t <= r - j // 2


def upsample_pattern(mask, beta: int, n: int) -> np.ndarray:
    """Expand a downsampled mask to the native line of ``n`` views.

    Sample ``t`` lands on native position ``beta * t``. A native view lying
    between two samples is kept only when both samples are kept, so views
    between a dropped and a kept sample are dropped as well.
    """
    mask = np.asarray(mask, dtype=bool)
    if (n - 1) % beta != 0 or mask.shape != ((n - 1) // beta + 1,):
        raise PatternError(f"mask of length {mask.size} does not match N={n}, beta={beta}")
    pos = np.arange(n)
    lo = pos // beta
    hi = np.minimum(lo + 1, mask.size - 1)
    on_sample = pos % beta == 0
    return np.where(on_sample, mask[lo], mask[lo] & mask[hi])


@lru_cache(maxsize=None)
def _build(n: int, beta: int) -> PatternSet:
    m = check_sizes(n, beta)
    masks = np.stack([pattern_mask(j, m) for j in range(m)])
    up = np.stack([upsample_pattern(masks[j], beta, n) for j in range(m)])
    masks.flags.writeable = False
    up.flags.writeable = False
    return PatternSet(native_n=n, beta=beta, masks=masks, upsampled=up)


def generate_pattern_set(n: int, beta: int = 1) -> PatternSet:
    return _build(int(n), int(beta))


def pattern_table(n: int, beta: int = 1) -> str:
    ps = generate_pattern_set(n, beta)
    rm = (ps.m - 1) // 2
    lines = [f"N={n} beta={beta} M={ps.m}  (t = {-rm} .. {rm})"]
    width = max(len(str(ps.m - 1)), 1)
    for j in range(ps.m):
        side = "all" if j == 0 else ("drop low-t" if j % 2 else "drop high-t")
        lines.append(
            f"j={j:<{width}}  {mask_to_str(ps.masks[j])}  native {mask_to_str(ps.upsampled[j])}  {side}"
        )
    return "\n".join(lines)
