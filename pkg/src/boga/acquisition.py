"""Acquisition functions and top-m candidate selection.

All acquisition values are oriented so that larger is better, whatever the
optimization direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import ndtr

from .seqcore import Direction, check_direction
from .surrogate import PosteriorPrediction

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class SizeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: Literal["expected_improvement", "ucb", "greedy_mean"] = "expected_improvement"
    beta: float = 2.0
    direction: Direction = "maximize"
    # sample m_select uniformly from this many best candidates instead of taking the strict top
    uniform_top: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("expected_improvement", "ucb", "greedy_mean"):
            raise ValueError(f"unknown acquisition {self.kind!r}")
        if not self.beta >= 0:
            raise ValueError("ucb beta must be >= 0")
        check_direction(self.direction)
        if self.uniform_top is not None and self.uniform_top < 1:
            raise ValueError("uniform_top must be >= 1")


def expected_improvement(mean, std, incumbent: float, direction: Direction = "maximize"):
    """Closed-form EI of a Gaussian prediction over `incumbent`.

    Accepts scalars, arrays, or a `PosteriorPrediction` as `mean` (then `std`
    must be None). Zero spread gives ``max(improvement, 0)``.
    """
    if isinstance(mean, PosteriorPrediction):
        mean, std = mean.mean, mean.std
    scalar = np.ndim(mean) == 0 and np.ndim(std) == 0
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    delta = mean - incumbent if check_direction(direction) == "maximize" else incumbent - mean
    delta, std = np.broadcast_arrays(delta, std)
    ei = np.array(np.maximum(delta, 0.0), dtype=float)
    pos = std > 0
    if np.any(pos):
        d, s = delta[pos], std[pos]
        # subnormal spreads overflow u to +-inf, where the limits below are still exact
        with np.errstate(over="ignore"):
            u = d / s
            ei[pos] = np.maximum(d * ndtr(u) + s * _INV_SQRT_2PI * np.exp(-0.5 * u * u), 0.0)
    return float(ei) if scalar else ei


def upper_confidence_bound(mean, std, beta: float = 2.0, direction: Direction = "maximize"):
    if isinstance(mean, PosteriorPrediction):
        mean, std = mean.mean, mean.std
    if beta < 0:
        raise ValueError("beta must be >= 0")
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if check_direction(direction) == "maximize":
        out = mean + beta * std
    else:
        out = -(mean - beta * std)
    return float(out) if out.ndim == 0 else out


def greedy_mean(mean, direction: Direction = "maximize"):
    mean = np.asarray(mean, dtype=float)
    out = mean if check_direction(direction) == "maximize" else -mean
    return float(out) if out.ndim == 0 else out


def acquisition_values(spec: AcquisitionSpec, means: np.ndarray, stds: np.ndarray, incumbent: float) -> np.ndarray:
    if spec.kind == "expected_improvement":
        return np.asarray(expected_improvement(means, stds, incumbent, spec.direction), dtype=float)
    if spec.kind == "ucb":
        return np.asarray(upper_confidence_bound(means, stds, spec.beta, spec.direction), dtype=float)
    return np.asarray(greedy_mean(means, spec.direction), dtype=float)


def select_for_evaluation(
    pool: Sequence[str],
    values: Sequence[float],
    m_select: int,
    uniform_top: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Indices of the `m_select` pool members with the largest acquisition values.

    Ties go to the lexicographically smaller sequence. Selecting the whole pool
    returns every index in pool order. With `uniform_top`, the picks are drawn
    uniformly without replacement from that many best candidates.
    """
    n = len(pool)
    if len(values) != n:
        raise SizeMismatch(f"{len(values)} acquisition values for a pool of {n}")
    if not 1 <= m_select <= n:
        raise ValueError(f"m_select must lie in [1, {n}], got {m_select}")
    if m_select == n:
        return list(range(n))
    vals = np.asarray(values, dtype=float)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    ranked = sorted(range(n), key=lambda i: (-vals[i], pool[i], i))
    if uniform_top is not None and uniform_top > m_select:
        if rng is None:
            raise ValueError("uniform_top selection needs an rng")
        top = ranked[: min(uniform_top, n)]
        picks = rng.choice(len(top), size=m_select, replace=False)
        return [top[i] for i in sorted(picks.tolist())]
    return ranked[:m_select]
