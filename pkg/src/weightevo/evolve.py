"""Pairing of weak filters with strong donors and the crossover update.

Each inferior filter is matched to one dominant filter of the same layer
group. The element-level update then works slice by slice: in every input
channel, the recipient's smallest-magnitude element is replaced by a convex
blend of itself and the donor slice's largest-magnitude element. The blend
coefficient can adapt to the two magnitudes (the weaker the recipient, the
more it inherits) or be fixed for ablations. A filter-level variant rewrites
the whole recipient instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptySliceError, MatchLengthError, ShapeMismatchError
from .selection import InferiorSet
from .weights import FilterView


class MatchStrategy(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


class CrossoverLevel(str, Enum):
    ELEMENT = "element"
    FILTER = "filter"


@dataclass(frozen=True)
class CrossoverConfig:
    """``alpha=None`` adapts the blend per element pair; a float fixes it."""

    alpha: float | None = None
    level: CrossoverLevel = CrossoverLevel.ELEMENT

    def __post_init__(self) -> None:
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError("fixed alpha must lie in [0, 1]")

    @property
    def adaptive(self) -> bool:
        return self.alpha is None


@dataclass(frozen=True)
class MatchPlan:
    layer_id: int
    group: int
    pairs: tuple[tuple[int, int], ...]  # (inferior_index, dominant_index)
    strategy: MatchStrategy


def match(
    inferior: InferiorSet, dominant: list[tuple[int, float]], strategy: MatchStrategy
) -> MatchPlan:
    """Pair recipients with donors, both lists ascending in magnitude.

    Forward keeps rank order (k-th weakest recipient gets the k-th weakest
    donor); reverse flips the donor order so the weakest recipient meets the
    strongest donor.
    """
    if inferior.c != len(dominant):
        raise MatchLengthError(
            f"layer {inferior.layer_id}: {inferior.c} inferior vs {len(dominant)} dominant"
        )
    donors = [j for j, _ in dominant]
    if strategy is MatchStrategy.REVERSE:
        donors = donors[::-1]
    return MatchPlan(
        layer_id=inferior.layer_id,
        group=inferior.group,
        pairs=tuple(zip(inferior.indices, donors)),
        strategy=strategy,
    )


def blend_coefficient(w_q: float, w_p: float, config: CrossoverConfig) -> float:
    """Weight on the recipient element; the donor gets the complement."""
    if not config.adaptive:
        return config.alpha
    return abs(w_q) / (abs(w_q) + abs(w_p))


def plan_slice(
    inf_slice: np.ndarray, dom_slice: np.ndarray, config: CrossoverConfig
) -> tuple[int, float] | None:
    """Compute, without writing, the one-element update for a slice pair.

    Returns (position, new value), or None when both chosen elements are
    exactly zero (nothing to transfer). Position is the recipient's
    min-magnitude element; the donor contributes its max-magnitude one.
    Ties pick the lowest position on both sides.
    """
    if inf_slice.size == 0:
        raise EmptySliceError("cannot cross over an empty slice")
    if inf_slice.shape != dom_slice.shape:
        raise ShapeMismatchError(f"slice shapes differ: {inf_slice.shape} vs {dom_slice.shape}")
    q = int(np.argmin(np.abs(inf_slice)))
    p = int(np.argmax(np.abs(dom_slice)))
    w_q = float(inf_slice[q])
    w_p = float(dom_slice[p])
    if abs(w_q) + abs(w_p) == 0.0:
        return None
    alpha = blend_coefficient(w_q, w_p, config)
    return q, alpha * w_q + (1.0 - alpha) * w_p


def crossover_slice(
    inf_slice: np.ndarray, dom_slice: np.ndarray, config: CrossoverConfig
) -> int | None:
    """Apply the slice update in place; index written, or None if no value changed.

    A write that lands on the stored value it replaces (fixed alpha = 1, or
    equal elements) does not count as a change.
    """
    planned = plan_slice(inf_slice, dom_slice, config)
    if planned is None:
        return None
    q, value = planned
    old = inf_slice[q]
    inf_slice[q] = value
    return q if inf_slice[q] != old else None


def plan_filter(
    inf: FilterView, dom: FilterView, config: CrossoverConfig
) -> list[tuple[int, float]] | np.ndarray | None:
    """Stage a whole-filter update without writing.

    Element level: list of (flat element index, new value), one entry per
    input-channel slice that has something to transfer. Filter level: the
    full replacement array (blend of recipient and donor, coefficient from
    their whole-filter magnitudes), or None for a zero-zero pair.
    """
    if inf.elements.shape != dom.elements.shape:
        raise ShapeMismatchError(
            f"filter shapes differ: {inf.elements.shape} vs {dom.elements.shape}"
        )
    if config.level is CrossoverLevel.FILTER:
        a = inf.elements.astype(np.float64)
        b = dom.elements.astype(np.float64)
        if config.adaptive:
            l1_a = float(np.abs(a).sum())
            l1_b = float(np.abs(b).sum())
            if l1_a + l1_b == 0.0:
                return None
            alpha = l1_a / (l1_a + l1_b)
        else:
            alpha = config.alpha
        return alpha * a + (1.0 - alpha) * b

    k2 = inf.layer.kernel_size ** 2
    writes: list[tuple[int, float]] = []
    for s in range(inf.layer.input_channels):
        planned = plan_slice(inf.slice(s), dom.slice(s), config)
        if planned is not None:
            q, value = planned
            writes.append((s * k2 + q, value))
    return writes


def crossover_filter(inf: FilterView, dom: FilterView, config: CrossoverConfig) -> int:
    """Apply the staged filter update in place; count of elements whose stored value changed."""
    planned = plan_filter(inf, dom, config)
    if planned is None:
        return 0
    flat = inf.elements.reshape(-1)
    if isinstance(planned, np.ndarray):
        before = flat.copy()
        inf.elements[...] = planned
        return int(np.count_nonzero(flat != before))
    changed = 0
    for pos, value in planned:
        old = flat[pos]
        flat[pos] = value
        if flat[pos] != old:
            changed += 1
    return changed
