"""Per-filter importance statistics.

A filter's global score is its magnitude sum averaged over input-channel
slices, which keeps filters of different widths comparable in one ranking.
Relative importance instead rescales the raw magnitude sum by the strongest
filter of the same convolution group, so "weak" is always judged against
local competition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyGroupError
from .weights import FilterView, ParameterStore, group_of, iter_filters


def filter_l1(view: FilterView) -> float:
    """Sum of absolute element values."""
    return float(np.abs(view.elements, dtype=np.float64).sum())


def filter_avg_l1(view: FilterView) -> float:
    """Magnitude sum averaged over the filter's input-channel slices."""
    return filter_l1(view) / view.layer.input_channels


@dataclass(frozen=True)
class FilterScore:
    layer_id: int
    filter_index: int
    group: int
    l1: float
    avg_l1: float

    @property
    def key(self) -> tuple[int, int]:
        return (self.layer_id, self.filter_index)


def score_filter(view: FilterView) -> FilterScore:
    l1 = filter_l1(view)
    return FilterScore(
        layer_id=view.layer.layer_id,
        filter_index=view.filter_index,
        group=group_of(view),
        l1=l1,
        avg_l1=l1 / view.layer.input_channels,
    )


def score_all(store: ParameterStore) -> list[FilterScore]:
    """Scores for every exposed filter in (layer_id, filter_index) order."""
    return [score_filter(v) for v in iter_filters(store)]


def relative_importance(scores: list[FilterScore]) -> dict[tuple[int, int], float]:
    """Per-filter l1 divided by the max l1 in the same (layer, group).

    The dominant filter of each group maps to exactly 1.0. A group whose
    strongest filter has zero norm is degenerate; every member gets 1.0 so
    nothing there looks locally weak.
    """
    if not scores:
        raise EmptyGroupError("no scores to normalize")
    peak: dict[tuple[int, int], float] = {}
    for s in scores:
        gkey = (s.layer_id, s.group)
        if s.l1 > peak.get(gkey, -1.0):
            peak[gkey] = s.l1
    out: dict[tuple[int, int], float] = {}
    for s in scores:
        top = peak[(s.layer_id, s.group)]
        out[s.key] = 1.0 if top == 0.0 else s.l1 / top
    return out


def group_scores(scores: list[FilterScore], layer_id: int, group: int) -> list[FilterScore]:
    return [s for s in scores if s.layer_id == layer_id and s.group == group]
