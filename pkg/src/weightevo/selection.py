"""Two-stage choice of which filters get reactivated.

Global stage: one network-wide ranking by average elementwise magnitude,
keeping the smallest fraction given by the rate schedule. Local stage: a
candidate survives only if it is also weak relative to its own layer group
(relative importance below a threshold). Survivors form per-group inferior
sets; donors are drawn from the strongest remaining filters of the same
group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DominantPoolError
from .metrics import FilterScore, relative_importance
from .schedule import RateSchedule


class SelectionMode(str, Enum):
    FULL = "full"
    GLOBAL_ONLY = "global-only"
    LOCAL_ONLY = "local-only"


@dataclass(frozen=True)
class SelectionConfig:
    schedule: RateSchedule
    gamma: float = 0.05
    mode: SelectionMode = SelectionMode.FULL

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")


@dataclass(frozen=True)
class InferiorSet:
    """Filters of one (layer, group) picked for reactivation, weakest first."""

    layer_id: int
    group: int
    members: tuple[tuple[int, float], ...]  # (filter_index, l1), ascending (l1, filter_index)

    @property
    def c(self) -> int:
        return len(self.members)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.members)


def global_select(
    scores: list[FilterScore], epoch: int, config: SelectionConfig
) -> set[tuple[int, int]]:
    """Keys of the floor(rate * M) filters with globally smallest avg magnitude.

    Ties resolve by (avg_l1, layer_id, filter_index) so runs are reproducible.
    Local-only mode admits everything; the per-group stage does all the work.
    """
    if config.mode is SelectionMode.LOCAL_ONLY:
        config.schedule.rate(epoch)  # still validates the epoch
        return {s.key for s in scores}
    n = math.floor(config.schedule.rate(epoch) * len(scores))
    if n == 0:
        return set()
    ranked = sorted(scores, key=lambda s: (s.avg_l1, s.layer_id, s.filter_index))
    return {s.key for s in ranked[:n]}


def local_select(
    tbd: set[tuple[int, int]], scores: list[FilterScore], config: SelectionConfig
) -> list[InferiorSet]:
    """Filter the global candidates by in-group weakness; clamp to half the group.

    Global-only mode skips the relative-importance test. The clamp keeps the
    smallest members so at least as many donors as recipients remain in every
    group. Only nonempty sets are returned, ordered by (layer_id, group).
    """
    ri = relative_importance(scores) if config.mode is not SelectionMode.GLOBAL_ONLY else None
    by_group: dict[tuple[int, int], list[FilterScore]] = {}
    for s in scores:
        by_group.setdefault((s.layer_id, s.group), []).append(s)

    out: list[InferiorSet] = []
    for (layer_id, group), members in sorted(by_group.items()):
        chosen = [
            s
            for s in members
            if s.key in tbd and (ri is None or ri[s.key] < config.gamma)
        ]
        if not chosen:
            continue
        chosen.sort(key=lambda s: (s.l1, s.filter_index))
        cap = len(members) // 2
        chosen = chosen[:cap]
        if not chosen:
            continue
        out.append(
            InferiorSet(
                layer_id=layer_id,
                group=group,
                members=tuple((s.filter_index, s.l1) for s in chosen),
            )
        )
    return out


def dominant_select(
    group_scores: list[FilterScore], inferior: InferiorSet
) -> list[tuple[int, float]]:
    """The c strongest non-inferior filters of the group, weakest-of-them first.

    Returned ascending by (l1, filter_index) so position k pairs with the
    k-th inferior member under order-preserving matching.
    """
    taken = set(inferior.indices)
    pool = [s for s in group_scores if s.filter_index not in taken]
    if inferior.c > len(pool):
        raise DominantPoolError(
            f"layer {inferior.layer_id} group {inferior.group}: "
            f"need {inferior.c} donors, only {len(pool)} available"
        )
    pool.sort(key=lambda s: (-s.l1, s.filter_index))
    top = pool[: inferior.c]
    top.sort(key=lambda s: (s.l1, s.filter_index))
    return [(s.filter_index, s.l1) for s in top]
