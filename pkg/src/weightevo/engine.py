"""End-of-epoch orchestration: score, select, match, apply, report.

One evolve call is atomic. Scores are snapshotted once, every write is
staged from that snapshot before the first parameter is touched, and a
failure while applying rolls the store back to its pre-call bytes. Hosts
either call :func:`evolve_once` themselves or register a
:class:`WeightEvolution` on an epoch-end hook registry.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AlreadyAttachedError, EvolutionApplyError, NoEvolvableLayersError
from .evolve import CrossoverConfig, MatchStrategy, match, plan_filter
from .metrics import FilterScore, score_filter
from .selection import SelectionConfig, dominant_select, global_select, local_select
from .weights import LayerOrigin, LayerSpec, ParameterStore

WriteHook = Callable[[int], None]


@dataclass(frozen=True)
class EngineConfig:
    selection: SelectionConfig
    crossover: CrossoverConfig = CrossoverConfig()
    matching: MatchStrategy = MatchStrategy.FORWARD
    update_interval: int = 1
    without_bn: bool = False
    without_conv: bool = False

    def __post_init__(self) -> None:
        if self.update_interval < 1:
            raise ValueError("update_interval must be >= 1")

    def admits(self, spec: LayerSpec) -> bool:
        if self.without_bn and spec.origin is LayerOrigin.BN:
            return False
        if self.without_conv and spec.origin is LayerOrigin.CONV:
            return False
        return True


@dataclass(frozen=True)
class LayerReport:
    layer_id: int
    label: str
    inferior_count: int
    elements_changed: int


@dataclass(frozen=True)
class EvolutionReport:
    epoch: int
    stage: int
    rate: float
    tbd_count: int
    layers: tuple[LayerReport, ...]
    wall_time_ms: float

    @property
    def total_inferior(self) -> int:
        return sum(l.inferior_count for l in self.layers)

    @property
    def total_elements_changed(self) -> int:
        return sum(l.elements_changed for l in self.layers)

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "stage": self.stage,
            "rate": self.rate,
            "tbd_count": self.tbd_count,
            "total_inferior": self.total_inferior,
            "elements_changed": self.total_elements_changed,
            "wall_time_ms": round(self.wall_time_ms, 3),
            "layers": [
                {
                    "layer_id": l.layer_id,
                    "label": l.label,
                    "c": l.inferior_count,
                    "elements_changed": l.elements_changed,
                }
                for l in self.layers
            ],
        }


@dataclass
class _StagedWrite:
    layer_id: int
    filter_index: int
    flat_index: int | None  # None marks a whole-filter rewrite
    value: float | np.ndarray


def evolve_once(
    store: ParameterStore,
    epoch: int,
    config: EngineConfig,
    *,
    write_hook: WriteHook | None = None,
) -> EvolutionReport:
    """Run one full evolution pass over the store's parameters.

    ``write_hook`` is called with the 0-based write index just before each
    parameter write; an exception from it (or from a write) triggers a
    bitwise rollback of everything already applied.
    """
    started = time.perf_counter()
    with store.exclusive_session():
        specs = [s for s in store.enumerate() if config.admits(s)]
        if not any(s.filter_count for s in specs):
            raise NoEvolvableLayersError("no evolvable layers")

        scores: list[FilterScore] = []
        for spec in specs:
            for j in range(spec.filter_count):
                scores.append(score_filter(store.view(spec.layer_id, j)))

        tbd = global_select(scores, epoch, config.selection)
        inferior_sets = local_select(tbd, scores, config.selection)

        by_group: dict[tuple[int, int], list[FilterScore]] = {}
        for s in scores:
            by_group.setdefault((s.layer_id, s.group), []).append(s)

        # stage every write before touching a single parameter
        staged: list[_StagedWrite] = []
        inferior_per_layer: dict[int, int] = {}
        for inf_set in inferior_sets:
            inferior_per_layer[inf_set.layer_id] = (
                inferior_per_layer.get(inf_set.layer_id, 0) + inf_set.c
            )
            dominant = dominant_select(by_group[(inf_set.layer_id, inf_set.group)], inf_set)
            plan = match(inf_set, dominant, config.matching)
            for inf_idx, dom_idx in plan.pairs:
                inf_view = store.view(inf_set.layer_id, inf_idx)
                dom_view = store.view(inf_set.layer_id, dom_idx)
                planned = plan_filter(inf_view, dom_view, config.crossover)
                if planned is None:
                    continue
                if isinstance(planned, np.ndarray):
                    staged.append(_StagedWrite(inf_set.layer_id, inf_idx, None, planned))
                else:
                    for pos, value in planned:
                        staged.append(_StagedWrite(inf_set.layer_id, inf_idx, pos, value))

        changed_per_layer = _apply(store, staged, write_hook)

    layers = tuple(
        LayerReport(
            layer_id=spec.layer_id,
            label=spec.label,
            inferior_count=inferior_per_layer.get(spec.layer_id, 0),
            elements_changed=changed_per_layer.get(spec.layer_id, 0),
        )
        for spec in specs
    )
    return EvolutionReport(
        epoch=epoch,
        stage=config.selection.schedule.stage_of(epoch),
        rate=config.selection.schedule.rate(epoch),
        tbd_count=len(tbd),
        layers=layers,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
    )


def _apply(
    store: ParameterStore, staged: list[_StagedWrite], write_hook: WriteHook | None
) -> dict[int, int]:
    """Write all staged updates; on any failure restore the exact prior bytes."""
    changed: dict[int, int] = {}
    undo: list[tuple[np.ndarray, int | None, np.ndarray | float]] = []
    try:
        for i, w in enumerate(staged):
            if write_hook is not None:
                write_hook(i)
            target = store.view(w.layer_id, w.filter_index).elements
            if w.flat_index is None:
                undo.append((target, None, target.copy()))
                before = target.copy()
                target[...] = w.value
                delta = int(np.count_nonzero(target != before))
            else:
                flat = target.reshape(-1)
                old = flat[w.flat_index]
                undo.append((target, w.flat_index, old))
                flat[w.flat_index] = w.value
                delta = int(flat[w.flat_index] != old)
            if delta:
                changed[w.layer_id] = changed.get(w.layer_id, 0) + delta
    except BaseException as exc:
        for target, pos, old in reversed(undo):
            if pos is None:
                target[...] = old
            else:
                target.reshape(-1)[pos] = old
        raise EvolutionApplyError(f"evolution aborted, parameters restored: {exc}") from exc
    return changed


class EpochHookRegistry:
    """Minimal end-of-epoch callback point a host training loop can embed."""

    def __init__(self) -> None:
        self._hooks: dict[int, Callable[[int], object]] = {}
        self._next_token = 0

    def add(self, hook: Callable[[int], object]) -> int:
        token = self._next_token
        self._next_token += 1
        self._hooks[token] = hook
        return token

    def remove(self, token: int) -> None:
        self._hooks.pop(token, None)

    def fire(self, epoch: int) -> list[object]:
        return [hook(epoch) for hook in self._hooks.values()]


class WeightEvolution:
    """Attachable plug-in: evolves the store every ``update_interval`` epochs.

    Doubles as the detach handle. Reports accumulate on the instance and are
    forwarded to ``sink`` (one call per evolve) when given.
    """

    def __init__(
        self,
        store: ParameterStore,
        config: EngineConfig,
        *,
        sink: Callable[[EvolutionReport], None] | None = None,
    ) -> None:
        self.store = store
        self.config = config
        self.sink = sink
        self.reports: list[EvolutionReport] = []
        self._registry: EpochHookRegistry | None = None
        self._token: int | None = None

    def attach(self, registry: EpochHookRegistry) -> "WeightEvolution":
        if self._token is not None:
            raise AlreadyAttachedError("already attached to a hook registry")
        self._registry = registry
        self._token = registry.add(self.on_epoch_end)
        return self

    def detach(self) -> None:
        if self._registry is not None and self._token is not None:
            self._registry.remove(self._token)
        self._registry = None
        self._token = None

    def on_epoch_end(self, epoch: int) -> EvolutionReport | None:
        if epoch % self.config.update_interval != 0:
            return None
        report = evolve_once(self.store, epoch, self.config)
        self.reports.append(report)
        if self.sink is not None:
            self.sink(report)
        return report


def attach(
    registry: EpochHookRegistry,
    store: ParameterStore,
    config: EngineConfig,
    *,
    sink: Callable[[EvolutionReport], None] | None = None,
) -> WeightEvolution:
    """Register evolution on a host loop's epoch-end registry; returns the detach handle."""
    return WeightEvolution(store, config, sink=sink).attach(registry)
