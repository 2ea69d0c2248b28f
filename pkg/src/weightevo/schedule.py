"""Evolution-rate schedule.

The global reactivation rate follows the learning-rate step schedule: the
run is split into stages at the lr milestones, the peak rate is divided by
``decay`` once per stage, and within a stage the rate ramps up along a
sigmoid anchored at the stage's first epoch (where it sits at half the
stage budget) and saturating toward the full budget by stage end.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import EpochOutOfRangeError


def sigmoid(x: float) -> float:
    # split to avoid overflow in exp for large |x|
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(frozen=True)
class RateSchedule:
    """Stage-decayed sigmoid ramp; epochs are 1-based and inclusive of ``total_epochs``."""

    total_epochs: int
    milestones: tuple[int, ...] = ()
    peak_rate: float = 0.05
    decay: float = 2.5
    ramp: float = 15.0
    _starts: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be >= 1")
        if not 0.0 <= self.peak_rate <= 1.0:
            raise ValueError("peak_rate must lie in [0, 1]")
        if self.decay < 1.0:
            raise ValueError("decay must be >= 1")
        if self.ramp <= 0.0:
            raise ValueError("ramp must be positive")
        ms = tuple(sorted(self.milestones))
        if ms != tuple(self.milestones):
            raise ValueError("milestones must be sorted ascending")
        if len(set(ms)) != len(ms):
            raise ValueError("milestones must be distinct")
        if ms and (ms[0] < 1 or ms[-1] >= self.total_epochs):
            raise ValueError("milestones must satisfy 1 <= m < total_epochs")
        object.__setattr__(self, "_starts", (1,) + tuple(m + 1 for m in ms))

    @property
    def stage_count(self) -> int:
        return len(self._starts)

    def _check(self, epoch: int) -> None:
        if not 1 <= epoch <= self.total_epochs:
            raise EpochOutOfRangeError(
                f"epoch {epoch} outside [1, {self.total_epochs}]"
            )

    def stage_of(self, epoch: int) -> int:
        """1-based stage index; a stage begins the epoch after its milestone."""
        self._check(epoch)
        return bisect_right(self._starts, epoch)

    def stage_bounds(self, stage: int) -> tuple[int, int]:
        """Inclusive (first, last) epoch of a 1-based stage."""
        if not 1 <= stage <= self.stage_count:
            raise EpochOutOfRangeError(f"stage {stage} outside [1, {self.stage_count}]")
        first = self._starts[stage - 1]
        last = self._starts[stage] - 1 if stage < self.stage_count else self.total_epochs
        return first, last

    def stage_start(self, stage: int) -> int:
        """First epoch of a 1-based stage."""
        return self.stage_bounds(stage)[0]

    def rate(self, epoch: int) -> float:
        """Fraction of all filters selected globally at ``epoch``."""
        self._check(epoch)
        stage = self.stage_of(epoch)
        base = self.peak_rate / self.decay ** (stage - 1)
        return base * sigmoid((epoch - self._starts[stage - 1]) / self.ramp)

    def describe(self) -> dict:
        return {
            "total_epochs": self.total_epochs,
            "milestones": list(self.milestones),
            "peak_rate": self.peak_rate,
            "decay": self.decay,
            "ramp": self.ramp,
            "stages": [
                {"stage": t, "first": f, "last": l}
                for t, (f, l) in (
                    (t, self.stage_bounds(t)) for t in range(1, self.stage_count + 1)
                )
            ],
        }
