"""Weight reactivation as a training plug-in.

After an epoch of ordinary optimization, filters that are weak both
network-wide and within their own layer group get one element per input
channel replaced by a blend with the group's strongest filters. Attach a
:class:`~weightevo.engine.WeightEvolution` to an epoch-end hook, or call
:func:`~weightevo.engine.evolve_once` directly on any parameter store.
"""

from .engine import (
    EngineConfig,
    EpochHookRegistry,
    EvolutionReport,
    LayerReport,
    WeightEvolution,
    attach,
    evolve_once,
)
from .errors import (
    AlreadyAttachedError,
    ConfigError,
    DominantPoolError,
    EmptyGroupError,
    EmptySliceError,
    EpochOutOfRangeError,
    EvolutionApplyError,
    MatchLengthError,
    NoEvolvableLayersError,
    SessionError,
    ShapeMismatchError,
    WeightEvolutionError,
)
from .evolve import (
    CrossoverConfig,
    CrossoverLevel,
    MatchPlan,
    MatchStrategy,
    blend_coefficient,
    crossover_filter,
    crossover_slice,
    match,
)
from .metrics import FilterScore, filter_avg_l1, filter_l1, relative_importance, score_all
from .schedule import RateSchedule, sigmoid
from .selection import (
    InferiorSet,
    SelectionConfig,
    SelectionMode,
    dominant_select,
    global_select,
    local_select,
)
from .weights import (
    ArrayStore,
    FilteredStore,
    FilterView,
    LayerKind,
    LayerOrigin,
    LayerSpec,
    ParameterStore,
    enumerate_filters,
    group_of,
)

__version__ = "0.1.0"


def __getattr__(name: str):
    # torch import is heavy; fetch the adapter only when asked for
    if name == "TorchStore":
        from .torch_adapter import TorchStore

        return TorchStore
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
