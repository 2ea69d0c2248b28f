"""Filter-addressed views over a network's parameters.

Every other module operates on semantic "filters" rather than raw framework
tensors: an ordinary conv filter is an (I, K, K) block, a BN scale or any
bias is a scalar filter of shape (1, 1, 1). A parameter store adapter
enumerates layers and hands out mutable views; writes through a view land in
the underlying storage.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Protocol, runtime_checkable

import numpy as np

from .errors import NoEvolvableLayersError, SessionError


class LayerKind(str, Enum):
    ORDINARY_CONV = "ordinary-conv"
    DEPTHWISE_CONV = "depthwise-conv"
    POINTWISE_CONV = "pointwise-conv"
    GROUPED_CONV = "grouped-conv"
    BN_SCALE = "bn-scale"
    BIAS = "bias"


CONV_KINDS = frozenset(
    {
        LayerKind.ORDINARY_CONV,
        LayerKind.DEPTHWISE_CONV,
        LayerKind.POINTWISE_CONV,
        LayerKind.GROUPED_CONV,
    }
)


class LayerOrigin(str, Enum):
    """Which part of the network a layer's parameters belong to.

    Needed for the without-BN / without-CONV ablations: a bias layer is
    excluded together with the module it belongs to.
    """

    CONV = "conv"
    BN = "bn"


@dataclass(frozen=True)
class LayerSpec:
    """Shape and identity of one evolvable layer.

    ``filter_count`` filters of ``input_channels`` x ``kernel_size``^2
    elements each; scalar layers (BN scales, biases) have both set to 1.
    """

    layer_id: int
    kind: LayerKind
    filter_count: int
    input_channels: int = 1
    kernel_size: int = 1
    group_count: int = 1
    origin: LayerOrigin | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if min(self.filter_count, self.input_channels, self.kernel_size, self.group_count) < 1:
            raise ValueError(f"layer {self.layer_id}: all shape fields must be >= 1")
        if self.kind in (LayerKind.BN_SCALE, LayerKind.BIAS):
            if self.input_channels != 1 or self.kernel_size != 1:
                raise ValueError(f"layer {self.layer_id}: scalar layers must have I = K = 1")
        if self.group_count > 1 and self.kind not in (
            LayerKind.GROUPED_CONV,
            LayerKind.DEPTHWISE_CONV,
        ):
            raise ValueError(f"layer {self.layer_id}: only grouped/depthwise layers may have groups")
        if self.kind is LayerKind.DEPTHWISE_CONV:
            if self.group_count != self.filter_count or self.input_channels != 1:
                raise ValueError(f"layer {self.layer_id}: depthwise needs G = C and I = 1")
        if self.filter_count % self.group_count:
            raise ValueError(f"layer {self.layer_id}: group_count must divide filter_count")
        if self.origin is None:
            derived = LayerOrigin.BN if self.kind is LayerKind.BN_SCALE else LayerOrigin.CONV
            object.__setattr__(self, "origin", derived)

    @property
    def elements_per_filter(self) -> int:
        return self.input_channels * self.kernel_size * self.kernel_size

    @property
    def group_size(self) -> int:
        return self.filter_count // self.group_count

    def to_dict(self) -> dict:
        return {
            "layer_id": self.layer_id,
            "kind": self.kind.value,
            "filter_count": self.filter_count,
            "input_channels": self.input_channels,
            "kernel_size": self.kernel_size,
            "group_count": self.group_count,
            "origin": self.origin.value,
            "label": self.label,
        }


class FilterView:
    """Mutable window onto one filter's elements.

    ``elements`` is a live (I, K, K) array sharing memory with the parameter
    store, so in-place writes are immediately visible to the host network.
    """

    __slots__ = ("layer", "filter_index", "_elements")

    def __init__(self, layer: LayerSpec, filter_index: int, elements: np.ndarray):
        if not 0 <= filter_index < layer.filter_count:
            raise IndexError(f"filter {filter_index} outside layer {layer.layer_id}")
        expected = (layer.input_channels, layer.kernel_size, layer.kernel_size)
        if elements.shape != expected:
            raise ValueError(f"expected elements of shape {expected}, got {elements.shape}")
        self.layer = layer
        self.filter_index = filter_index
        self._elements = elements

    @property
    def key(self) -> tuple[int, int]:
        return (self.layer.layer_id, self.filter_index)

    @property
    def elements(self) -> np.ndarray:
        return self._elements

    def slice(self, index: int) -> np.ndarray:
        """The ``index``-th input-channel slice as a flat length-K^2 vector (live view)."""
        k = self.layer.kernel_size
        return self._elements[index].reshape(k * k)

    def read(self) -> np.ndarray:
        """Detached copy of the elements."""
        return np.array(self._elements, copy=True)

    def write(self, values: np.ndarray) -> None:
        """Overwrite all elements (values broadcast/cast to the store dtype)."""
        self._elements[...] = values


@runtime_checkable
class ParameterStore(Protocol):
    """Adapter contract every parameter backend implements."""

    def enumerate(self) -> list[LayerSpec]:
        """Opted-in layers in deterministic traversal order."""
        ...

    def view(self, layer_id: int, filter_index: int) -> FilterView:
        ...

    def exclusive_session(self):
        """Context manager granting sole mutation rights; rejects concurrent entry."""
        ...


class _SessionMixin:
    """Shared single-entry exclusive session bookkeeping."""

    _session_active: bool = False

    @contextmanager
    def exclusive_session(self):
        if self._session_active:
            raise SessionError("exclusive session already active")
        self._session_active = True
        try:
            yield self
        finally:
            self._session_active = False


class ArrayStore(_SessionMixin):
    """In-memory parameter store over dense numpy arrays, one (C, I, K, K) block per layer."""

    def __init__(self, layers: list[tuple[LayerSpec, np.ndarray]]):
        self._specs: list[LayerSpec] = []
        self._arrays: dict[int, np.ndarray] = {}
        for spec, arr in layers:
            expected = (
                spec.filter_count,
                spec.input_channels,
                spec.kernel_size,
                spec.kernel_size,
            )
            arr = np.ascontiguousarray(arr)
            if arr.shape != expected:
                raise ValueError(f"layer {spec.layer_id}: expected array {expected}, got {arr.shape}")
            if spec.layer_id in self._arrays:
                raise ValueError(f"duplicate layer_id {spec.layer_id}")
            self._specs.append(spec)
            self._arrays[spec.layer_id] = arr

    def enumerate(self) -> list[LayerSpec]:
        return list(self._specs)

    def view(self, layer_id: int, filter_index: int) -> FilterView:
        spec = next((s for s in self._specs if s.layer_id == layer_id), None)
        if spec is None:
            raise KeyError(f"unknown layer_id {layer_id}")
        return FilterView(spec, filter_index, self._arrays[layer_id][filter_index])

    def array(self, layer_id: int) -> np.ndarray:
        return self._arrays[layer_id]

    def scaled(self, factor: float) -> "ArrayStore":
        """A new store with every parameter multiplied by ``factor``."""
        return ArrayStore([(s, self._arrays[s.layer_id] * factor) for s in self._specs])


class FilteredStore(_SessionMixin):
    """Store wrapper exposing only layers accepted by a predicate.

    Layer ids are preserved, so reports stay addressable against the full
    network; views of hidden layers are refused.
    """

    def __init__(self, base: ParameterStore, predicate):
        self._base = base
        self._specs = [s for s in base.enumerate() if predicate(s)]
        self._visible = {s.layer_id for s in self._specs}

    def enumerate(self) -> list[LayerSpec]:
        return list(self._specs)

    def view(self, layer_id: int, filter_index: int) -> FilterView:
        if layer_id not in self._visible:
            raise KeyError(f"layer_id {layer_id} is not exposed by this store")
        return self._base.view(layer_id, filter_index)


def enumerate_filters(store: ParameterStore) -> list[FilterView]:
    """All filters of all exposed layers in (layer_id, filter_index) order."""
    views: list[FilterView] = []
    for spec in store.enumerate():
        for j in range(spec.filter_count):
            views.append(store.view(spec.layer_id, j))
    if not views:
        raise NoEvolvableLayersError("no evolvable layers")
    return views


def iter_filters(store: ParameterStore) -> Iterator[FilterView]:
    for spec in store.enumerate():
        for j in range(spec.filter_count):
            yield store.view(spec.layer_id, j)


def group_of(view: FilterView) -> int:
    """Index of the convolution group the filter belongs to (0 for ungrouped layers)."""
    return view.filter_index // view.layer.group_size
