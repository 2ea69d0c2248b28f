"""Parameter store over a live torch module.

Views share memory with the module's parameters (detached CPU tensors seen
through numpy), so evolution writes land directly in the network with no
copying and no autograd involvement. The module must stay on CPU and keep
its parameter storages alive for the store's lifetime; in-place optimizer
steps are fine, reallocation (``.to(device)``, re-assignment) is not.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .weights import FilterView, LayerKind, LayerOrigin, LayerSpec, _SessionMixin


def _live_view(param: torch.Tensor, shape: tuple[int, ...]) -> np.ndarray:
    t = param.detach()
    if t.device.type != "cpu":
        raise ValueError("evolvable parameters must live on CPU")
    if not t.is_contiguous():
        raise ValueError("evolvable parameters must be contiguous")
    return t.numpy().reshape(shape)


def _conv_kind(mod: nn.Conv2d) -> LayerKind:
    out_c, in_per_group, kh, kw = mod.weight.shape
    if kh != kw:
        raise ValueError(f"non-square kernel {kh}x{kw} is not supported")
    if mod.groups == 1:
        return LayerKind.POINTWISE_CONV if kh == 1 else LayerKind.ORDINARY_CONV
    if mod.groups == out_c and in_per_group == 1:
        return LayerKind.DEPTHWISE_CONV
    return LayerKind.GROUPED_CONV


class TorchStore(_SessionMixin):
    """Filter-addressed access to a torch module's conv, BN, bias, and (optionally) classifier weights.

    Layers appear in module traversal order with stable integer ids. Frozen
    parameters (``requires_grad=False``) are left out. Linear layers join
    only when ``include_classifier`` is set, exposed as 1x1 filters.
    """

    def __init__(self, module: nn.Module, *, include_classifier: bool = False) -> None:
        self._specs: list[LayerSpec] = []
        self._arrays: dict[int, np.ndarray] = {}

        def add(
            param: torch.Tensor | None,
            kind: LayerKind,
            origin: LayerOrigin,
            label: str,
            shape: tuple[int, ...],
            group_count: int = 1,
        ) -> None:
            if param is None or not param.requires_grad:
                return
            layer_id = len(self._specs)
            spec = LayerSpec(
                layer_id=layer_id,
                kind=kind,
                filter_count=shape[0],
                input_channels=shape[1],
                kernel_size=shape[2],
                group_count=group_count,
                origin=origin,
                label=label,
            )
            self._specs.append(spec)
            self._arrays[layer_id] = _live_view(param, shape)

        for name, mod in module.named_modules():
            if isinstance(mod, nn.Conv2d):
                out_c, in_per_group, k, _ = mod.weight.shape
                add(
                    mod.weight,
                    _conv_kind(mod),
                    LayerOrigin.CONV,
                    f"{name}.weight",
                    (out_c, in_per_group, k, k),
                    group_count=mod.groups,
                )
                add(
                    mod.bias,
                    LayerKind.BIAS,
                    LayerOrigin.CONV,
                    f"{name}.bias",
                    (out_c, 1, 1, 1),
                )
            elif isinstance(mod, nn.modules.batchnorm._BatchNorm):
                if mod.weight is not None:
                    add(
                        mod.weight,
                        LayerKind.BN_SCALE,
                        LayerOrigin.BN,
                        f"{name}.weight",
                        (mod.num_features, 1, 1, 1),
                    )
                if mod.bias is not None:
                    add(
                        mod.bias,
                        LayerKind.BIAS,
                        LayerOrigin.BN,
                        f"{name}.bias",
                        (mod.num_features, 1, 1, 1),
                    )
            elif isinstance(mod, nn.Linear) and include_classifier:
                out_f, in_f = mod.weight.shape
                add(
                    mod.weight,
                    LayerKind.POINTWISE_CONV,
                    LayerOrigin.CONV,
                    f"{name}.weight",
                    (out_f, in_f, 1, 1),
                )
                add(
                    mod.bias,
                    LayerKind.BIAS,
                    LayerOrigin.CONV,
                    f"{name}.bias",
                    (out_f, 1, 1, 1),
                )

    def enumerate(self) -> list[LayerSpec]:
        return list(self._specs)

    def view(self, layer_id: int, filter_index: int) -> FilterView:
        spec = self._specs[layer_id]
        return FilterView(spec, filter_index, self._arrays[layer_id][filter_index])
