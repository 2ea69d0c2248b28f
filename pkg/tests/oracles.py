"""Brute-force reference implementations, independent of the library.

Everything here recomputes selection and crossover from first principles
with plain Python scans and sorts. No code is shared with the production
modules; numpy appears only as a container for test data (values are pulled
out with .tolist() before any arithmetic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("ordinary-conv", "depthwise-conv", "pointwise-conv", "grouped-conv", "bn-scale", "bias")


@dataclass
class ToyLayer:
    layer_id: int
    kind: str
    filter_count: int
    input_channels: int
    kernel_size: int
    group_count: int
    array: np.ndarray  # (C, I, K, K) float64


@dataclass
class ToyNetwork:
    layers: list[ToyLayer] = field(default_factory=list)


def make_toy(seed: int, max_layers: int = 10, max_filters: int = 32) -> ToyNetwork:
    """Seeded random small network covering all layer kinds and tie/zero edge cases."""
    rng = np.random.default_rng(seed)
    n_layers = int(rng.integers(1, max_layers + 1))
    layers: list[ToyLayer] = []
    for lid in range(n_layers):
        kind = KINDS[int(rng.integers(0, len(KINDS)))]
        if kind == "ordinary-conv":
            c = int(rng.integers(2, max_filters + 1))
            i = int(rng.integers(1, 9))
            k = int(rng.integers(2, 4))
            g = 1
        elif kind == "depthwise-conv":
            c = int(rng.integers(2, max_filters + 1))
            i = 1
            k = int(rng.integers(2, 4))
            g = c
        elif kind == "pointwise-conv":
            c = int(rng.integers(2, max_filters + 1))
            i = int(rng.integers(2, 17))
            k = 1
            g = 1
        elif kind == "grouped-conv":
            g = int(rng.choice([2, 4]))
            gs = int(rng.integers(2, 9))
            c = min(g * gs, max_filters - max_filters % g)
            i = int(rng.integers(1, 5))
            k = int(rng.choice([1, 3]))
        else:  # bn-scale or bias
            c = int(rng.integers(2, max_filters + 1))
            i = 1
            k = 1
            g = 1
        arr = rng.normal(size=(c, i, k, k))
        # edge cases: exact duplicates (ties), dead filters, flat layers
        roll = rng.random()
        if roll < 0.15 and c >= 2:
            arr[int(rng.integers(0, c))] = arr[int(rng.integers(0, c))]
        elif roll < 0.25:
            arr[int(rng.integers(0, c))] = 0.0
        elif roll < 0.30:
            arr[:] = arr[0]
        layers.append(ToyLayer(lid, kind, c, i, k, g, arr))
    return ToyNetwork(layers)


# ---------------------------------------------------------------- schedule

def oracle_sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def oracle_rate(
    epoch: int, total_epochs: int, milestones: list[int], r_hat: float, beta: float, eta: float
) -> float:
    starts = [1] + [m + 1 for m in milestones]
    t = 0
    e0 = 1
    for idx, s in enumerate(starts, start=1):
        if s <= epoch:
            t = idx
            e0 = s
    return (r_hat / beta ** (t - 1)) * oracle_sigmoid((epoch - e0) / eta)


# ---------------------------------------------------------------- selection

def _flat(values: np.ndarray) -> list[float]:
    return [float(v) for v in values.reshape(-1).tolist()]


def _l1(values: np.ndarray) -> float:
    total = 0.0
    for v in _flat(values):
        total += abs(v)
    return total


def _group_of(layer: ToyLayer, idx: int) -> int:
    return idx // (layer.filter_count // layer.group_count)


def oracle_select(
    toy: ToyNetwork,
    epoch: int,
    *,
    total_epochs: int,
    milestones: list[int],
    r_hat: float = 0.05,
    beta: float = 2.5,
    eta: float = 15.0,
    gamma: float = 0.05,
    mode: str = "full",
) -> dict:
    """Exhaustive re-derivation of the two-stage selection plus donor sets.

    Returns {"tbd": set of (layer_id, idx), "sets": [per-(layer, group) dict]},
    with each entry carrying inferior and dominant (index, l1) lists in the
    order the library promises.
    """
    rows = []  # (layer_id, idx, group, l1, avg)
    for layer in toy.layers:
        for idx in range(layer.filter_count):
            l1 = _l1(layer.array[idx])
            rows.append((layer.layer_id, idx, _group_of(layer, idx), l1, l1 / layer.input_channels))

    if mode == "local-only":
        tbd = {(lid, idx) for lid, idx, _, _, _ in rows}
    else:
        r = oracle_rate(epoch, total_epochs, milestones, r_hat, beta, eta)
        n = math.floor(r * len(rows))
        ranked = sorted(rows, key=lambda row: (row[4], row[0], row[1]))
        tbd = {(lid, idx) for lid, idx, _, _, _ in ranked[:n]}

    groups: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for lid, idx, grp, l1, _ in rows:
        groups.setdefault((lid, grp), []).append((idx, l1))

    sets = []
    for (lid, grp), members in sorted(groups.items()):
        max_l1 = max(l1 for _, l1 in members)
        chosen = []
        for idx, l1 in members:
            if (lid, idx) not in tbd:
                continue
            if mode != "global-only":
                ri = 1.0 if max_l1 == 0.0 else l1 / max_l1
                if not ri < gamma:
                    continue
            chosen.append((idx, l1))
        chosen.sort(key=lambda m: (m[1], m[0]))
        chosen = chosen[: len(members) // 2]
        if not chosen:
            continue
        taken = {idx for idx, _ in chosen}
        pool = [(idx, l1) for idx, l1 in members if idx not in taken]
        pool.sort(key=lambda m: (-m[1], m[0]))
        dominant = sorted(pool[: len(chosen)], key=lambda m: (m[1], m[0]))
        sets.append({"layer_id": lid, "group": grp, "inferior": chosen, "dominant": dominant})
    return {"tbd": tbd, "sets": sets}


# ---------------------------------------------------------------- crossover

def oracle_crossover(
    inf_slice: list[float], dom_slice: list[float], alpha: float | None = None
) -> tuple[list[float], int | None]:
    """Scalar re-derivation of the one-element slice update."""
    q = 0
    for k in range(1, len(inf_slice)):
        if abs(inf_slice[k]) < abs(inf_slice[q]):
            q = k
    p = 0
    for k in range(1, len(dom_slice)):
        if abs(dom_slice[k]) > abs(dom_slice[p]):
            p = k
    w_q = inf_slice[q]
    w_p = dom_slice[p]
    if abs(w_q) + abs(w_p) == 0.0:
        return list(inf_slice), None
    a = alpha if alpha is not None else abs(w_q) / (abs(w_q) + abs(w_p))
    out = list(inf_slice)
    out[q] = a * w_q + (1.0 - a) * w_p
    return out, (q if out[q] != w_q else None)
