"""Shared fixtures: toy-store conversion and the session-scoped smoke runs."""

from __future__ import annotations

import pytest

from weightevo import ArrayStore, LayerKind, LayerSpec

from oracles import ToyNetwork

# 20-epoch CPU experiment used by the training/overhead acceptance checks.
# gamma is permissive and the ramp short so selection engages within a few
# epochs on a 400-filter model; seed frozen for reproducible margins.
SMOKE_BASE = {
    "model": "toy-cnn",
    "dataset": "synthetic-2class",
    "seed": 11,
    "optimizer": {"batch_size": 64, "epochs": 20, "milestones": [12], "lr": 0.1},
    "data": {"train_samples": 1024, "eval_samples": 512},
    "we": {"gamma": 0.5, "ramp": 3.0},
}


def store_from_toy(toy: ToyNetwork) -> ArrayStore:
    layers = []
    for l in toy.layers:
        spec = LayerSpec(
            layer_id=l.layer_id,
            kind=LayerKind(l.kind),
            filter_count=l.filter_count,
            input_channels=l.input_channels,
            kernel_size=l.kernel_size,
            group_count=l.group_count,
        )
        layers.append((spec, l.array.copy()))
    return ArrayStore(layers)


def run_selection_on_store(
    store,
    epoch: int,
    *,
    total_epochs: int,
    milestones: list[int],
    mode: str = "full",
    gamma: float = 0.05,
    rate: float = 0.05,
    decay: float = 2.5,
    ramp: float = 15.0,
):
    """Library-side selection on any store, shaped like the oracle's output."""
    from weightevo import RateSchedule, SelectionConfig, SelectionMode
    from weightevo.metrics import score_all
    from weightevo.selection import dominant_select, global_select, local_select

    scores = score_all(store)
    config = SelectionConfig(
        schedule=RateSchedule(
            total_epochs=total_epochs,
            milestones=tuple(milestones),
            peak_rate=rate,
            decay=decay,
            ramp=ramp,
        ),
        gamma=gamma,
        mode=SelectionMode(mode),
    )
    tbd = global_select(scores, epoch, config)
    by_group = {}
    for s in scores:
        by_group.setdefault((s.layer_id, s.group), []).append(s)
    sets = []
    for inf_set in local_select(tbd, scores, config):
        dominant = dominant_select(by_group[(inf_set.layer_id, inf_set.group)], inf_set)
        sets.append(
            {
                "layer_id": inf_set.layer_id,
                "group": inf_set.group,
                "inferior": list(inf_set.members),
                "dominant": dominant,
            }
        )
    return {"tbd": tbd, "sets": sets}


def run_production_selection(toy: ToyNetwork, epoch: int, **params):
    """Library-side selection on a toy network."""
    return run_selection_on_store(store_from_toy(toy), epoch, **params)


def assert_selection_matches_oracle(toy: ToyNetwork, epoch: int, **params) -> None:
    """Index-exact equality of the two-stage selection against the brute-force oracle."""
    from oracles import oracle_select

    got = run_production_selection(toy, epoch, **params)
    want = oracle_select(
        toy,
        epoch,
        total_epochs=params["total_epochs"],
        milestones=params["milestones"],
        r_hat=params.get("rate", 0.05),
        beta=params.get("decay", 2.5),
        eta=params.get("ramp", 15.0),
        gamma=params.get("gamma", 0.05),
        mode=params.get("mode", "full"),
    )
    assert got["tbd"] == want["tbd"]
    assert len(got["sets"]) == len(want["sets"])
    for g, w in zip(got["sets"], want["sets"]):
        assert (g["layer_id"], g["group"]) == (w["layer_id"], w["group"])
        assert [i for i, _ in g["inferior"]] == [i for i, _ in w["inferior"]]
        assert [i for i, _ in g["dominant"]] == [i for i, _ in w["dominant"]]
        for (_, a), (_, b) in zip(g["inferior"] + g["dominant"], w["inferior"] + w["dominant"]):
            assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@pytest.fixture(scope="session")
def smoke_runs(tmp_path_factory):
    """Baseline and evolved 20-epoch runs on the synthetic task (shared per session)."""
    from weightevo.harness.config import config_from_dict
    from weightevo.harness.train import run

    root = tmp_path_factory.mktemp("smoke")
    baseline_cfg = config_from_dict(
        {
            **SMOKE_BASE,
            "output_dir": str(root / "baseline"),
            "we": {**SMOKE_BASE["we"], "enabled": False},
        }
    )
    evolved_cfg = config_from_dict({**SMOKE_BASE, "output_dir": str(root / "evolved")})
    return {
        "root": root,
        "baseline": run(baseline_cfg),
        "evolved": run(evolved_cfg),
        "baseline_dir": root / "baseline",
        "evolved_dir": root / "evolved",
    }
