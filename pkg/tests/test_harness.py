"""Config schema, training artifacts, and the CLI surface."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import pytest
import yaml

from weightevo.errors import ConfigError
from weightevo.evolve import CrossoverLevel, MatchStrategy
from weightevo.harness.cli import main
from weightevo.harness.config import (
    OUTPUT_ROOT_ENV,
    apply_overrides,
    coerce_override,
    config_from_dict,
    load_config,
)
from weightevo.harness.datasets import build_dataset
from weightevo.harness.models import build_model
from weightevo.harness.train import run as run_training
from weightevo.selection import SelectionMode

# small enough that a 2-epoch run takes well under a second
TINY = {
    "model": "toy-cnn",
    "dataset": "synthetic-2class",
    "seed": 7,
    "optimizer": {"batch_size": 64, "epochs": 2, "milestones": []},
    "data": {"train_samples": 128, "eval_samples": 64},
    "we": {"gamma": 0.5, "ramp": 3.0},
}


def tiny_config(out_dir, **extra):
    raw = {**TINY, "output_dir": str(out_dir)}
    for key, value in extra.items():
        if isinstance(value, dict):
            raw[key] = {**raw.get(key, {}), **value}
        else:
            raw[key] = value
    return config_from_dict(raw)


class TestConfigSchema:
    def test_round_trip(self):
        cfg = config_from_dict(TINY)
        again = config_from_dict(cfg.to_dict())
        assert dataclasses.asdict(again) == dataclasses.asdict(cfg)

    def test_defaults_validate(self):
        cfg = config_from_dict({})
        assert cfg.model == "toy-cnn"
        assert cfg.we.enabled is True
        assert cfg.optimizer.epochs == 200

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            config_from_dict({"modle": "toy-cnn"})

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown we"):
            config_from_dict({"we": {"gama": 0.1}})

    @pytest.mark.parametrize(
        "block, message",
        [
            ({"we": {"mode": "both"}}, "we.mode"),
            ({"we": {"alpha": 1.5}}, "we.alpha"),
            ({"we": {"alpha": "larger"}}, "we.alpha"),
            ({"we": {"rate": 0.0}}, "we.rate"),
            ({"we": {"gamma": 1.0}}, "we.gamma"),
            ({"we": {"update_interval": 0}}, "we.update_interval"),
            ({"optimizer": {"epochs": 0}}, "optimizer.epochs"),
            ({"optimizer": {"milestones": [5, 3]}}, "milestones"),
            ({"optimizer": {"epochs": 10, "milestones": [10]}}, "milestones"),
            ({"repeats": 0}, "repeats"),
        ],
    )
    def test_validation_errors(self, block, message):
        with pytest.raises(ConfigError, match=message):
            config_from_dict(block)

    def test_engine_config_translation(self):
        cfg = config_from_dict(
            {
                "we": {
                    "mode": "global-only",
                    "matching": "reverse",
                    "alpha": 0.3,
                    "level": "filter",
                    "rate": 0.08,
                    "update_interval": 2,
                    "without_bn": True,
                }
            }
        )
        engine = cfg.we.engine_config(100, [40, 80])
        assert engine.selection.mode is SelectionMode.GLOBAL_ONLY
        assert engine.matching is MatchStrategy.REVERSE
        assert engine.crossover.alpha == 0.3
        assert engine.crossover.level is CrossoverLevel.FILTER
        assert engine.update_interval == 2
        assert engine.without_bn is True
        assert engine.selection.schedule.peak_rate == 0.08
        assert engine.selection.schedule.total_epochs == 100
        assert engine.selection.schedule.milestones == (40, 80)

    def test_adaptive_alpha_maps_to_none(self):
        engine = config_from_dict({}).we.engine_config(10, [])
        assert engine.crossover.alpha is None
        assert engine.crossover.adaptive


class TestOverrides:
    def test_apply_overrides_nested(self):
        raw = {"we": {"gamma": 0.1}}
        out = apply_overrides(raw, {"we.alpha": 0.5, "optimizer.epochs": 3, "seed": 9})
        assert out == {
            "we": {"gamma": 0.1, "alpha": 0.5},
            "optimizer": {"epochs": 3},
            "seed": 9,
        }
        # the input mapping is left alone
        assert raw == {"we": {"gamma": 0.1}}

    def test_override_through_scalar_rejected(self):
        with pytest.raises(ConfigError, match="not a mapping"):
            apply_overrides({"seed": 3}, {"seed.deep": 1})

    @pytest.mark.parametrize(
        "text, expected",
        [("0.3", 0.3), ("8", 8), ("true", True), ("null", None), ("adaptive", "adaptive")],
    )
    def test_coerce_override(self, text, expected):
        assert coerce_override(text) == expected

    def test_load_config_with_overrides(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(TINY))
        cfg = load_config(path, {"we.alpha": 0.25, "seed": 3})
        assert cfg.we.alpha == 0.25
        assert cfg.seed == 3

    def test_empty_yaml_is_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path).model == "toy-cnn"

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
        cfg = config_from_dict({"output_dir": "runs/a"})
        assert cfg.resolved_output_dir() == tmp_path / "root" / "runs" / "a"
        absolute = config_from_dict({"output_dir": str(tmp_path / "abs")})
        assert absolute.resolved_output_dir() == tmp_path / "abs"


class TestBuilders:
    def test_unknown_model(self):
        with pytest.raises(ConfigError, match="unknown model"):
            build_model("resnet-9000", 2)

    def test_unknown_dataset(self):
        from weightevo.harness.config import DataConfig

        with pytest.raises(ConfigError, match="unknown dataset"):
            build_dataset("imagenet-mini", DataConfig(), 0)

    def test_synthetic_dataset_is_seed_deterministic(self):
        from weightevo.harness.config import DataConfig

        import torch

        data = DataConfig(train_samples=32, eval_samples=16)
        a = build_dataset("synthetic-2class", data, 5)
        b = build_dataset("synthetic-2class", data, 5)
        assert torch.equal(a.train.tensors[0], b.train.tensors[0])
        assert torch.equal(a.eval.tensors[1], b.eval.tensors[1])
        c = build_dataset("synthetic-2class", data, 6)
        assert not torch.equal(a.train.tensors[0], c.train.tensors[0])


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    out = tmp_path_factory.mktemp("train") / "run"
    result = run_training(tiny_config(out))
    return out, result


class TestTrainingArtifacts:
    def test_artifacts_exist(self, finished):
        out, _ = finished
        for name in (
            "config.yaml", "metrics.jsonl", "evolution.jsonl",
            "best.pt", "best.json", "last.pt", "last.json", "result.json",
        ):
            assert (out / name).exists(), name

    def test_config_copy_reloads(self, finished):
        out, _ = finished
        copied = load_config(out / "config.yaml")
        assert copied.model == "toy-cnn"
        assert copied.we.gamma == 0.5

    def test_metrics_schema(self, finished):
        out, _ = finished
        records = [json.loads(l) for l in (out / "metrics.jsonl").read_text().splitlines()]
        assert len(records) == 2 * TINY["optimizer"]["epochs"]
        assert [r["epoch"] for r in records] == [1, 1, 2, 2]
        assert [r["split"] for r in records[:2]] == ["train", "eval"]
        for r in records:
            assert set(r) == {"epoch", "split", "loss", "acc", "r", "elements_changed"}
            assert r["elements_changed"] >= 0

    def test_result_fields(self, finished):
        _, result = finished
        assert result["we_enabled"] is True
        assert result["epochs"] == 2
        assert result["best_eval_acc"] >= result["final_eval_acc"] - 1e-9
        assert 1 <= result["best_epoch"] <= 2
        assert result["wall_time_s"] > 0

    def test_evolution_log_matches_result(self, finished):
        out, result = finished
        records = [json.loads(l) for l in (out / "evolution.jsonl").read_text().splitlines()]
        assert [r["epoch"] for r in records] == [1, 2]
        assert sum(r["elements_changed"] for r in records) == result["total_elements_changed"]
        for r in records:
            assert set(r) >= {"epoch", "stage", "rate", "tbd_count", "layers"}

    def test_checkpoint_manifest(self, finished):
        out, _ = finished
        manifest = json.loads((out / "best.json").read_text())
        assert manifest["model"] == "toy-cnn"
        assert manifest["num_classes"] == 2
        assert manifest["seed"] == 7
        kinds = {layer["kind"] for layer in manifest["layers"]}
        assert {"ordinary-conv", "depthwise-conv", "pointwise-conv", "bn-scale"} <= kinds

    def test_baseline_writes_no_evolution_log(self, tmp_path):
        out = tmp_path / "baseline"
        result = run_training(tiny_config(out, we={"enabled": False}))
        assert result["we_enabled"] is False
        assert result["total_elements_changed"] == 0
        assert result["epochs_with_evolution"] == 0
        assert not (out / "evolution.jsonl").exists()
        records = [json.loads(l) for l in (out / "metrics.jsonl").read_text().splitlines()]
        assert all(r["elements_changed"] == 0 for r in records)

    def test_same_seed_same_result(self, finished, tmp_path):
        out, first = finished
        second = run_training(tiny_config(tmp_path / "again"))
        volatile = {"wall_time_s", "overhead_mean", "overhead_max"}
        trimmed = lambda r: {k: v for k, v in r.items() if k not in volatile}
        assert trimmed(first) == trimmed(second)
        assert (out / "metrics.jsonl").read_text() == (tmp_path / "again" / "metrics.jsonl").read_text()

    def test_repeats_aggregate(self, tmp_path):
        out = tmp_path / "rep"
        cfg = tiny_config(out, repeats=2, optimizer={"epochs": 1, "milestones": []})
        result = run_training(cfg)
        assert result["repeats"] == 2
        assert result["seeds"] == [7, 8]
        assert (out / "seed-7" / "result.json").exists()
        assert (out / "seed-8" / "result.json").exists()
        assert "final_eval_acc_mean" in json.loads((out / "result.json").read_text())


class TestCLI:
    @pytest.fixture()
    def config_file(self, tmp_path):
        path = tmp_path / "tiny.yaml"
        raw = {**TINY, "optimizer": {**TINY["optimizer"], "epochs": 1}}
        path.write_text(yaml.safe_dump(raw))
        return path

    def test_run_with_flags(self, config_file, tmp_path, capsys):
        out = tmp_path / "cli-run"
        code = main(
            [
                "run", "--config", str(config_file), "--output", str(out),
                "--seed", "3", "--we.matching", "reverse", "--set", "we.rate=0.08",
            ]
        )
        assert code == 0
        saved = yaml.safe_load((out / "config.yaml").read_text())
        assert saved["seed"] == 3
        assert saved["we"]["matching"] == "reverse"
        assert saved["we"]["rate"] == 0.08
        printed = json.loads(capsys.readouterr().out)
        assert printed["seed"] == 3

    def test_run_baseline_flag(self, config_file, tmp_path, capsys):
        out = tmp_path / "cli-base"
        assert main(["run", "--config", str(config_file), "--output", str(out), "--baseline"]) == 0
        assert yaml.safe_load((out / "config.yaml").read_text())["we"]["enabled"] is False
        assert not (out / "evolution.jsonl").exists()
        capsys.readouterr()

    def test_run_alpha_flag_fixed_and_adaptive(self, config_file, tmp_path, capsys):
        for value in ("0.5", "adaptive"):
            out = tmp_path / f"alpha-{value}"
            code = main(
                ["run", "--config", str(config_file), "--output", str(out), "--we.alpha", value]
            )
            assert code == 0
            saved = yaml.safe_load((out / "config.yaml").read_text())
            assert saved["we"]["alpha"] == (0.5 if value == "0.5" else "adaptive")
        capsys.readouterr()

    def test_invalid_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("we:\n  mode: sideways\n")
        assert main(["run", "--config", str(bad), "--output", str(tmp_path / "x")]) == 2
        assert "we.mode" in capsys.readouterr().err

    def test_set_rejects_bare_token(self, config_file, tmp_path):
        with pytest.raises(SystemExit):
            main(
                [
                    "run", "--config", str(config_file),
                    "--output", str(tmp_path / "y"), "--set", "we.rate",
                ]
            )

    def test_sweep_alpha(self, config_file, tmp_path, capsys):
        root = tmp_path / "sweep"
        code = main(
            [
                "sweep", "--config", str(config_file), "--param", "we.alpha",
                "--values", "0.5,adaptive", "--output", str(root),
            ]
        )
        assert code == 0
        assert (root / "alpha-0.5" / "result.json").exists()
        assert (root / "alpha-adaptive" / "result.json").exists()
        summary = json.loads((root / "sweep-summary.json").read_text())
        assert summary["param"] == "we.alpha"
        assert [r["value"] for r in summary["runs"]] == [0.5, "adaptive"]
        assert (root / "alpha-sweep.png").exists()
        capsys.readouterr()

    def test_report_renders_table_and_figures(self, smoke_runs, tmp_path, capsys):
        out_dir = tmp_path / "report"
        code = main(
            [
                "report", "--runs",
                str(smoke_runs["baseline_dir"]), str(smoke_runs["evolved_dir"]),
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        table = (out_dir / "report.tsv").read_text().splitlines()
        header = table[0].split("\t")
        assert header[:4] == ["run", "model", "dataset", "we_enabled"]
        assert len(table) == 3
        assert table[1].split("\t")[0] == "baseline"
        assert (out_dir / "convergence.png").exists()
        assert (out_dir / "baseline-norms.png").exists()
        assert (out_dir / "evolved-norms.png").exists()
        capsys.readouterr()

    def test_plot_norm_histogram(self, smoke_runs, tmp_path, capsys):
        out = tmp_path / "norms.png"
        code = main(
            [
                "plot", "--kind", "norm-histogram",
                "--runs", str(smoke_runs["evolved_dir"]), "--out", str(out),
            ]
        )
        assert code == 0
        assert out.exists() and out.stat().st_size > 0
        capsys.readouterr()

    def test_plot_convergence_train_split(self, smoke_runs, tmp_path, capsys):
        out = tmp_path / "conv.png"
        code = main(
            [
                "plot", "--kind", "convergence", "--split", "train",
                "--runs", str(smoke_runs["baseline_dir"]), str(smoke_runs["evolved_dir"]),
                "--out", str(out),
            ]
        )
        assert code == 0
        assert out.exists() and out.stat().st_size > 0
        capsys.readouterr()
