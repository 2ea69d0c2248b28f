"""Static figures rendered from persisted run artifacts.

All plots read the JSONL/JSON files a run leaves behind; nothing here
touches live training state. Output is written to image files (Agg
backend), suitable for headless machines.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ..errors import ConfigError


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        raise ConfigError(f"missing {path}")
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def _run_label(run_dir: Path) -> str:
    cfg_path = run_dir / "config.yaml"
    if cfg_path.exists():
        import yaml

        raw = yaml.safe_load(cfg_path.read_text()) or {}
        we = raw.get("we", {})
        if not we.get("enabled", True):
            return f"{run_dir.name} (baseline)"
        bits = []
        if we.get("mode", "full") != "full":
            bits.append(we["mode"])
        if we.get("matching", "forward") != "forward":
            bits.append(we["matching"])
        if we.get("alpha", "adaptive") != "adaptive":
            bits.append(f"alpha={we['alpha']}")
        if we.get("level", "element") != "element":
            bits.append(we["level"])
        suffix = f" ({', '.join(bits)})" if bits else " (evolved)"
        return run_dir.name + suffix
    return run_dir.name


def convergence_plot(run_dirs: list[Path], out_path: Path, split: str = "eval") -> Path:
    """Accuracy vs epoch, one labeled curve per run."""
    if not run_dirs:
        raise ConfigError("need at least one run directory")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for run_dir in run_dirs:
        records = [r for r in _read_jsonl(run_dir / "metrics.jsonl") if r["split"] == split]
        ax.plot([r["epoch"] for r in records], [r["acc"] for r in records], label=_run_label(run_dir))
    ax.set_xlabel("epoch")
    ax.set_ylabel(f"{split} accuracy (%)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def alpha_sweep_plot(run_dirs: list[Path], out_path: Path) -> Path:
    """Final accuracy vs fixed blend coefficient, adaptive runs as a reference line."""
    if not run_dirs:
        raise ConfigError("need at least one run directory")
    fixed: list[tuple[float, float]] = []
    adaptive: list[float] = []
    for run_dir in run_dirs:
        result = json.loads((run_dir / "result.json").read_text())
        acc = result.get("final_eval_acc", result.get("final_eval_acc_mean"))
        import yaml

        raw = yaml.safe_load((run_dir / "config.yaml").read_text())
        alpha = raw.get("we", {}).get("alpha", "adaptive")
        if alpha == "adaptive":
            adaptive.append(acc)
        else:
            fixed.append((float(alpha), acc))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if fixed:
        fixed.sort()
        ax.plot([a for a, _ in fixed], [v for _, v in fixed], "o-", label="fixed")
    for acc in adaptive:
        ax.axhline(acc, color="tab:red", linestyle="--", label="adaptive")
    ax.set_xlabel("blend coefficient")
    ax.set_ylabel("final eval accuracy (%)")
    ax.grid(alpha=0.3)
    # dedupe legend entries from multiple adaptive lines
    handles, labels = ax.get_legend_handles_labels()
    seen = dict(zip(labels, handles))
    ax.legend(seen.values(), seen.keys(), fontsize=8)
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def norm_histogram_plot(run_dir: Path, out_path: Path, checkpoint: str = "best") -> Path:
    """Per-layer mean of filter average-magnitude scores at a checkpoint, one bar per layer."""
    import torch

    from ..metrics import score_all
    from ..torch_adapter import TorchStore
    from .models import build_model

    manifest_path = run_dir / f"{checkpoint}.json"
    state_path = run_dir / f"{checkpoint}.pt"
    if not manifest_path.exists() or not state_path.exists():
        raise ConfigError(f"no {checkpoint} checkpoint under {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    model = build_model(manifest["model"], manifest["num_classes"])
    model.load_state_dict(torch.load(state_path, weights_only=True))
    store = TorchStore(model)
    scores = score_all(store)
    labels = {spec.layer_id: spec.label for spec in store.enumerate()}
    per_layer: dict[int, list[float]] = {}
    for s in scores:
        per_layer.setdefault(s.layer_id, []).append(s.avg_l1)
    layer_ids = sorted(per_layer)
    means = [sum(per_layer[i]) / len(per_layer[i]) for i in layer_ids]
    fig, ax = plt.subplots(figsize=(max(7, 0.3 * len(layer_ids)), 4.5))
    ax.bar(range(len(layer_ids)), means)
    ax.set_xticks(range(len(layer_ids)))
    ax.set_xticklabels([labels[i] for i in layer_ids], rotation=90, fontsize=6)
    ax.set_ylabel("mean avg magnitude")
    ax.set_title(f"{manifest['model']} @ epoch {manifest['epoch']}")
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
