"""Training loop with the evolution hook at epoch boundaries.

Per epoch: SGD over the train split, lr schedule step, then evolution
(after the last optimizer step, before validation), then evaluation.
Artifacts per run directory: config.yaml (verbatim copy), metrics.jsonl,
evolution.jsonl, best/last checkpoints with JSON manifests, result.json.
"""

from __future__ import annotations

import json
import logging
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn
from torch.utils.data import DataLoader

from ..engine import EpochHookRegistry, EvolutionReport, WeightEvolution
from ..torch_adapter import TorchStore
from .config import RunConfig, save_config_copy
from .datasets import DatasetBundle, build_dataset
from .models import build_model

log = logging.getLogger("weightevo")


def _append_jsonl(path: Path, record: dict) -> None:
    with path.open("a") as fh:
        fh.write(json.dumps(record) + "\n")


@dataclass
class EpochOutcome:
    train_loss: float
    train_acc: float
    eval_loss: float
    eval_acc: float
    rate: float
    elements_changed: int
    evolve_ms: float
    epoch_ms: float


class Trainer:
    """One seeded training run writing its artifacts into ``out_dir``."""

    def __init__(self, cfg: RunConfig, seed: int, out_dir: Path):
        self.cfg = cfg
        self.seed = seed
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)

        torch.manual_seed(seed)
        self.bundle: DatasetBundle = build_dataset(cfg.dataset, cfg.data, seed)
        self.model = build_model(cfg.model, self.bundle.num_classes)
        self.loss_fn = nn.CrossEntropyLoss()
        opt = cfg.optimizer
        self.optimizer = torch.optim.SGD(
            self.model.parameters(),
            lr=opt.lr,
            momentum=opt.momentum,
            weight_decay=opt.weight_decay,
        )
        self.scheduler = torch.optim.lr_scheduler.MultiStepLR(
            self.optimizer, milestones=list(opt.milestones), gamma=0.1
        )
        loader_gen = torch.Generator().manual_seed(seed)
        self.train_loader = DataLoader(
            self.bundle.train,
            batch_size=opt.batch_size,
            shuffle=True,
            num_workers=cfg.data.workers,
            generator=loader_gen,
        )
        self.eval_loader = DataLoader(
            self.bundle.eval, batch_size=opt.batch_size, num_workers=cfg.data.workers
        )

        self.store = TorchStore(self.model, include_classifier=cfg.we.include_classifier)
        self.hooks = EpochHookRegistry()
        self.evolution: WeightEvolution | None = None
        if cfg.we.enabled:
            engine_cfg = cfg.we.engine_config(opt.epochs, list(opt.milestones))
            self.evolution = WeightEvolution(
                self.store,
                engine_cfg,
                sink=lambda r: _append_jsonl(self.out_dir / "evolution.jsonl", r.to_dict()),
            ).attach(self.hooks)

    def train_epoch(self) -> tuple[float, float]:
        self.model.train()
        total_loss = 0.0
        correct = 0
        seen = 0
        for images, labels in self.train_loader:
            self.optimizer.zero_grad()
            logits = self.model(images)
            loss = self.loss_fn(logits, labels)
            loss.backward()
            self.optimizer.step()
            total_loss += loss.item() * labels.size(0)
            correct += (logits.argmax(1) == labels).sum().item()
            seen += labels.size(0)
        return total_loss / seen, 100.0 * correct / seen

    @torch.no_grad()
    def evaluate(self) -> tuple[float, float]:
        self.model.eval()
        total_loss = 0.0
        correct = 0
        seen = 0
        for images, labels in self.eval_loader:
            logits = self.model(images)
            total_loss += self.loss_fn(logits, labels).item() * labels.size(0)
            correct += (logits.argmax(1) == labels).sum().item()
            seen += labels.size(0)
        return total_loss / seen, 100.0 * correct / seen

    def _save_checkpoint(self, name: str, epoch: int, eval_acc: float) -> None:
        torch.save(self.model.state_dict(), self.out_dir / f"{name}.pt")
        manifest = {
            "epoch": epoch,
            "eval_acc": eval_acc,
            "seed": self.seed,
            "model": self.cfg.model,
            "dataset": self.cfg.dataset,
            "num_classes": self.bundle.num_classes,
            "layers": [spec.to_dict() for spec in self.store.enumerate()],
        }
        (self.out_dir / f"{name}.json").write_text(json.dumps(manifest, indent=2))

    def run(self) -> dict:
        save_config_copy(self.cfg, self.out_dir)
        metrics_path = self.out_dir / "metrics.jsonl"
        epochs = self.cfg.optimizer.epochs
        started = time.perf_counter()
        best_acc = -1.0
        best_epoch = 0
        outcomes: list[EpochOutcome] = []

        for epoch in range(1, epochs + 1):
            t_epoch = time.perf_counter()
            train_loss, train_acc = self.train_epoch()
            self.scheduler.step()

            reports = [r for r in self.hooks.fire(epoch) if isinstance(r, EvolutionReport)]
            evolve_ms = sum(r.wall_time_ms for r in reports)
            changed = sum(r.total_elements_changed for r in reports)
            rate = reports[0].rate if reports else 0.0

            eval_loss, eval_acc = self.evaluate()
            epoch_ms = (time.perf_counter() - t_epoch) * 1000.0

            for split, loss, acc in (("train", train_loss, train_acc), ("eval", eval_loss, eval_acc)):
                _append_jsonl(
                    metrics_path,
                    {
                        "epoch": epoch,
                        "split": split,
                        "loss": round(loss, 6),
                        "acc": round(acc, 4),
                        "r": rate,
                        "elements_changed": changed,
                    },
                )
            outcomes.append(
                EpochOutcome(train_loss, train_acc, eval_loss, eval_acc, rate, changed, evolve_ms, epoch_ms)
            )
            if eval_acc > best_acc:
                best_acc = eval_acc
                best_epoch = epoch
                self._save_checkpoint("best", epoch, eval_acc)
            log.info(
                "epoch %3d/%d  train %.4f/%.2f%%  eval %.4f/%.2f%%  changed %d",
                epoch, epochs, train_loss, train_acc, eval_loss, eval_acc, changed,
            )

        self._save_checkpoint("last", epochs, outcomes[-1].eval_acc)
        overheads = [o.evolve_ms / o.epoch_ms for o in outcomes if o.epoch_ms > 0]
        result = {
            "model": self.cfg.model,
            "dataset": self.cfg.dataset,
            "seed": self.seed,
            "epochs": epochs,
            "we_enabled": self.cfg.we.enabled,
            "initial_train_loss": round(outcomes[0].train_loss, 6),
            "final_train_loss": round(outcomes[-1].train_loss, 6),
            "final_eval_acc": round(outcomes[-1].eval_acc, 4),
            "best_eval_acc": round(best_acc, 4),
            "best_epoch": best_epoch,
            "total_elements_changed": sum(o.elements_changed for o in outcomes),
            "epochs_with_evolution": sum(1 for o in outcomes if o.elements_changed > 0),
            "overhead_mean": round(statistics.fmean(overheads), 6) if overheads else 0.0,
            "overhead_max": round(max(overheads), 6) if overheads else 0.0,
            "wall_time_s": round(time.perf_counter() - started, 3),
        }
        (self.out_dir / "result.json").write_text(json.dumps(result, indent=2))
        return result


def run(cfg: RunConfig) -> dict:
    """Execute a config, including repeats; returns the (aggregated) result record."""
    cfg.validate()
    out_root = cfg.resolved_output_dir()
    if cfg.repeats == 1:
        return Trainer(cfg, cfg.seed, out_root).run()

    results = []
    for i in range(cfg.repeats):
        seed = cfg.seed + i
        results.append(Trainer(cfg, seed, out_root / f"seed-{seed}").run())
    final = [r["final_eval_acc"] for r in results]
    best = [r["best_eval_acc"] for r in results]
    aggregate = {
        "model": cfg.model,
        "dataset": cfg.dataset,
        "repeats": cfg.repeats,
        "seeds": [r["seed"] for r in results],
        "we_enabled": cfg.we.enabled,
        "final_eval_acc_mean": round(statistics.fmean(final), 4),
        "final_eval_acc_std": round(statistics.pstdev(final), 4),
        "best_eval_acc_mean": round(statistics.fmean(best), 4),
        "best_eval_acc_std": round(statistics.pstdev(best), 4),
        "runs": results,
    }
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "result.json").write_text(json.dumps(aggregate, indent=2))
    return aggregate
