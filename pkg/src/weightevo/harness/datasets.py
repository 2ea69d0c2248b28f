"""Dataset registry.

The synthetic sets are generated deterministically from the run seed so
smoke experiments need no downloads. CIFAR entries only load from a local
torchvision root (no network fetch at run time).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch.utils.data import Dataset, TensorDataset

from ..errors import ConfigError
from .config import DataConfig


@dataclass
class DatasetBundle:
    train: Dataset
    eval: Dataset
    num_classes: int
    in_channels: int


def _pattern_set(
    classes: int, side: int, train_n: int, eval_n: int, noise: float, seed: int
) -> DatasetBundle:
    # class identity = fixed random pattern; samples = pattern + gaussian noise
    g = torch.Generator().manual_seed(seed)
    patterns = torch.randn(classes, 3, side, side, generator=g)

    def make(n: int) -> TensorDataset:
        labels = torch.randint(0, classes, (n,), generator=g)
        images = patterns[labels] + noise * torch.randn(n, 3, side, side, generator=g)
        return TensorDataset(images, labels)

    return DatasetBundle(make(train_n), make(eval_n), classes, 3)


def _cifar(name: str, data: DataConfig) -> DatasetBundle:
    from torchvision import datasets, transforms

    if not data.root:
        raise ConfigError(f"{name} needs data.root pointing at a local torchvision folder")
    train_tf = transforms.Compose(
        [
            transforms.RandomCrop(32, padding=4),
            transforms.RandomHorizontalFlip(),
            transforms.ToTensor(),
            transforms.Normalize((0.4914, 0.4822, 0.4465), (0.247, 0.243, 0.262)),
        ]
    )
    eval_tf = transforms.Compose(
        [
            transforms.ToTensor(),
            transforms.Normalize((0.4914, 0.4822, 0.4465), (0.247, 0.243, 0.262)),
        ]
    )
    cls = datasets.CIFAR10 if name == "cifar10" else datasets.CIFAR100
    try:
        train = cls(data.root, train=True, transform=train_tf, download=False)
        test = cls(data.root, train=False, transform=eval_tf, download=False)
    except RuntimeError as exc:
        raise ConfigError(f"{name} not found under {data.root!r}: {exc}")
    return DatasetBundle(train, test, 10 if name == "cifar10" else 100, 3)


def build_dataset(name: str, data: DataConfig, seed: int) -> DatasetBundle:
    if name == "synthetic-2class":
        return _pattern_set(2, 16, data.train_samples, data.eval_samples, noise=0.8, seed=seed)
    if name == "reduced-image-set":
        return _pattern_set(10, 32, data.train_samples, data.eval_samples, noise=1.0, seed=seed)
    if name in ("cifar10", "cifar100"):
        return _cifar(name, data)
    raise ConfigError(
        f"unknown dataset {name!r}; known: ['synthetic-2class', 'reduced-image-set', 'cifar10', 'cifar100']"
    )
