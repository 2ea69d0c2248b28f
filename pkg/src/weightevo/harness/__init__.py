"""Experiment harness: configs, model/dataset registries, training loop, plots, CLI."""
