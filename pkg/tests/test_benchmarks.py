"""Benchmarking tests."""

from __future__ import annotations

from typing import Any

import numpy as np

from kpca.rff.batchpca import CovarianceAccumulator, accumulate_batch, rf_erm
from kpca.rff.kernelmap import KernelSpec, sample_feature_map, transform
from kpca.rff.streampca import init_oja, oja_step

# ruff: noqa: D103 ANN401

MNIST_SPEC = KernelSpec.from_sigma_squared("rbf", 50.0, dim=784)


def test_transform_batch(benchmark: Any) -> None:
    feature_map = sample_feature_map(MNIST_SPEC, 750, seed=0)
    points = np.random.default_rng(0).uniform(size=(256, 784))
    benchmark(transform, feature_map, points)


def test_oja_step(benchmark: Any) -> None:
    state = init_oja(750, 10, seed=0)
    z = np.random.default_rng(0).normal(size=750) * np.sqrt(2 / 750)
    benchmark(oja_step, state, z, 0.01)


def test_accumulate_batch(benchmark: Any) -> None:
    Z = np.random.default_rng(0).normal(size=(256, 750))
    acc = CovarianceAccumulator.empty(750)
    benchmark(accumulate_batch, acc, Z)


def test_rf_erm(benchmark: Any) -> None:
    acc = accumulate_batch(CovarianceAccumulator.empty(750), np.random.default_rng(0).normal(size=(1000, 750)))
    benchmark(rf_erm, acc, 10)
