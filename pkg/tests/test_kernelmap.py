"""Tests for kernels and random Fourier features."""

from __future__ import annotations

import math
import pickle

import numpy as np
import pytest

from kpca.rff.data import Dataset
from kpca.rff.errors import InvalidArgumentError
from kpca.rff.kernelmap import (
    FeatureMap,
    KernelSpec,
    approx_kernel,
    exact_kernel,
    kernel_matrix,
    sample_feature_map,
    suggest_num_features,
    transform,
)

# ruff: noqa: D103


@pytest.mark.parametrize(
    ("family", "bandwidth", "dim"),
    [("gaussian", 1.0, 2), ("rbf", 0.0, 2), ("rbf", -1.0, 2), ("rbf", math.inf, 2), ("rbf", 1.0, 0)],
)
def test_kernel_spec_rejects(family: str, bandwidth: float, dim: int) -> None:
    with pytest.raises(InvalidArgumentError):
        KernelSpec(family, bandwidth, dim)  # type: ignore[arg-type]


def test_sample_feature_map_mnist_shape() -> None:
    spec = KernelSpec.from_sigma_squared("rbf", 50.0, dim=784)
    feature_map = sample_feature_map(spec, 750, seed=7)
    assert feature_map.frequencies.shape == (750, 784)
    assert feature_map.phases.shape == (750,)
    assert feature_map.m == 750
    assert feature_map.tau == math.sqrt(2)
    assert ((feature_map.phases >= 0) & (feature_map.phases < 2 * math.pi)).all()


def test_sample_feature_map_minimal() -> None:
    feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=1), 1, seed=3)
    x = np.array([0.25])
    expected = math.sqrt(2) * math.cos(feature_map.frequencies[0, 0] * 0.25 + feature_map.phases[0])
    assert transform(feature_map, x)[0] == pytest.approx(expected)


@pytest.mark.parametrize("family", ["rbf", "laplacian", "cauchy"])
def test_sample_feature_map_deterministic(family: str) -> None:
    spec = KernelSpec(family, 2.0, dim=5)  # type: ignore[arg-type]
    a = sample_feature_map(spec, 16, seed=42)
    b = sample_feature_map(spec, 16, seed=42)
    c = sample_feature_map(spec, 16, seed=43)
    assert (a.frequencies == b.frequencies).all()
    assert (a.phases == b.phases).all()
    assert not (a.frequencies == c.frequencies).all()
    with pytest.raises(ValueError, match="read-only"):
        a.frequencies[0, 0] = 0.0


@pytest.mark.parametrize("m", [0, -1, 1.5, True])
def test_sample_feature_map_rejects_bad_m(m: object) -> None:
    with pytest.raises(InvalidArgumentError, match="number of features"):
        sample_feature_map(KernelSpec("rbf", 1.0, dim=2), m, seed=0)  # type: ignore[arg-type]


def test_spectral_density_scale() -> None:
    spec = KernelSpec("rbf", 0.5, dim=2)
    frequencies = sample_feature_map(spec, 20000, seed=0).frequencies
    assert frequencies.std() == pytest.approx(2.0, rel=0.03)
    laplace = sample_feature_map(KernelSpec("cauchy", 0.5, dim=1), 20000, seed=0).frequencies
    assert np.median(np.abs(laplace)) == pytest.approx(2.0 * math.log(2), rel=0.05)
    cauchy = sample_feature_map(KernelSpec("laplacian", 0.5, dim=1), 20000, seed=0).frequencies
    assert np.median(np.abs(cauchy)) == pytest.approx(2.0, rel=0.05)


def test_feature_map_pickle() -> None:
    feature_map = sample_feature_map(KernelSpec("laplacian", 3.0, dim=4), 32, seed=11)
    clone = pickle.loads(pickle.dumps(feature_map))
    assert clone.spec == feature_map.spec
    assert (clone.frequencies == feature_map.frequencies).all()
    assert (clone.phases == feature_map.phases).all()
    x = np.linspace(-1, 1, 4)
    assert (transform(clone, x) == transform(feature_map, x)).all()


def test_feature_map_shape_check() -> None:
    with pytest.raises(InvalidArgumentError):
        FeatureMap(KernelSpec("rbf", 1.0, dim=2), np.ones((4, 3)), np.zeros(4), seed=0)


def test_transform_bounds() -> None:
    feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=3), 4, seed=0)
    points = np.random.default_rng(0).normal(size=(100, 3)) * 10
    z = transform(feature_map, points)
    assert z.shape == (100, 4)
    assert (np.abs(z) <= math.sqrt(0.5) + 1e-15).all()
    assert (np.sum(z * z, axis=1) <= 2 + 1e-12).all()


def test_transform_zero_phases() -> None:
    spec = KernelSpec("rbf", 1.0, dim=3)
    feature_map = FeatureMap(spec, np.random.default_rng(1).normal(size=(8, 3)), np.zeros(8), seed=0)
    assert transform(feature_map, np.zeros(3)) == pytest.approx([0.5] * 8)
    assert feature_map(np.zeros(3)) == pytest.approx([0.5] * 8)


def test_transform_dimension_mismatch() -> None:
    feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=3), 4, seed=0)
    with pytest.raises(InvalidArgumentError, match="dimension 3"):
        transform(feature_map, np.zeros(2))
    with pytest.raises(InvalidArgumentError):
        transform(feature_map, np.zeros((2, 2, 3)))


@pytest.mark.parametrize(
    ("spec", "x", "y", "expected"),
    [
        (KernelSpec("rbf", 1.0, dim=2), [0.3, 0.4], [0.3, 0.4], 1.0),
        (KernelSpec.from_sigma_squared("rbf", 50.0, dim=2), [0.0, 0.0], [6.0, 8.0], math.exp(-1.0)),
        (KernelSpec("laplacian", 1.0, dim=2), [0.0, 0.0], [math.log(2) / 2, -math.log(2) / 2], 0.5),
        (KernelSpec("cauchy", 2.0, dim=2), [0.0, 0.0], [2.0, 0.0], 0.5),
        (KernelSpec("cauchy", 1.0, dim=2), [1.0, 1.0], [1.0, 1.0], 1.0),
    ],
)
def test_exact_kernel(spec: KernelSpec, x: list[float], y: list[float], expected: float) -> None:
    assert exact_kernel(spec, x, y) == pytest.approx(expected, rel=1e-12)


def test_exact_kernel_rejects_batches() -> None:
    spec = KernelSpec("rbf", 1.0, dim=2)
    with pytest.raises(InvalidArgumentError):
        exact_kernel(spec, np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(InvalidArgumentError):
        exact_kernel(spec, np.zeros(2), np.zeros(3))


@pytest.mark.parametrize("family", ["rbf", "laplacian", "cauchy"])
def test_kernel_matrix_matches_exact_kernel(family: str) -> None:
    spec = KernelSpec(family, 1.5, dim=3)  # type: ignore[arg-type]
    rng = np.random.default_rng(2)
    a = rng.normal(size=(5, 3))
    b = rng.normal(size=(4, 3))
    K = kernel_matrix(spec, a, b)
    expected = [[exact_kernel(spec, x, y) for y in b] for x in a]
    np.testing.assert_allclose(K, expected, rtol=1e-12)
    square = kernel_matrix(spec, a)
    np.testing.assert_allclose(square, square.T)
    np.testing.assert_allclose(np.diag(square), 1.0)
    assert np.linalg.eigvalsh(square).min() >= -1e-10


@pytest.mark.parametrize("family", ["rbf", "laplacian", "cauchy"])
def test_approx_kernel_unbiased(family: str) -> None:
    spec = KernelSpec(family, 1.0, dim=3)  # type: ignore[arg-type]
    x = np.array([0.1, -0.4, 0.2])
    y = np.array([0.5, 0.3, -0.1])
    M = 100_000
    feature_map = sample_feature_map(spec, M, seed=5)
    assert abs(approx_kernel(feature_map, x, y) - exact_kernel(spec, x, y)) <= 4 / math.sqrt(M)


def test_approx_kernel_symmetric_and_bounded() -> None:
    feature_map = sample_feature_map(KernelSpec("rbf", 0.3, dim=2), 50, seed=9)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.normal(size=(2, 2))
        assert approx_kernel(feature_map, x, y) == approx_kernel(feature_map, y, x)
        assert abs(approx_kernel(feature_map, x, y)) <= 2.0


def test_approx_kernel_diagonal_concentrates() -> None:
    feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=4), 4000, seed=1)
    x = np.array([0.5, 0.5, 0.5, 0.5])
    assert abs(approx_kernel(feature_map, x, x) - 1.0) <= 3 * math.sqrt(2 / 4000)


def test_feature_gram_psd() -> None:
    feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=3), 16, seed=0)
    Z = transform(feature_map, np.random.default_rng(4).normal(size=(40, 3)))
    gram = Z @ Z.T
    np.testing.assert_allclose(gram, gram.T)
    assert np.linalg.eigvalsh(gram).min() >= -1e-10 * np.trace(gram)


def test_suggest_num_features() -> None:
    assert suggest_num_features(5000) == 603
    assert suggest_num_features(5000, k=2) == 1205
    assert suggest_num_features(1) == 1
    with pytest.raises(InvalidArgumentError):
        suggest_num_features(0)


def test_mnist_kernel_approximation(mnist: Dataset) -> None:
    spec = KernelSpec.from_sigma_squared("rbf", 50.0, dim=mnist.dim)
    feature_map = sample_feature_map(spec, 750, seed=0)
    rng = np.random.default_rng(0)
    pairs = rng.choice(mnist.n, size=(1000, 2))
    errors = []
    for a, b in pairs:
        x, y = mnist.points[a], mnist.points[b]
        errors.append(abs(approx_kernel(feature_map, x, y) - exact_kernel(spec, x, y)))
    assert np.mean(errors) <= 0.05
    assert np.max(errors) <= 0.25
    z = transform(feature_map, mnist.points[:100])
    assert (np.sum(z * z, axis=1) <= 2 + 1e-12).all()
