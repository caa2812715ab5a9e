"""Tests for the batch learners."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from kpca.rff.batchpca import (
    CovarianceAccumulator,
    accumulate,
    accumulate_batch,
    covariance,
    exact_erm,
    merge,
    nystrom_erm,
    rf_erm,
    top_eigenpairs,
)
from kpca.rff.data import exponential_spectrum, synth_gaussian_spectrum
from kpca.rff.errors import InvalidArgumentError, ResourceLimitError
from kpca.rff.kernelmap import KernelSpec, kernel_matrix

if TYPE_CHECKING:
    from kpca.rff.typing import FloatArray

# ruff: noqa: D103


def test_accumulate_matches_batch() -> None:
    Z = np.random.default_rng(0).normal(size=(50, 4))
    one_by_one = CovarianceAccumulator.empty(4)
    for z in Z:
        one_by_one = accumulate(one_by_one, z)
    batched = accumulate_batch(CovarianceAccumulator.empty(4), Z)
    assert one_by_one.count == batched.count == 50
    np.testing.assert_allclose(one_by_one.sum, batched.sum)
    np.testing.assert_allclose(covariance(batched), Z.T @ Z / 50)
    np.testing.assert_array_equal(batched.sum, batched.sum.T)


def test_accumulate_rejects() -> None:
    acc = CovarianceAccumulator.empty(3)
    accumulate(acc, [np.inf, 0.0, 0.0])
    assert (acc.count, acc.skipped) == (0, 1)
    with pytest.raises(InvalidArgumentError, match="no samples"):
        covariance(acc)
    with pytest.raises(InvalidArgumentError):
        accumulate(acc, np.zeros(2))
    with pytest.raises(InvalidArgumentError):
        accumulate_batch(acc, np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        CovarianceAccumulator.empty(0)


def test_merge_shards() -> None:
    Z = np.random.default_rng(1).normal(size=(30, 3))
    whole = accumulate_batch(CovarianceAccumulator.empty(3), Z)
    merged = merge(
        accumulate_batch(CovarianceAccumulator.empty(3), Z[:10]),
        accumulate_batch(CovarianceAccumulator.empty(3), Z[10:]),
    )
    assert merged.count == whole.count
    np.testing.assert_allclose(merged.sum, whole.sum)
    with pytest.raises(InvalidArgumentError, match="merge"):
        merge(whole, CovarianceAccumulator.empty(2))


def _accumulated(Z: FloatArray) -> CovarianceAccumulator:
    return accumulate_batch(CovarianceAccumulator.empty(Z.shape[1]), Z)


def test_merge_with_empty_is_identity() -> None:
    acc = _accumulated(np.random.default_rng(11).normal(size=(20, 4)))
    for merged in (merge(acc, CovarianceAccumulator.empty(4)), merge(CovarianceAccumulator.empty(4), acc)):
        assert (merged.count, merged.skipped) == (acc.count, acc.skipped)
        np.testing.assert_array_equal(merged.sum, acc.sum)


def test_merge_tree_shapes_agree() -> None:
    Z = np.random.default_rng(12).normal(size=(100, 5))
    whole = _accumulated(Z)
    quarters = [_accumulated(part) for part in np.split(Z, 4)]
    four_way = merge(merge(quarters[0], quarters[1]), merge(quarters[2], quarters[3]))
    two_way = merge(_accumulated(Z[:50]), _accumulated(Z[50:]))
    tolerance = 1e-10 * np.linalg.norm(whole.sum)
    assert four_way.count == two_way.count == whole.count == 100
    assert np.max(np.abs(four_way.sum - two_way.sum)) <= tolerance
    assert np.max(np.abs(two_way.sum - whole.sum)) <= tolerance


def test_rf_erm_matches_dense_eigensolver() -> None:
    rng = np.random.default_rng(2)
    for _ in range(100):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(10, 41))
        k = int(rng.integers(1, m + 1))
        Z = rng.normal(size=(n, m)) * rng.uniform(0.5, 2.0, size=m)
        model = rf_erm(accumulate_batch(CovarianceAccumulator.empty(m), Z), k)
        values, vectors = np.linalg.eigh(Z.T @ Z / n)
        top = vectors[:, ::-1][:, :k]
        np.testing.assert_allclose(model.rayleigh, values[::-1][:k], rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(model.projector(), top @ top.T, atol=1e-7)
        np.testing.assert_allclose(model.basis.T @ model.basis, np.eye(k), atol=1e-10)
        assert (np.diff(model.rayleigh) <= 0).all()


def test_rf_erm_rank_one_stream() -> None:
    acc = accumulate_batch(CovarianceAccumulator.empty(3), np.tile([0.0, 2.0, 0.0], (10, 1)))
    with pytest.warns(RuntimeWarning, match="fewer than the requested rank 2"):
        model = rf_erm(acc, 2, seed=5)
    assert model.k == 1
    assert model.meta.rank_deficient
    assert model.meta.seed == 5
    np.testing.assert_allclose(model.basis[:, 0], [0.0, 1.0, 0.0], atol=1e-12)
    assert model.rayleigh[0] == pytest.approx(4.0)


def test_rf_erm_rejects() -> None:
    acc = accumulate_batch(CovarianceAccumulator.empty(3), np.ones((2, 3)))
    with pytest.raises(InvalidArgumentError, match="outside"):
        rf_erm(acc, 4)
    with pytest.raises(InvalidArgumentError, match="at least"):
        rf_erm(acc, 3)


def test_top_eigenpairs_is_deterministic_on_ties() -> None:
    values, vectors, deficient = top_eigenpairs(np.eye(3), 2)
    assert not deficient
    np.testing.assert_allclose(values, [1.0, 1.0])
    first = vectors[:, 0].tolist()
    second = vectors[:, 1].tolist()
    assert first <= second
    again = top_eigenpairs(np.eye(3), 2)[1]
    np.testing.assert_array_equal(again, vectors)
    with pytest.raises(InvalidArgumentError):
        top_eigenpairs(np.ones((2, 3)), 1)


def test_top_eigenpairs_sign_convention() -> None:
    matrix = np.random.default_rng(3).normal(size=(6, 6))
    _values, vectors, _ = top_eigenpairs(matrix @ matrix.T, 3)
    pivots = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(3)]
    assert (pivots > 0).all()


def test_exact_erm_matches_dense_eigensolver() -> None:
    spec = KernelSpec("rbf", 1.0, dim=2)
    train = np.random.default_rng(4).normal(size=(30, 2))
    model = exact_erm(spec, train, 4, seed=1)
    values = np.linalg.eigvalsh(kernel_matrix(spec, train))[::-1]
    np.testing.assert_allclose(model.gram_eigenvalues, values[:4], rtol=1e-9)
    np.testing.assert_allclose(model.coefficients.T @ model.coefficients, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(
        model.evaluate_functions(train), model.coefficients * np.sqrt(model.gram_eigenvalues), atol=1e-9
    )
    assert (model.meta.learner, model.meta.n_seen, model.meta.m) == ("exact_erm", 30, 30)


def test_exact_erm_duplicates() -> None:
    spec = KernelSpec("laplacian", 1.0, dim=2)
    with pytest.warns(RuntimeWarning, match="nonzero directions"):
        model = exact_erm(spec, np.ones((5, 2)), 2)
    assert model.k == 1
    assert model.gram_eigenvalues[0] == pytest.approx(5.0)
    assert model.meta.rank_deficient


def test_exact_erm_limits() -> None:
    spec = KernelSpec("rbf", 1.0, dim=2)
    with pytest.raises(ResourceLimitError, match="cap is 3") as info:
        exact_erm(spec, np.zeros((4, 2)), 1, max_points=3)
    assert info.value.requested == 4
    with pytest.raises(InvalidArgumentError):
        exact_erm(spec, np.zeros((4, 3)), 1)
    with pytest.raises(InvalidArgumentError, match="outside"):
        exact_erm(spec, np.random.default_rng(0).normal(size=(4, 2)), 5)


def test_nystrom_with_all_landmarks_is_exact() -> None:
    spec = KernelSpec("rbf", 2.0, dim=3)
    rng = np.random.default_rng(5)
    train = rng.normal(size=(40, 3))
    test = rng.normal(size=(10, 3))
    exact = exact_erm(spec, train, 3)
    nystrom = nystrom_erm(spec, train, 40, 3, seed=0)
    np.testing.assert_allclose(nystrom.gram_eigenvalues, exact.gram_eigenvalues, rtol=1e-6)
    np.testing.assert_allclose(nystrom.evaluate_functions(test), exact.evaluate_functions(test), rtol=1e-5, atol=1e-8)


def test_nystrom_landmark_form_agrees_on_training_set() -> None:
    spec = KernelSpec("cauchy", 1.0, dim=2)
    train = np.random.default_rng(6).normal(size=(60, 2))
    model = nystrom_erm(spec, train, 15, 3, seed=2)
    assert model.landmarks is not None
    assert model.landmarks.size == np.unique(model.landmarks).size == 15
    assert (np.diff(model.landmarks) > 0).all()
    np.testing.assert_allclose(
        model.landmark_functions(train), model.coefficients * np.sqrt(model.gram_eigenvalues), atol=1e-8
    )
    again = nystrom_erm(spec, train, 15, 3, seed=2)
    np.testing.assert_array_equal(again.landmarks, model.landmarks)


@pytest.mark.parametrize(("p", "k"), [(0, 1), (5, 6), (61, 1)])
def test_nystrom_rejects(p: int, k: int) -> None:
    train = np.random.default_rng(7).normal(size=(60, 2))
    with pytest.raises(InvalidArgumentError, match="Nystrom"):
        nystrom_erm(KernelSpec("rbf", 1.0, dim=2), train, p, k, seed=0)


def test_covariance_concentration() -> None:
    spectrum = exponential_spectrum(10, 0.7)

    def mean_error(n: int) -> float:
        errors = []
        for seed in range(10):
            data = synth_gaussian_spectrum(10, n, spectrum, seed=seed)
            estimate = covariance(accumulate_batch(CovarianceAccumulator.empty(10), data.points))
            errors.append(np.linalg.norm(estimate - data.population_covariance(), ord=2))
        return float(np.mean(errors))

    assert 0.3 <= mean_error(4000) / mean_error(1000) <= 0.8


def test_exact_erm_training_objective() -> None:
    spec = KernelSpec("rbf", 1.0, dim=2)
    train = np.random.default_rng(8).normal(size=(35, 2))
    model = exact_erm(spec, train, 4)
    values = model.evaluate_functions(train)
    assert np.sum(values * values) / 35 == pytest.approx(model.gram_eigenvalues.sum() / 35, abs=1e-10)


def test_nystrom_functions_use_the_training_kernel_row() -> None:
    spec = KernelSpec("rbf", 1.0, dim=3)
    rng = np.random.default_rng(10)
    train = rng.normal(size=(80, 3))
    test = rng.normal(size=(25, 3))
    model = nystrom_erm(spec, train, 20, 4, seed=1)
    expected = kernel_matrix(spec, test, train) @ model.coefficients / np.sqrt(model.gram_eigenvalues)
    np.testing.assert_allclose(model.evaluate_functions(test), expected, rtol=1e-12, atol=1e-14)
    with pytest.raises(InvalidArgumentError, match="no landmarks"):
        exact_erm(spec, train, 2).landmark_functions(test)
