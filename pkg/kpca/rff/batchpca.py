"""Batch learners: RF-ERM on the feature covariance, exact kernel-matrix ERM, and Nystrom ERM.

Feature-space learners return a :any:`SubspaceModel`, kernel-matrix learners return a :any:`GramModel`.

Example::

    >>> acc = CovarianceAccumulator.empty(3)
    >>> for z in np.eye(3)[[0, 0, 0, 1]]:
    ...     acc = accumulate(acc, z)
    >>> model = rf_erm(acc, 1)
    >>> bool(np.isclose(model.rayleigh[0], 0.75))
    True
    >>> bool(np.allclose(model.basis[:, 0], [1.0, 0.0, 0.0]))
    True
"""

from __future__ import annotations

import warnings
from typing import TYPE_CHECKING, Any

import attrs
import numpy as np
import scipy.linalg

from kpca.rff import _seeding
from kpca.rff.constants import DEFAULT_MAX_EXACT_POINTS, PINV_THRESHOLD, RANK_THRESHOLD
from kpca.rff.errors import InvalidArgumentError, ResourceLimitError
from kpca.rff.kernelmap import KernelSpec, kernel_matrix

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from kpca.rff.typing import FloatArray, GramKind, IndexArray

__all__ = (
    "CovarianceAccumulator",
    "GramModel",
    "LearnerMeta",
    "SubspaceModel",
    "accumulate",
    "accumulate_batch",
    "covariance",
    "exact_erm",
    "merge",
    "nystrom_erm",
    "rf_erm",
    "top_eigenpairs",
)


@attrs.frozen
class LearnerMeta:
    """Provenance attached to every learned model."""

    learner: str
    """Learner tag such as ``"rf_oja"`` or ``"nystrom"``."""
    n_seen: int
    """Number of training samples consumed."""
    m: int
    """Feature dimension, or the number of training points for kernel-matrix models."""
    k: int
    """Requested rank."""
    seed: int | None = None
    incomplete: bool = False
    """The stream ended before the learner's warm-up finished."""
    rank_deficient: bool = False
    """Fewer than `k` numerically nonzero directions were available."""
    skipped: int = 0
    """Samples rejected for non-finite entries."""


@attrs.frozen(eq=False)
class SubspaceModel:
    """An orthonormal ``(m, k)`` basis over feature space with per-direction Rayleigh quotients.

    Columns are ordered by non-increasing Rayleigh quotient.
    """

    basis: FloatArray
    rayleigh: FloatArray
    meta: LearnerMeta

    @classmethod
    def from_basis(cls, basis: FloatArray, samples: FloatArray, meta: LearnerMeta) -> SubspaceModel:
        """Return a model whose Rayleigh quotients are measured on `samples` and whose columns are sorted by them."""
        if len(samples):
            rayleigh = np.mean(np.square(samples @ basis), axis=0)
        else:
            rayleigh = np.zeros(basis.shape[1])
        order = np.argsort(-rayleigh, kind="stable")
        return cls(basis[:, order], rayleigh[order], meta)

    @property
    def m(self) -> int:
        """Feature dimension."""
        return int(self.basis.shape[0])

    @property
    def k(self) -> int:
        """Number of directions actually held, which is below ``meta.k`` for rank-deficient models."""
        return int(self.basis.shape[1])

    def projector(self) -> FloatArray:
        """Return the ``(m, m)`` orthogonal projector ``U U^T``."""
        return self.basis @ self.basis.T


def _check_positive_int(_instance: object, attribute: attrs.Attribute[Any], value: int) -> None:
    if value < 1:
        msg = f"{attribute.name} must be positive, got {value!r}."
        raise InvalidArgumentError(msg)


@attrs.define(eq=False)
class CovarianceAccumulator:
    """A mergeable running sum ``sum_i z_i z_i^T`` for the empirical feature covariance.

    Accumulators are single-writer.
    Parallel accumulation shards the stream into independent accumulators and combines them with :any:`merge`.
    """

    m: int = attrs.field(validator=_check_positive_int)
    sum: FloatArray = attrs.field(default=attrs.Factory(lambda self: np.zeros((self.m, self.m)), takes_self=True))
    count: int = 0
    skipped: int = 0
    """Samples rejected for non-finite entries."""

    @classmethod
    def empty(cls, m: int) -> CovarianceAccumulator:
        """Return an accumulator with no samples."""
        return cls(m)


def _as_feature_vector(z: ArrayLike, m: int) -> FloatArray:
    vector = np.asarray(z, dtype=np.float64)
    if vector.shape != (m,):
        msg = f"Feature vector has shape {vector.shape} but ({m},) was expected."
        raise InvalidArgumentError(msg)
    return vector


def accumulate(acc: CovarianceAccumulator, z: ArrayLike) -> CovarianceAccumulator:
    """Add ``z z^T`` to `acc` in-place and return it.

    Samples with non-finite entries are rejected and counted in ``acc.skipped``.
    """
    vector = _as_feature_vector(z, acc.m)
    if not np.isfinite(vector).all():
        acc.skipped += 1
        return acc
    acc.sum += np.outer(vector, vector)
    acc.count += 1
    return acc


def accumulate_batch(acc: CovarianceAccumulator, Z: ArrayLike) -> CovarianceAccumulator:
    """Add every row of the ``(n, m)`` batch `Z` to `acc` in-place and return it.

    Example::

        >>> acc = accumulate_batch(CovarianceAccumulator.empty(2), [[1.0, 0.0], [np.nan, 1.0], [0.0, 2.0]])
        >>> acc.count, acc.skipped
        (2, 1)
        >>> covariance(acc).tolist()
        [[0.5, 0.0], [0.0, 2.0]]
    """
    batch = np.asarray(Z, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != acc.m:  # noqa: PLR2004
        msg = f"Feature batch has shape {batch.shape} but (n, {acc.m}) was expected."
        raise InvalidArgumentError(msg)
    finite = np.isfinite(batch).all(axis=1)
    if not finite.all():
        acc.skipped += int((~finite).sum())
        batch = batch[finite]
    update = batch.T @ batch
    acc.sum += (update + update.T) * 0.5
    acc.count += int(batch.shape[0])
    return acc


def merge(acc_a: CovarianceAccumulator, acc_b: CovarianceAccumulator) -> CovarianceAccumulator:
    """Return a new accumulator holding the samples of both arguments."""
    if acc_a.m != acc_b.m:
        msg = f"Cannot merge accumulators of dimension {acc_a.m} and {acc_b.m}."
        raise InvalidArgumentError(msg)
    return CovarianceAccumulator(
        acc_a.m, acc_a.sum + acc_b.sum, acc_a.count + acc_b.count, acc_a.skipped + acc_b.skipped
    )


def covariance(acc: CovarianceAccumulator) -> FloatArray:
    """Return the empirical covariance ``sum / count``."""
    if acc.count == 0:
        msg = "The accumulator holds no samples."
        raise InvalidArgumentError(msg)
    return acc.sum / acc.count


def _fix_signs(vectors: FloatArray) -> FloatArray:
    """Return per-column signs making the largest-magnitude entry of each column positive."""
    if vectors.shape[0] == 0:
        return np.ones(vectors.shape[1])
    pivots = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    return np.where(pivots < 0, -1.0, 1.0)


def top_eigenpairs(matrix: ArrayLike, k: int) -> tuple[FloatArray, FloatArray, bool]:
    """Return the top-`k` eigenvalues and eigenvectors of a symmetric matrix.

    Eigenvalues come out non-increasing.
    Each eigenvector has its largest-magnitude entry positive and equal eigenvalues are ordered by lexicographic
    comparison of their sign-fixed eigenvectors.
    Directions with eigenvalues at or below ``1e-12`` times the largest are dropped and reported by the returned flag.

    Example::

        >>> values, vectors, deficient = top_eigenpairs([[2.0, 0.0], [0.0, 0.0]], 2)
        >>> bool(np.allclose(values, [2.0])), bool(np.allclose(vectors, [[1.0], [0.0]])), deficient
        (True, True, True)
    """
    array = np.asarray(matrix, dtype=np.float64)
    n = array.shape[0]
    if array.shape != (n, n):
        msg = f"Expected a square matrix, got shape {array.shape}."
        raise InvalidArgumentError(msg)
    if not 1 <= k <= n:
        msg = f"Rank {k} is outside [1, {n}]."
        raise InvalidArgumentError(msg)
    values, vectors = scipy.linalg.eigh(array, subset_by_index=(n - k, n - 1))
    vectors = vectors * _fix_signs(vectors)
    order = np.lexsort(np.vstack([vectors[::-1], -values]))
    values = values[order]
    vectors = vectors[:, order]
    keep = values > RANK_THRESHOLD * values[0] if values[0] > 0 else np.zeros(k, dtype=bool)
    return values[keep], vectors[:, keep], bool(keep.sum() < k)


def _warn_deficient(what: str, found: int, k: int) -> None:
    warnings.warn(
        f"{what} has only {found} numerically nonzero directions, fewer than the requested rank {k}.",
        RuntimeWarning,
        stacklevel=3,
    )


def rf_erm(acc: CovarianceAccumulator, k: int, *, seed: int | None = None) -> SubspaceModel:
    """Return the RF-ERM solution: the top-`k` eigenvectors of the empirical feature covariance.

    Rayleigh quotients are the corresponding eigenvalues.
    """
    if not 1 <= k <= acc.m:
        msg = f"Rank {k} is outside [1, {acc.m}]."
        raise InvalidArgumentError(msg)
    if acc.count < k:
        msg = f"RF-ERM needs at least k={k} samples, got {acc.count}."
        raise InvalidArgumentError(msg)
    values, vectors, deficient = top_eigenpairs(covariance(acc), k)
    if deficient:
        _warn_deficient("The feature covariance", values.size, k)
    meta = LearnerMeta("rf_erm", acc.count, acc.m, k, seed, rank_deficient=deficient, skipped=acc.skipped)
    return SubspaceModel(vectors, values, meta)


@attrs.frozen(eq=False)
class GramModel:
    """A kernel-matrix solution evaluable out-of-sample.

    The `i`-th lifted eigenfunction is ``f_i(x) = sum_q A[q, i] k(x_q, x) / sqrt(sigma_i)`` over the training points, for
    Nystrom models too.
    Nystrom models also carry the landmark form ``g_i(x) = sum_l C[l, i] k(x_l, x)`` of their approximated kernel, see
    :any:`landmark_functions`.
    """

    spec: KernelSpec
    train_points: FloatArray
    coefficients: FloatArray
    """Unit-norm eigenvector coefficients over the training points, ``(n_tr, k)``."""
    gram_eigenvalues: FloatArray
    """Non-increasing positive eigenvalues ``sigma_i`` of the (approximated) kernel matrix."""
    kind: GramKind
    meta: LearnerMeta
    landmarks: IndexArray | None = None
    """Indices of the Nystrom landmarks within `train_points`."""
    landmark_coefficients: FloatArray | None = None
    """Coefficients ``(p, k)`` of the lifted eigenfunctions over the landmarks."""

    @property
    def k(self) -> int:
        """Number of directions held."""
        return int(self.coefficients.shape[1])

    def evaluate_functions(self, points: ArrayLike) -> FloatArray:
        """Return the ``(n, k)`` values of the lifted eigenfunctions at `points` from their training-set kernel rows."""
        cross = kernel_matrix(self.spec, points, self.train_points)
        return (cross @ self.coefficients) / np.sqrt(self.gram_eigenvalues)

    def landmark_functions(self, points: ArrayLike) -> FloatArray:
        """Return the ``(n, k)`` values at `points` of the eigenfunctions of the Nystrom approximation.

        They use only the kernel row to the landmarks. On the training set they equal ``A * sqrt(sigma)``, and they agree
        with :any:`evaluate_functions` everywhere when every training point is a landmark.

        Raises:
            InvalidArgumentError: The model was not built by :any:`nystrom_erm`.
        """
        if self.landmarks is None or self.landmark_coefficients is None:
            msg = f"A {self.kind} model has no landmarks."
            raise InvalidArgumentError(msg)
        cross = kernel_matrix(self.spec, points, self.train_points[self.landmarks])
        return cross @ self.landmark_coefficients


def _as_train_points(spec: KernelSpec, train: ArrayLike) -> FloatArray:
    points = np.asarray(train, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != spec.dim:  # noqa: PLR2004
        msg = f"Training points have shape {points.shape} but (n, {spec.dim}) was expected."
        raise InvalidArgumentError(msg)
    return points


def exact_erm(
    spec: KernelSpec,
    train: ArrayLike,
    k: int,
    *,
    max_points: int = DEFAULT_MAX_EXACT_POINTS,
    seed: int | None = None,
) -> GramModel:
    """Return the top-`k` eigenpairs of the exact ``(n_tr, n_tr)`` kernel matrix.

    Example::

        >>> model = exact_erm(KernelSpec("rbf", 1.0, dim=2), [[0.5, 0.5]], 1)
        >>> model.gram_eigenvalues.tolist(), model.coefficients.tolist()
        ([1.0], [[1.0]])
    """
    points = _as_train_points(spec, train)
    n = points.shape[0]
    if n > max_points:
        raise ResourceLimitError("The exact kernel matrix", cap=max_points, requested=n)
    if not 1 <= k <= n:
        msg = f"Rank {k} is outside [1, {n}]."
        raise InvalidArgumentError(msg)
    values, vectors, deficient = top_eigenpairs(kernel_matrix(spec, points), k)
    if deficient:
        _warn_deficient("The kernel matrix", values.size, k)
    meta = LearnerMeta("exact_erm", n, n, k, seed, rank_deficient=deficient)
    return GramModel(spec, points, vectors, values, "exact_erm", meta)


def nystrom_erm(spec: KernelSpec, train: ArrayLike, p_landmarks: int, k: int, seed: int) -> GramModel:
    """Return the top-`k` eigenpairs of the Nystrom approximation ``C W^+ C^T`` of the kernel matrix.

    `p_landmarks` training points are drawn uniformly without replacement.
    The inner ``(p, p)`` matrix is inverted on eigenvalues above ``1e-10`` times its largest eigenvalue.
    """
    points = _as_train_points(spec, train)
    n = points.shape[0]
    if not 1 <= k <= p_landmarks <= n:
        msg = f"Nystrom needs 1 <= k <= p <= n_tr, got k={k}, p={p_landmarks}, n_tr={n}."
        raise InvalidArgumentError(msg)
    generator = _seeding.rng(seed, _seeding.Purpose.LANDMARKS)
    landmarks = np.sort(generator.choice(n, size=p_landmarks, replace=False))
    cross = kernel_matrix(spec, points, points[landmarks])
    inner_values, inner_vectors = scipy.linalg.eigh(cross[landmarks])
    keep = inner_values > PINV_THRESHOLD * inner_values[-1]
    whitening = inner_vectors[:, keep] / np.sqrt(inner_values[keep])
    factor = cross @ whitening
    rank = min(k, factor.shape[1])
    values, rotation, deficient = top_eigenpairs(factor.T @ factor, rank)
    deficient = deficient or rank < k
    if deficient:
        _warn_deficient("The Nystrom approximation", values.size, k)
    coefficients = (factor @ rotation) / np.sqrt(values)
    landmark_coefficients = whitening @ rotation
    signs = _fix_signs(coefficients)
    meta = LearnerMeta("nystrom", n, n, k, seed, rank_deficient=deficient)
    return GramModel(
        spec,
        points,
        coefficients * signs,
        values,
        "nystrom",
        meta,
        landmarks=landmarks,
        landmark_coefficients=landmark_coefficients * signs,
    )
