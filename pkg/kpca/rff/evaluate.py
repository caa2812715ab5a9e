"""Held-out evaluation of learned subspaces against the exact kernel.

Each direction of a feature-space basis `U` is lifted to a unit vector over the evaluation points,
``V = Z^T U S^(-1/2) / sqrt(n_e)``.
The objective is the variance of the kernel captured by `V`, ``tr(V^T K V) / n_e``, after `U` has been aligned to the
top eigenbasis of the held-out feature covariance, so it only depends on the span of `U`.
The Gram deviation measures how far the lifted columns of `U` as given are from being orthonormal.

Example::

    >>> X = np.diag([3.0, 2.0, 1.0])
    >>> eval_set = EvalSet.from_features(X)
    >>> basis = np.eye(3)[:, :1]
    >>> model = SubspaceModel(basis, np.ones(1), LearnerMeta("rf_erm", 3, 3, 1))
    >>> bool(np.isclose(lifted_objective(model, eval_set), 3.0))
    True
    >>> bool(np.isclose(gram_deviation(model, eval_set), 0.0))
    True
"""

from __future__ import annotations

import math
import time
import warnings
from typing import TYPE_CHECKING

import attrs
import numpy as np
import scipy.linalg
from typing_extensions import TypeAlias

from kpca.rff import _seeding
from kpca.rff.batchpca import GramModel, LearnerMeta, SubspaceModel, _fix_signs
from kpca.rff.constants import DEFAULT_MAX_EVAL_POINTS, RANK_THRESHOLD, Unavailable
from kpca.rff.errors import InvalidArgumentError, ResourceLimitError
from kpca.rff.kernelmap import FeatureMap, KernelSpec, kernel_matrix, sample_feature_map, transform

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from kpca.rff.typing import FloatArray, MaybeFloat

__all__ = (
    "EvalReport",
    "EvalSet",
    "SpectrumDiagnostics",
    "build_eval_set",
    "erm_objective",
    "evaluate_model",
    "excess_risk",
    "feature_budget",
    "fourth_moment_spectrum",
    "gram_deviation",
    "kappa",
    "lifted_objective",
    "procrustes_align",
    "spectrum_from_features",
    "subspace_error",
)

Model: TypeAlias = "SubspaceModel | GramModel"


@attrs.frozen(eq=False)
class EvalSet:
    """Held-out points with their cached features, exact kernel matrix and feature covariance.

    Use :any:`build_eval_set` for kernel data or :any:`EvalSet.from_features` for an explicit finite feature map.
    """

    points: FloatArray | None
    """Held-out inputs ``(n_e, d)``, missing when the set was built from features alone."""
    features: FloatArray
    """Rows ``z(x_q)``, shape ``(n_e, m)``."""
    kernel: FloatArray | None
    """Exact kernel matrix ``(n_e, n_e)``, or None when the kernel is realized exactly by `features`."""
    eval_cov: FloatArray
    """Held-out feature covariance ``Z Z^T / n_e``."""
    cov_eigenvalues: FloatArray
    """All eigenvalues of `eval_cov`, non-increasing."""
    cov_eigenvectors: FloatArray
    """Matching sign-fixed eigenvectors as columns."""

    @classmethod
    def from_features(
        cls, features: ArrayLike, kernel: ArrayLike | None = None, *, points: ArrayLike | None = None
    ) -> EvalSet:
        """Return an evaluation set over precomputed feature rows.

        Without `kernel` the kernel is taken to be ``features @ features.T`` and is never materialized.
        """
        rows = np.asarray(features, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:  # noqa: PLR2004
            msg = f"Expected a non-empty (n_e, m) feature matrix, got shape {rows.shape}."
            raise InvalidArgumentError(msg)
        if not np.isfinite(rows).all():
            msg = "Evaluation features must be finite."
            raise InvalidArgumentError(msg)
        n = rows.shape[0]
        gram = None
        if kernel is not None:
            gram = np.asarray(kernel, dtype=np.float64)
            if gram.shape != (n, n):
                msg = f"Kernel matrix has shape {gram.shape} but ({n}, {n}) was expected."
                raise InvalidArgumentError(msg)
        held_out = None if points is None else np.asarray(points, dtype=np.float64)
        if held_out is not None and held_out.shape[0] != n:
            msg = f"Got {held_out.shape[0]} points for {n} feature rows."
            raise InvalidArgumentError(msg)
        cov = rows.T @ rows / n
        cov = (cov + cov.T) * 0.5
        values, vectors = scipy.linalg.eigh(cov)
        values = values[::-1]
        vectors = vectors[:, ::-1]
        vectors = vectors * _fix_signs(vectors)
        return cls(held_out, rows, gram, cov, values, vectors)

    @property
    def n(self) -> int:
        """Number of held-out points."""
        return int(self.features.shape[0])

    @property
    def m(self) -> int:
        """Feature dimension."""
        return int(self.features.shape[1])

    @property
    def feature_matrix(self) -> FloatArray:
        """The ``(m, n_e)`` matrix `Z` whose columns are the held-out features."""
        return self.features.T

    def reference_basis(self, k: int) -> FloatArray:
        """Return the top-`k` eigenbasis ``(m, k)`` of the held-out feature covariance."""
        return self.cov_eigenvectors[:, :k]

    def kernel_times(self, V: FloatArray) -> FloatArray:
        """Return ``K @ V`` for an ``(n_e, r)`` matrix `V`."""
        if self.kernel is None:
            return self.features @ (self.features.T @ V)
        return self.kernel @ V


def build_eval_set(
    spec: KernelSpec, feature_map: FeatureMap, points: ArrayLike, *, max_points: int = DEFAULT_MAX_EVAL_POINTS
) -> EvalSet:
    """Transform held-out `points` and cache their exact kernel matrix.

    Example::

        >>> spec = KernelSpec("rbf", 1.0, dim=2)
        >>> eval_set = build_eval_set(spec, sample_feature_map(spec, 8, seed=0), [[0.0, 1.0]])
        >>> eval_set.kernel.tolist(), eval_set.feature_matrix.shape
        ([[1.0]], (8, 1))
    """
    if feature_map.spec != spec:
        msg = f"The feature map was sampled for {feature_map.spec!r}, not {spec!r}."
        raise InvalidArgumentError(msg)
    held_out = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = held_out.shape[0]
    if n < 1:
        msg = "An evaluation set needs at least one point."
        raise InvalidArgumentError(msg)
    if n > max_points:
        raise ResourceLimitError("The evaluation kernel matrix", cap=max_points, requested=n)
    return EvalSet.from_features(transform(feature_map, held_out), kernel_matrix(spec, held_out), points=held_out)


def procrustes_align(U: ArrayLike, target: ArrayLike) -> FloatArray:
    """Return the orthogonal ``(k, k)`` matrix `R` minimizing ``||U R - target||_F``.

    `R` is the orthogonal polar factor of ``U^T target``.
    A RuntimeWarning is issued when ``U^T target`` is singular, in which case `R` is one of several minimizers.

    Example::

        >>> U = np.eye(3)[:, :2]
        >>> bool(np.allclose(procrustes_align(U, U[:, ::-1]), [[0.0, 1.0], [1.0, 0.0]]))
        True
    """
    a = np.asarray(U, dtype=np.float64)
    b = np.asarray(target, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:  # noqa: PLR2004
        msg = f"Cannot align bases of shapes {a.shape} and {b.shape}."
        raise InvalidArgumentError(msg)
    rotation, _ = scipy.linalg.orthogonal_procrustes(a, b)
    singular = scipy.linalg.svdvals(a.T @ b)
    if singular.size and singular[-1] <= RANK_THRESHOLD:
        warnings.warn(
            "The bases are orthogonal along some direction, the alignment is not unique.", RuntimeWarning, stacklevel=2
        )
    return np.asarray(rotation, dtype=np.float64)


@attrs.frozen(eq=False)
class _Lifted:
    basis: FloatArray
    """Basis restricted to directions with nonzero held-out variance."""
    variances: FloatArray
    """Held-out variances ``S_ii`` of the kept directions."""


def _lift(model: SubspaceModel, eval_set: EvalSet, *, align: bool) -> _Lifted:
    """Return the directions of `model` with held-out variance, optionally aligned to the held-out eigenbasis."""
    U = model.basis
    if U.shape[0] != eval_set.m:
        msg = f"Model has feature dimension {U.shape[0]} but the evaluation set has {eval_set.m}."
        raise InvalidArgumentError(msg)
    if U.shape[1] == 0:
        msg = "The model holds no directions."
        raise InvalidArgumentError(msg)
    if align:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            U = U @ procrustes_align(U, eval_set.reference_basis(U.shape[1]))
    variances = np.einsum("ik,ij,jk->k", U, eval_set.eval_cov, U)
    keep = variances > RANK_THRESHOLD * max(float(eval_set.cov_eigenvalues[0]), 0.0)
    if not keep.all():
        warnings.warn(
            f"Dropped {int((~keep).sum())} of {keep.size} directions with no held-out variance.",
            RuntimeWarning,
            stacklevel=3,
        )
    if not keep.any():
        msg = "No direction of the model has held-out variance."
        raise InvalidArgumentError(msg)
    return _Lifted(U[:, keep], variances[keep])


def _lifted_objective(lifted: _Lifted, eval_set: EvalSet) -> float:
    V = eval_set.features @ lifted.basis / np.sqrt(eval_set.n * lifted.variances)
    return float(np.sum(V * eval_set.kernel_times(V)) / eval_set.n)


def _normalized_deviation(gram: FloatArray) -> float:
    scale = np.sqrt(np.diag(gram))
    return float(np.linalg.norm(gram / np.outer(scale, scale) - np.eye(gram.shape[0])))


def _lifted_deviation(lifted: _Lifted, eval_set: EvalSet) -> float:
    return _normalized_deviation(lifted.basis.T @ eval_set.eval_cov @ lifted.basis)


def lifted_objective(model: SubspaceModel, eval_set: EvalSet) -> float:
    """Return the held-out variance of the exact kernel captured by the lifted directions of `model`.

    In the normalization used here the exact top-`k` eigenbasis of a kernel realized exactly by its features scores
    the top-`k` eigenvalue mass of ``K / n_e``.
    Directions with held-out variance at or below ``1e-12`` times the largest covariance eigenvalue are dropped with a
    RuntimeWarning, use :any:`evaluate_model` to read the effective rank.
    """
    return _lifted_objective(_lift(model, eval_set, align=True), eval_set)


def _function_values(gmodel: GramModel, points: ArrayLike) -> FloatArray:
    values = gmodel.evaluate_functions(points)
    keep = gmodel.gram_eigenvalues > RANK_THRESHOLD * float(np.max(gmodel.gram_eigenvalues))
    if not keep.all():
        warnings.warn(
            f"Dropped {int((~keep).sum())} kernel eigenfunctions with vanishing eigenvalues.",
            RuntimeWarning,
            stacklevel=3,
        )
    return values[:, keep]


def erm_objective(gmodel: GramModel, points: ArrayLike) -> float:
    """Return the held-out objective ``sum_i mean_p f_i(x_p)^2`` of a kernel-matrix model at `points`.

    Example::

        >>> spec = KernelSpec("laplacian", 1.0, dim=1)
        >>> from kpca.rff.batchpca import exact_erm
        >>> model = exact_erm(spec, [[0.0]], 1)
        >>> bool(np.isclose(erm_objective(model, [[math.log(2)]]), 0.25))
        True
    """
    values = _function_values(gmodel, points)
    return float(np.sum(values * values) / values.shape[0])


def gram_deviation(model: Model, eval_set: EvalSet) -> float:
    """Return ``||G - I||_F`` for the normalized held-out Gram matrix `G` of the lifted directions of `model`.

    Zero exactly when the columns of `U` diagonalize the held-out feature covariance, so the basis matters and not only
    its span.
    Kernel-matrix models are measured on their eigenfunctions evaluated at ``eval_set.points``.
    """
    if isinstance(model, GramModel):
        return _normalized_deviation(_gram_model_gram(model, eval_set))
    return _lifted_deviation(_lift(model, eval_set, align=False), eval_set)


def _gram_model_gram(model: GramModel, eval_set: EvalSet) -> FloatArray:
    if eval_set.points is None:
        msg = "Kernel-matrix models need an evaluation set with points."
        raise InvalidArgumentError(msg)
    values = _function_values(model, eval_set.points)
    return values.T @ values / values.shape[0]


def subspace_error(model: SubspaceModel | ArrayLike, reference: ArrayLike) -> float:
    """Return ``||U - P_ref U||_F^2``, the squared distance of the model basis `U` to the reference subspace.

    Only the span of `reference` matters, so any orthonormal basis of the same subspace gives the same value.

    Example::

        >>> subspace_error(np.eye(4)[:, :2], np.eye(4)[:, 2:])
        2.0
    """
    U = model.basis if isinstance(model, SubspaceModel) else np.asarray(model, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if U.ndim != 2 or ref.ndim != 2 or U.shape[0] != ref.shape[0]:  # noqa: PLR2004
        msg = f"Cannot compare a basis of shape {U.shape} to a reference of shape {ref.shape}."
        raise InvalidArgumentError(msg)
    residual = U - ref @ (ref.T @ U)
    return float(np.sum(residual * residual))


def excess_risk(baseline: float, objective: float) -> float:
    """Return how much held-out variance `objective` misses compared to the ERM `baseline`."""
    return baseline - objective


@attrs.frozen
class EvalReport:
    """Evaluation of one model snapshot."""

    objective: float
    gram_deviation: float
    effective_rank: int
    """Number of directions which survived lifting."""
    wall_time_s: float
    """Time spent evaluating."""
    meta: LearnerMeta
    subspace_error: float | None = None


def evaluate_model(model: Model, eval_set: EvalSet, *, reference: ArrayLike | None = None) -> EvalReport:
    """Return the objective, Gram deviation and, given a `reference` basis, the subspace error of `model`."""
    start = time.perf_counter()
    if isinstance(model, GramModel):
        gram = _gram_model_gram(model, eval_set)
        objective = float(np.trace(gram))
        deviation = _normalized_deviation(gram)
        rank = gram.shape[0]
        error = None
    else:
        lifted = _lift(model, eval_set, align=True)
        objective = _lifted_objective(lifted, eval_set)
        deviation = _lifted_deviation(_lift(model, eval_set, align=False), eval_set)
        rank = lifted.basis.shape[1]
        error = None if reference is None else subspace_error(model, reference)
    return EvalReport(objective, deviation, rank, time.perf_counter() - start, model.meta, error)


@attrs.frozen(eq=False)
class SpectrumDiagnostics:
    """Estimated spectra of random-feature operators and the resulting feature-count factor `kappa`."""

    cprime_eigenvalues: FloatArray
    """Non-increasing estimates of the spectrum of the centered fourth-moment operator."""
    l2_eigenvalues: FloatArray
    """Non-increasing estimates of the spectrum of the feature covariance operator."""
    b_k: MaybeFloat
    """Fourth-moment factor over the `k`-th eigengap, or :any:`Unavailable` when the gap vanishes."""
    kappa: MaybeFloat
    """Minimum of the scanned bound, or :any:`Unavailable`."""
    argmin_h: int | None
    """The scan position attaining `kappa`."""
    k: int
    m: int

    def decay_ratios(self, count: int = 10, *, which: str = "cprime") -> FloatArray:
        """Return the ratios ``lambda_(j+1) / lambda_j`` over the leading numerically nonzero eigenvalues.

        `which` selects the ``"cprime"`` or the ``"l2"`` spectrum.
        """
        spectra = {"cprime": self.cprime_eigenvalues, "l2": self.l2_eigenvalues}
        if which not in spectra:
            msg = f"Unknown spectrum {which!r}, expected 'cprime' or 'l2'."
            raise InvalidArgumentError(msg)
        values = spectra[which]
        if not values.size or values[0] <= 0:
            return np.zeros(0)
        positive = values[: count + 1]
        positive = positive[positive > RANK_THRESHOLD * values[0]]
        return positive[1:] / positive[:-1]


def kappa(eigenvalues: ArrayLike, b_k: float, k: int, m: int) -> tuple[float, int]:
    """Return ``min_h (b_k h / m + sqrt(k / m * sum_(j>h) lambda_j))`` over ``h = 0 .. len(eigenvalues)`` and its `h`.

    The first minimizing `h` is returned on ties.

    Example::

        >>> value, h = kappa([1.0, 0.0, 0.0], 1.0, k=1, m=100)
        >>> round(value, 12), h
        (0.01, 1)
    """
    if k < 1 or m < 1:
        msg = f"k and m must be positive, got k={k} and m={m}."
        raise InvalidArgumentError(msg)
    values = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    tails = np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])
    h = np.arange(values.size + 1)
    scan = b_k * h / m + np.sqrt(k / m * np.clip(tails, 0.0, None))
    best = int(np.argmin(scan))
    return float(scan[best]), best


def spectrum_from_features(F: ArrayLike, k: int, m: int) -> SpectrumDiagnostics:
    """Estimate operator spectra from an ``(N, M)`` matrix of `M` single-feature functions evaluated at `N` points.

    Entries are single features such as ``sqrt(2) cos(w.x + b)``, not the ``sqrt(2/m)`` scaled map.
    `m` is the feature count whose `kappa` is reported.

    Example::

        >>> report = spectrum_from_features(np.full((5, 4), 2.0), k=1, m=10)
        >>> report.kappa, report.argmin_h
        (0.0, 0)
    """
    values = np.asarray(F, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 2:  # noqa: PLR2004
        msg = f"Need at least 2 points and 2 features, got shape {values.shape}."
        raise InvalidArgumentError(msg)
    N, M = values.shape
    if not 1 <= k < M:
        msg = f"Rank {k} is outside [1, {M - 1}]."
        raise InvalidArgumentError(msg)
    inner = values.T @ values / N
    inner = (inner + inner.T) * 0.5
    fourth = inner * inner
    centered = fourth - fourth.mean(axis=0) - fourth.mean(axis=1)[:, None] + fourth.mean()
    cprime = np.clip(scipy.linalg.eigvalsh(centered)[::-1] / M, 0.0, None)
    l2 = np.clip(scipy.linalg.eigvalsh(inner)[::-1] / M, 0.0, None)
    gap = float(l2[k - 1] - l2[k])
    if gap <= RANK_THRESHOLD * max(float(l2[0]), np.finfo(np.float64).tiny):
        return SpectrumDiagnostics(cprime, l2, Unavailable, Unavailable, None, k, m)
    pairs = inner[np.triu_indices(M, 1)]
    b_k = math.sqrt(float(np.mean(pairs**4))) / gap
    value, h = kappa(cprime, b_k, k, m)
    return SpectrumDiagnostics(cprime, l2, b_k, value, h, k, m)


def fourth_moment_spectrum(
    spec: KernelSpec, data: ArrayLike, M: int, seed: int, *, k: int, m: int
) -> SpectrumDiagnostics:
    """Draw `M` random features of `spec` and estimate spectra on the `N` points of `data`.

    The features are drawn from a stream independent of the one used for training maps of the same seed.
    """
    points = np.asarray(data, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2 or M < 2:  # noqa: PLR2004
        msg = f"Need at least 2 points and 2 features, got data of shape {points.shape} and M={M}."
        raise InvalidArgumentError(msg)
    draw_seed = int(_seeding.rng(seed, _seeding.Purpose.DIAGNOSTICS).integers(2**63))
    feature_map = sample_feature_map(spec, M, draw_seed)
    return spectrum_from_features(transform(feature_map, points) * math.sqrt(M), k, m)


def feature_budget(diagnostics: SpectrumDiagnostics, n: int, *, max_features: int = 1 << 40) -> int | None:
    """Return the smallest feature count `m` with ``kappa(m) <= 1 / sqrt(n)``, or None when it is unavailable.

    Example::

        >>> report = spectrum_from_features(np.full((5, 4), 2.0), k=1, m=10)
        >>> feature_budget(report, 100)
        1
    """
    if diagnostics.b_k is Unavailable or n < 1:
        return None
    target = 1.0 / math.sqrt(n)

    def small_enough(m: int) -> bool:
        return kappa(diagnostics.cprime_eigenvalues, diagnostics.b_k, diagnostics.k, m)[0] <= target

    high = 1
    while not small_enough(high):
        if high >= max_features:
            return None
        high *= 2
    low = high // 2
    while high - low > 1:
        middle = (low + high) // 2
        if small_enough(middle):
            high = middle
        else:
            low = middle
    return high
