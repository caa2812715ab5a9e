"""Oja's algorithm over a stream of feature vectors (RF-Oja).

The learning rate follows a three-phase schedule: a constant warm-up for `T0` steps, a constant middle phase for `T1`
steps, then a ``1/(t - T0)`` decay.
Each update is shortened so that ``eta * ||z||^2`` stays below ``max_step``, and :any:`run_oja` starts from the
leading singular vectors of the samples it inspects to estimate the eigengap.

Example::

    >>> rng = np.random.default_rng(0)
    >>> stream = rng.standard_normal((2000, 4)) * [2.0, 1.0, 0.3, 0.3]
    >>> model = run_oja(stream, OjaConfig(k=1, gap_estimate=3.0, T0=50, T1=50))
    >>> bool(abs(model.basis[0, 0]) > 0.99)
    True
"""

from __future__ import annotations

import collections
import itertools
import logging
import math
import warnings
from typing import TYPE_CHECKING, Any

import attrs
import numpy as np
import scipy.linalg

from kpca.rff import _seeding
from kpca.rff.batchpca import LearnerMeta, SubspaceModel
from kpca.rff.constants import DEFAULT_MAX_STEP, DEFAULT_WINDOW, GAP_FLOOR, RANK_THRESHOLD, WARMUP_HEAD
from kpca.rff.errors import InvalidArgumentError

if TYPE_CHECKING:
    from collections.abc import Iterable

    from numpy.typing import ArrayLike

    from kpca.rff.typing import FloatArray

__all__ = (
    "OjaConfig",
    "OjaLearner",
    "OjaState",
    "default_schedule",
    "estimate_gap",
    "init_oja",
    "learning_rate",
    "oja_step",
    "resolve_config",
    "run_oja",
    "warm_start_basis",
)

logger = logging.getLogger(__name__)


def _check_positive(_instance: object, attribute: attrs.Attribute[Any], value: float | None) -> None:
    if value is not None and not (math.isfinite(value) and value > 0):
        msg = f"{attribute.name} must be a finite positive number, got {value!r}."
        raise InvalidArgumentError(msg)


def _check_non_negative_int(_instance: object, attribute: attrs.Attribute[Any], value: int | None) -> None:
    if value is not None and value < 0:
        msg = f"{attribute.name} must be non-negative, got {value!r}."
        raise InvalidArgumentError(msg)


def _check_rank(_instance: object, _attribute: attrs.Attribute[Any], value: int) -> None:
    if value < 1:
        msg = f"The target rank k must be positive, got {value!r}."
        raise InvalidArgumentError(msg)


@attrs.frozen
class OjaConfig:
    """Parameters of the RF-Oja learner.

    `T0`, `T1` and `gap_estimate` may be left as None, in which case :any:`run_oja` estimates the gap from the head of
    the stream and derives the phase lengths with :any:`default_schedule`.
    """

    k: int = attrs.field(validator=_check_rank)
    T0: int | None = attrs.field(default=None, validator=_check_non_negative_int)
    T1: int | None = attrs.field(default=None, validator=_check_non_negative_int)
    c_warm: float = attrs.field(default=1.0, validator=_check_positive)
    c_mid: float = attrs.field(default=1.0, validator=_check_positive)
    c_decay: float = attrs.field(default=1.0, validator=_check_positive)
    gap_estimate: float | None = attrs.field(default=None, validator=_check_positive)
    """Estimate of the eigengap ``lambda_k - lambda_{k+1}`` of the feature covariance."""
    seed: int = 0
    window: int = attrs.field(default=DEFAULT_WINDOW, validator=_check_rank)
    """Length of the trailing buffer used for Rayleigh quotients."""
    max_step: float = attrs.field(default=DEFAULT_MAX_STEP, validator=_check_positive)
    """Bound on ``eta * ||z||^2``, larger steps are shortened to it."""
    warm_start: bool = True
    """Start :any:`run_oja` from the leading singular vectors of the warm-up head instead of a random basis."""

    @property
    def resolved(self) -> bool:
        """True when the schedule is fully specified."""
        return self.T0 is not None and self.T1 is not None and self.gap_estimate is not None


@attrs.frozen(eq=False)
class OjaState:
    """The current orthonormal iterate ``Q_t`` of Oja's algorithm."""

    basis: FloatArray
    step: int = 0
    skipped: int = 0
    """Samples rejected for non-finite entries."""


def _orthonormalize(matrix: FloatArray) -> FloatArray:
    """Return the Q factor of `matrix` with a non-negative R diagonal."""
    q, r = scipy.linalg.qr(matrix, mode="economic")
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)  # type: ignore[no-any-return]


def init_oja(m: int, k: int, seed: int) -> OjaState:
    """Return a random orthonormal starting basis ``(m, k)``.

    Example::

        >>> state = init_oja(3, 3, seed=0)
        >>> bool(np.allclose(state.basis.T @ state.basis, np.eye(3), atol=1e-10))
        True
    """
    if k < 1 or m < 1:
        msg = f"m and k must be positive, got m={m} and k={k}."
        raise InvalidArgumentError(msg)
    if k > m:
        msg = f"The rank k={k} exceeds the feature dimension m={m}."
        raise InvalidArgumentError(msg)
    gaussian = _seeding.rng(seed, _seeding.Purpose.OJA_INIT).standard_normal((m, k))
    return OjaState(_orthonormalize(gaussian))


def _phases(config: OjaConfig) -> tuple[int, int, float]:
    if not config.resolved:
        msg = "The Oja schedule is unresolved, set T0, T1, and gap_estimate or use run_oja."
        raise InvalidArgumentError(msg)
    assert config.T0 is not None
    assert config.T1 is not None
    assert config.gap_estimate is not None
    return config.T0, config.T1, config.gap_estimate


def learning_rate(config: OjaConfig, t: int) -> float:
    """Return the step size for step `t` (1-based).

    Example::

        >>> config = OjaConfig(k=1, T0=1, T1=1, gap_estimate=1.0)
        >>> learning_rate(config, 1), learning_rate(config, 2), learning_rate(config, 5)
        (1.0, 1.0, 0.25)
    """
    if t < 1:
        msg = f"Steps are numbered from 1, got {t}."
        raise InvalidArgumentError(msg)
    T0, T1, gap = _phases(config)
    if t <= T0:
        return config.c_warm / (gap * T0)
    if t <= T0 + T1:
        return config.c_mid / (gap * gap * T1)
    return config.c_decay / (gap * (t - T0))


def oja_step(state: OjaState, z: ArrayLike, eta: float) -> OjaState:
    """Return the iterate after one Oja update ``Q <- orth(Q + eta z (z^T Q))``.

    The rank-1 update costs ``O(mk)`` and orthonormalization ``O(mk^2)``.
    Non-finite samples leave the basis unchanged and are counted in ``skipped``.
    """
    vector = np.asarray(z, dtype=np.float64)
    if vector.shape != (state.basis.shape[0],):
        msg = f"Feature vector has shape {vector.shape} but ({state.basis.shape[0]},) was expected."
        raise InvalidArgumentError(msg)
    if not np.isfinite(vector).all():
        return OjaState(state.basis, state.step, state.skipped + 1)
    updated = state.basis + eta * np.outer(vector, vector @ state.basis)
    return OjaState(_orthonormalize(updated), state.step + 1, state.skipped)


def _finite_rows(samples: ArrayLike) -> FloatArray:
    """Return the rows of `samples` without non-finite entries as an ``(h, m)`` block."""
    block = np.asarray(samples, dtype=np.float64)
    if block.ndim == 1:
        block = block.reshape(1, -1) if block.size else block.reshape(0, 0)
    if block.ndim != 2:  # noqa: PLR2004
        msg = f"Expected a block of feature vectors, got shape {block.shape}."
        raise InvalidArgumentError(msg)
    return block[np.isfinite(block).all(axis=1)]


def estimate_gap(samples: ArrayLike, k: int) -> float:
    """Return the eigengap ``lambda_k - lambda_{k+1}`` of the empirical covariance of `samples`.

    Rows with non-finite entries are ignored.
    Estimates below ``1e-3`` are raised to that floor with a warning.

    Example::

        >>> round(estimate_gap(np.diag([np.sqrt(6.0), np.sqrt(3.0), 0.0]), 1), 9)
        1.0
    """
    block = _finite_rows(samples)
    if not block.shape[0]:
        msg = "Cannot estimate the eigengap, the warm-up block holds no finite samples."
        raise InvalidArgumentError(msg)
    m = block.shape[1]
    if not 1 <= k <= m:
        msg = f"Rank {k} is outside [1, {m}]."
        raise InvalidArgumentError(msg)
    eigenvalues = np.sort(np.linalg.svd(block, compute_uv=False) ** 2 / block.shape[0])[::-1]
    eigenvalues = np.concatenate([eigenvalues, np.zeros(max(0, k + 1 - eigenvalues.size))])
    gap = float(eigenvalues[k - 1] - eigenvalues[k])
    if gap < GAP_FLOOR:
        warnings.warn(
            f"Estimated eigengap {gap:.3g} is below {GAP_FLOOR}, the schedule will use the floor instead.",
            RuntimeWarning,
            stacklevel=2,
        )
        return GAP_FLOOR
    return gap


def default_schedule(k: int, gap: float, n: int | None = None) -> tuple[int, int]:
    """Return the default phase lengths ``(T0, T1)``.

    ``T0 = max(200, 4k ceil(1/gap^2))`` and ``T1 = ceil(1/gap^2)``, each capped at a quarter of the stream length `n`
    when it is known.

    Example::

        >>> default_schedule(3, 0.147)
        (564, 47)
        >>> default_schedule(3, 0.147, n=2000)
        (500, 47)
    """
    inverse_gap_sq = math.ceil(1.0 / (gap * gap))
    T0 = max(200, 4 * k * inverse_gap_sq)
    T1 = inverse_gap_sq
    if n is not None:
        cap = n // 4
        T0 = min(T0, cap)
        T1 = min(T1, cap)
    return T0, T1


def warm_start_basis(head: ArrayLike, m: int, k: int, seed: int) -> FloatArray:
    """Return an orthonormal ``(m, k)`` basis led by the top right singular vectors of the finite rows of `head`.

    Directions `head` does not span are completed from the random basis of :any:`init_oja`.

    Example::

        >>> basis = warm_start_basis([[0.0, 3.0, 0.0]], 3, 2, seed=0)
        >>> bool(np.allclose(np.abs(basis[:, 0]), [0.0, 1.0, 0.0]))
        True
        >>> bool(np.allclose(basis.T @ basis, np.eye(2)))
        True
    """
    block = _finite_rows(head)
    random_basis = init_oja(m, k, seed).basis
    if not block.shape[0]:
        return random_basis
    if block.shape[1] != m:
        msg = f"Warm-up samples have {block.shape[1]} features but m={m} was expected."
        raise InvalidArgumentError(msg)
    _, singular, vt = np.linalg.svd(block, full_matrices=False)
    keep = singular[:k] ** 2 > RANK_THRESHOLD * singular[0] ** 2
    leading = vt[:k][keep].T
    return _orthonormalize(np.hstack([leading, random_basis]))[:, :k]


@attrs.define(eq=False)
class OjaLearner:
    """Incremental RF-Oja: a single-writer wrapper around :any:`OjaState` with its schedule and trailing window.

    :any:`snapshot` may be called at any point without disturbing the stream.
    """

    config: OjaConfig
    state: OjaState
    _window: collections.deque[FloatArray] = attrs.field(init=False)

    @_window.default
    def _window_default(self) -> collections.deque[FloatArray]:
        return collections.deque(maxlen=self.config.window)

    @classmethod
    def start(cls, m: int, config: OjaConfig, head: ArrayLike | None = None) -> OjaLearner:
        """Return a learner at step 0.

        The basis is random, seeded by ``config.seed``, unless `head` is given and ``config.warm_start`` is set, in
        which case it starts from :any:`warm_start_basis`. `head` is not consumed.
        """
        _phases(config)
        if head is not None and config.warm_start:
            return cls(config, OjaState(warm_start_basis(head, m, config.k, config.seed)))
        return cls(config, init_oja(m, config.k, config.seed))

    def partial_fit(self, z: ArrayLike) -> None:
        """Consume one feature vector."""
        vector = np.asarray(z, dtype=np.float64)
        eta = learning_rate(self.config, self.state.step + 1)
        norm_sq = float(np.sum(vector * vector))
        if math.isfinite(norm_sq) and eta * norm_sq > self.config.max_step:
            eta = self.config.max_step / norm_sq
        skipped = self.state.skipped
        self.state = oja_step(self.state, vector, eta)
        if self.state.skipped == skipped:
            self._window.append(vector)

    def partial_fit_many(self, Z: Iterable[ArrayLike]) -> None:
        """Consume feature vectors in order."""
        for z in Z:
            self.partial_fit(z)

    def snapshot(self) -> SubspaceModel:
        """Return the current model with Rayleigh quotients measured on the trailing window."""
        T0 = self.config.T0 or 0
        meta = LearnerMeta(
            "rf_oja",
            self.state.step,
            self.state.basis.shape[0],
            self.config.k,
            self.config.seed,
            incomplete=self.state.step < T0,
            skipped=self.state.skipped,
        )
        samples = np.array(self._window) if self._window else np.empty((0, self.state.basis.shape[0]))
        return SubspaceModel.from_basis(self.state.basis, samples, meta)


def resolve_config(config: OjaConfig, head: FloatArray, n_hint: int | None) -> OjaConfig:
    """Fill the unset schedule fields of `config` from the leading stream samples `head`."""
    gap = config.gap_estimate if config.gap_estimate is not None else estimate_gap(head, config.k)
    T0, T1 = default_schedule(config.k, gap, n_hint)
    resolved = attrs.evolve(
        config,
        gap_estimate=gap,
        T0=config.T0 if config.T0 is not None else T0,
        T1=config.T1 if config.T1 is not None else T1,
    )
    logger.debug("Oja schedule resolved: gap=%.4g T0=%d T1=%d", gap, resolved.T0, resolved.T1)
    return resolved


def run_oja(stream: Iterable[ArrayLike], config: OjaConfig, *, n_hint: int | None = None) -> SubspaceModel:
    """Run RF-Oja over `stream` and return the final model.

    Unset schedule fields are resolved from the first ``min(200, n/4)`` samples, which are then consumed as usual.
    `n_hint` is the stream length when known; it defaults to ``len(stream)`` for sized streams.
    When the stream ends inside the warm-up phase the model is flagged ``incomplete``.
    """
    if n_hint is None and hasattr(stream, "__len__"):
        n_hint = len(stream)
    iterator = iter(stream)
    head_size = WARMUP_HEAD if n_hint is None else max(1, min(WARMUP_HEAD, n_hint // 4))
    head = [np.asarray(z, dtype=np.float64) for z in itertools.islice(iterator, head_size)]
    if not head:
        msg = "Cannot run Oja's algorithm on an empty stream."
        raise InvalidArgumentError(msg)
    block = np.array(head)
    if not config.resolved:
        config = resolve_config(config, block, n_hint)
    learner = OjaLearner.start(block.shape[1], config, head=block)
    learner.partial_fit_many(head)
    learner.partial_fit_many(iterator)
    return learner.snapshot()
