"""Shift-invariant kernels and their random Fourier feature maps.

A :any:`KernelSpec` names a normalized shift-invariant kernel.
:any:`sample_feature_map` draws frequencies from the kernel's spectral density and returns a :any:`FeatureMap` whose
inner products approximate the kernel.

Example::

    >>> spec = KernelSpec.from_sigma_squared("rbf", 50.0, dim=784)
    >>> feature_map = sample_feature_map(spec, 750, seed=7)
    >>> feature_map.frequencies.shape
    (750, 784)
    >>> z = transform(feature_map, np.zeros(784))
    >>> z.shape
    (750,)
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any, Callable, Final, get_args

import attrs
import numpy as np
from scipy.spatial.distance import cdist

from kpca.rff import _seeding
from kpca.rff.constants import TAU
from kpca.rff.errors import InvalidArgumentError
from kpca.rff.typing import FloatArray, KernelFamily

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

__all__ = (
    "KERNEL_FAMILIES",
    "FeatureMap",
    "KernelSpec",
    "approx_kernel",
    "exact_kernel",
    "kernel_matrix",
    "sample_feature_map",
    "suggest_num_features",
    "transform",
)

KERNEL_FAMILIES: Final[tuple[KernelFamily, ...]] = get_args(KernelFamily)
"""Names of the supported kernel families."""

_BLOCK_ELEMENTS: Final = 1 << 22
"""Upper bound on temporary elements when a kernel matrix is built in row blocks."""


def _check_family(_instance: object, _attribute: attrs.Attribute[Any], value: object) -> None:
    if value not in KERNEL_FAMILIES:
        msg = f"Unknown kernel family {value!r}, expected one of {KERNEL_FAMILIES}."
        raise InvalidArgumentError(msg)


def _check_bandwidth(_instance: object, _attribute: attrs.Attribute[Any], value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        msg = f"Kernel bandwidth must be a finite positive number, got {value!r}."
        raise InvalidArgumentError(msg)


def _check_dim(_instance: object, _attribute: attrs.Attribute[Any], value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        msg = f"Input dimension must be a positive integer, got {value!r}."
        raise InvalidArgumentError(msg)


@attrs.frozen
class KernelSpec:
    """A normalized shift-invariant kernel on ``R^dim``.

    `bandwidth` is the length-scale ``sigma`` in input units:

    * ``rbf``: ``exp(-||x - y||^2 / (2 sigma^2))``
    * ``laplacian``: ``exp(-||x - y||_1 / sigma)``
    * ``cauchy``: ``prod_j 1 / (1 + (x_j - y_j)^2 / sigma^2)``

    Example::

        >>> KernelSpec("rbf", 2.0, dim=3)
        KernelSpec(family='rbf', bandwidth=2.0, dim=3)
        >>> KernelSpec.from_sigma_squared("rbf", 50.0, dim=784).bandwidth == math.sqrt(50.0)
        True
    """

    family: KernelFamily = attrs.field(validator=_check_family)
    bandwidth: float = attrs.field(converter=float, validator=_check_bandwidth)
    dim: int = attrs.field(validator=_check_dim)

    @classmethod
    def from_sigma_squared(cls, family: KernelFamily, sigma_squared: float, dim: int) -> KernelSpec:
        """Return a kernel given its squared bandwidth, the convention used for the RBF kernel."""
        if not (math.isfinite(sigma_squared) and sigma_squared > 0):
            msg = f"sigma_squared must be a finite positive number, got {sigma_squared!r}."
            raise InvalidArgumentError(msg)
        return cls(family, math.sqrt(sigma_squared), dim)


@attrs.frozen(eq=False)
class FeatureMap:
    """Random Fourier features ``z_i(x) = sqrt(2/m) cos(w_i . x + b_i)``.

    Instances are immutable and their arrays are read-only, so :any:`transform` may be called from many threads.
    A feature map pickles as its ``(spec, m, seed)`` triple and is rebuilt bit-identically.
    """

    spec: KernelSpec
    frequencies: FloatArray
    """Frequencies ``w_i`` as rows of an ``(m, dim)`` matrix."""
    phases: FloatArray
    """Phases ``b_i`` in ``[0, 2 pi)``."""
    seed: int

    def __attrs_post_init__(self) -> None:
        """Check that the arrays agree with each other and with the kernel."""
        m = self.phases.shape[0] if self.phases.ndim == 1 else -1
        if m < 1 or self.frequencies.shape != (m, self.spec.dim):
            msg = (
                f"Frequencies of shape {self.frequencies.shape} and phases of shape {self.phases.shape}"
                f" do not describe a feature map on R^{self.spec.dim}."
            )
            raise InvalidArgumentError(msg)

    @property
    def m(self) -> int:
        """Number of random features."""
        return int(self.phases.shape[0])

    @property
    def tau(self) -> float:
        """Bound on the amplitude of a single unscaled feature ``sqrt(2) cos(w . x + b)``."""
        return TAU

    def __call__(self, x: ArrayLike) -> FloatArray:
        """Alias for :any:`transform`."""
        return transform(self, x)

    def __reduce__(self) -> tuple[Callable[[KernelSpec, int, int], FeatureMap], tuple[KernelSpec, int, int]]:
        """Pickle this map by the arguments which reproduce it."""
        return sample_feature_map, (self.spec, self.m, self.seed)


def sample_feature_map(spec: KernelSpec, m: int, seed: int) -> FeatureMap:
    """Draw `m` random Fourier features for `spec`.

    Frequencies follow the kernel's spectral density: an isotropic Gaussian with standard deviation ``1/sigma`` for
    ``rbf``, per-coordinate Cauchy with scale ``1/sigma`` for ``laplacian`` and per-coordinate Laplace with scale
    ``1/sigma`` for ``cauchy``.
    Phases are uniform on ``[0, 2 pi)``.

    Example::

        >>> spec = KernelSpec("rbf", 1.0, dim=1)
        >>> a = sample_feature_map(spec, 1, seed=3)
        >>> b = sample_feature_map(spec, 1, seed=3)
        >>> bool((a.frequencies == b.frequencies).all() and (a.phases == b.phases).all())
        True
    """
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 1:
        msg = f"The number of features must be a positive integer, got {m!r}."
        raise InvalidArgumentError(msg)
    m = int(m)
    generator = _seeding.rng(seed, _seeding.Purpose.FEATURES)
    scale = 1.0 / spec.bandwidth
    shape = (m, spec.dim)
    if spec.family == "rbf":
        frequencies = generator.normal(0.0, scale, size=shape)
    elif spec.family == "laplacian":
        frequencies = scale * generator.standard_cauchy(size=shape)
    else:
        frequencies = generator.laplace(0.0, scale, size=shape)
    phases = generator.uniform(0.0, 2.0 * math.pi, size=m)
    frequencies.setflags(write=False)
    phases.setflags(write=False)
    return FeatureMap(spec, frequencies, phases, seed)


def _as_points(x: ArrayLike, dim: int, name: str = "x") -> FloatArray:
    """Return `x` as a float array of one point ``(dim,)`` or a batch ``(n, dim)``."""
    points = np.asarray(x, dtype=np.float64)
    if points.ndim not in (1, 2) or points.shape[-1] != dim:
        msg = f"{name} has shape {points.shape} but points of dimension {dim} were expected."
        raise InvalidArgumentError(msg)
    return points


def transform(feature_map: FeatureMap, x: ArrayLike) -> FloatArray:
    """Return the random features of one point ``(d,) -> (m,)`` or of a batch ``(n, d) -> (n, m)``.

    Every coordinate lies in ``[-sqrt(2/m), sqrt(2/m)]`` so ``||z(x)||^2 <= 2``.

    Example::

        >>> spec = KernelSpec("rbf", 1.0, dim=2)
        >>> feature_map = FeatureMap(spec, np.ones((4, 2)), np.zeros(4), seed=0)
        >>> transform(feature_map, [0.0, 0.0]).tolist() == [math.sqrt(2 / 4)] * 4
        True
        >>> transform(feature_map, np.zeros((3, 2))).shape
        (3, 4)
    """
    points = _as_points(x, feature_map.spec.dim)
    projection = points @ feature_map.frequencies.T
    projection += feature_map.phases
    return math.sqrt(2.0 / feature_map.m) * np.cos(projection)


def exact_kernel(spec: KernelSpec, x: ArrayLike, y: ArrayLike) -> float:
    """Return the exact kernel value ``k(x, y)`` in ``[0, 1]``.

    Example::

        >>> rbf = KernelSpec.from_sigma_squared("rbf", 50.0, dim=2)
        >>> exact_kernel(rbf, [1.0, 2.0], [1.0, 2.0])
        1.0
        >>> round(exact_kernel(rbf, [0.0, 0.0], [10.0, 0.0]), 6)
        0.367879
        >>> round(exact_kernel(KernelSpec("laplacian", 1.0, dim=1), [0.0], [math.log(2)]), 12)
        0.5
    """
    a = _as_points(x, spec.dim)
    b = _as_points(y, spec.dim, "y")
    if a.ndim != 1 or b.ndim != 1:
        msg = "exact_kernel compares two single points, use kernel_matrix for point sets."
        raise InvalidArgumentError(msg)
    diff = a - b
    if spec.family == "rbf":
        return math.exp(-float(diff @ diff) / (2.0 * spec.bandwidth**2))
    if spec.family == "laplacian":
        return math.exp(-float(np.abs(diff).sum()) / spec.bandwidth)
    return float(np.prod(1.0 / (1.0 + (diff / spec.bandwidth) ** 2)))


def kernel_matrix(spec: KernelSpec, x: ArrayLike, y: ArrayLike | None = None) -> FloatArray:
    """Return the exact kernel matrix between the rows of `x` and the rows of `y` (default `x`).

    Example::

        >>> spec = KernelSpec("rbf", 1.0, dim=2)
        >>> K = kernel_matrix(spec, [[0.0, 0.0], [1.0, 0.0]])
        >>> K.shape
        (2, 2)
        >>> np.diag(K).tolist()
        [1.0, 1.0]
    """
    a = np.atleast_2d(_as_points(x, spec.dim))
    b = a if y is None else np.atleast_2d(_as_points(y, spec.dim, "y"))
    if spec.family == "rbf":
        return np.exp(cdist(a, b, "sqeuclidean") / (-2.0 * spec.bandwidth**2))
    if spec.family == "laplacian":
        return np.exp(cdist(a, b, "cityblock") / -spec.bandwidth)
    out = np.empty((a.shape[0], b.shape[0]))
    rows = max(1, _BLOCK_ELEMENTS // max(1, b.shape[0] * spec.dim))
    scaled_b = b / spec.bandwidth
    for start in range(0, a.shape[0], rows):
        block = a[start : start + rows, None, :] / spec.bandwidth - scaled_b[None, :, :]
        out[start : start + rows] = np.exp(-np.log1p(block * block).sum(axis=-1))
    return out


def approx_kernel(feature_map: FeatureMap, x: ArrayLike, y: ArrayLike) -> float:
    """Return ``<z(x), z(y)>``, the random-feature approximation of ``k(x, y)``.

    The value is exactly symmetric in `x` and `y` and bounded by 2 in absolute value.

    Example::

        >>> feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=2), 64, seed=0)
        >>> approx_kernel(feature_map, [0.0, 1.0], [1.0, 0.0]) == approx_kernel(feature_map, [1.0, 0.0], [0.0, 1.0])
        True
    """
    zx = transform(feature_map, x)
    zy = transform(feature_map, y)
    if zx.ndim != 1 or zy.ndim != 1:
        msg = "approx_kernel compares two single points."
        raise InvalidArgumentError(msg)
    return float(np.sum(zx * zy))


def suggest_num_features(n: int, k: int = 1) -> int:
    """Return the feature budget ``ceil(k sqrt(n) log n)`` sufficient to match the exact learner's rate on `n` samples.

    Example::

        >>> suggest_num_features(5000)
        603
        >>> suggest_num_features(1)
        1
    """
    if n < 1 or k < 1:
        msg = f"n and k must be positive, got n={n!r} and k={k!r}."
        raise InvalidArgumentError(msg)
    return max(1, math.ceil(k * math.sqrt(n) * math.log(n)))
