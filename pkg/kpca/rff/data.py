"""Datasets, synthetic generators with known spectra, splits and seeded streams.

Example::

    >>> data = synth_gaussian_spectrum(3, 5, [1.0, 0.0, 0.0], seed=1)
    >>> data.points.shape
    (5, 3)
    >>> train, test = split(data, (3, 2), seed=0)
    >>> train.n, test.n
    (3, 2)
"""

from __future__ import annotations

import csv
import gzip
import itertools
import math
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Final

import attrs
import numpy as np
import scipy.linalg

from kpca.rff import _seeding
from kpca.rff.errors import FormatError, InvalidArgumentError
from kpca.rff.kernelmap import FeatureMap, transform

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Sequence
    from os import PathLike

    from numpy.typing import ArrayLike

    from kpca.rff.typing import FloatArray, IndexArray, StreamMode

__all__ = (
    "Dataset",
    "StreamSource",
    "SyntheticDataset",
    "exponential_spectrum",
    "load_delimited",
    "load_idx",
    "save_delimited",
    "split",
    "stream",
    "stream_batches",
    "synth_gaussian_spectrum",
)

_IMAGES_MAGIC: Final = b"\x00\x00\x08\x03"
_LABELS_MAGIC: Final = b"\x00\x00\x08\x01"
_GZIP_MAGIC: Final = b"\x1f\x8b"
_PIXEL_SCALE: Final = 1.0 / 255.0


@attrs.frozen(eq=False)
class Dataset:
    """An ``(n, d)`` matrix of finite points.

    `scale` and `offset` record the normalization ``raw * scale + offset`` which produced `points`.
    """

    points: FloatArray
    name: str = ""
    scale: float = 1.0
    offset: float = 0.0
    labels: IndexArray | None = None
    column_names: tuple[str, ...] | None = None

    def __attrs_post_init__(self) -> None:
        """Check the points."""
        if self.points.ndim != 2 or self.points.shape[0] < 1:  # noqa: PLR2004
            msg = f"A dataset needs an (n, d) matrix with n >= 1, got shape {self.points.shape}."
            raise InvalidArgumentError(msg)
        if not np.isfinite(self.points).all():
            msg = f"Dataset {self.name!r} has non-finite entries."
            raise InvalidArgumentError(msg)

    @property
    def n(self) -> int:
        """Number of points."""
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        """Dimension of each point."""
        return int(self.points.shape[1])


@attrs.frozen(eq=False)
class SyntheticDataset(Dataset):
    """Gaussian samples with the population covariance ``Q diag(spectrum) Q^T`` recorded."""

    rotation: FloatArray = attrs.field(kw_only=True)
    """Orthogonal ``(d, d)`` matrix `Q` whose columns are the population eigenvectors."""
    spectrum: FloatArray = attrs.field(kw_only=True)
    """Non-increasing population eigenvalues."""

    def top_subspace(self, k: int) -> FloatArray:
        """Return an orthonormal basis ``(d, k)`` of the top-`k` population eigenspace."""
        return self.rotation[:, :k]

    def population_covariance(self) -> FloatArray:
        """Return ``Q diag(spectrum) Q^T``."""
        return (self.rotation * self.spectrum) @ self.rotation.T

    def eigengap(self, k: int) -> float:
        """Return the population gap ``lambda_k - lambda_(k+1)``, treating eigenvalues past `d` as zero."""
        following = float(self.spectrum[k]) if k < self.spectrum.size else 0.0
        return float(self.spectrum[k - 1]) - following


def _read_bytes(path: str | PathLike[str]) -> bytes:
    raw = Path(path).read_bytes()
    if raw.startswith(_GZIP_MAGIC):
        return gzip.decompress(raw)
    return raw


def _check_magic(raw: bytes, magic: bytes, what: str) -> None:
    for offset, expected in enumerate(magic):
        if offset >= len(raw):
            msg = f"Truncated {what} header"
            raise FormatError(msg, offset=offset)
        if raw[offset] != expected:
            msg = f"Bad {what} magic number {raw[:4].hex()}, expected {magic.hex()}"
            raise FormatError(msg, offset=offset)


def _read_header(raw: bytes, count: int, what: str) -> tuple[int, ...]:
    end = 4 + 4 * count
    if len(raw) < end:
        msg = f"Truncated {what} header"
        raise FormatError(msg, offset=len(raw))
    return struct.unpack(f">{count}I", raw[4:end])


def _read_labels(path: str | PathLike[str], n: int) -> IndexArray:
    raw = _read_bytes(path)
    _check_magic(raw, _LABELS_MAGIC, "label file")
    (count,) = _read_header(raw, 1, "label file")
    if count != n:
        msg = f"Label file holds {count} labels for {n} images"
        raise FormatError(msg, offset=4)
    if len(raw) < 8 + count:  # noqa: PLR2004
        msg = "Truncated label data"
        raise FormatError(msg, offset=len(raw))
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8).astype(np.intp)


def load_idx(images_path: str | PathLike[str], labels_path: str | PathLike[str] | None = None) -> Dataset:
    """Load an idx image file, optionally with its label file, with pixels scaled to ``[0, 1]``.

    Files may be gzip-compressed.
    Each image is flattened row-major into one point.
    """
    raw = _read_bytes(images_path)
    _check_magic(raw, _IMAGES_MAGIC, "image file")
    n, rows, cols = _read_header(raw, 3, "image file")
    if n == 0:
        msg = "Image file holds no images"
        raise FormatError(msg, offset=4)
    size = n * rows * cols
    if len(raw) < 16 + size:  # noqa: PLR2004
        msg = f"Truncated image data, expected {size} pixel bytes"
        raise FormatError(msg, offset=len(raw))
    pixels = np.frombuffer(raw, dtype=np.uint8, count=size, offset=16).reshape(n, rows * cols)
    labels = None if labels_path is None else _read_labels(labels_path, n)
    name = Path(images_path).name.removesuffix(".gz")
    return Dataset(pixels * _PIXEL_SCALE, name, scale=_PIXEL_SCALE, labels=labels)


def _parse_row(row: list[str], line: int) -> list[float]:
    try:
        values = [float(cell) for cell in row]
    except ValueError:
        msg = f"Non-numeric cell in row {row!r}"
        raise FormatError(msg, line=line) from None
    if not all(map(math.isfinite, values)):
        msg = "Non-finite value"
        raise FormatError(msg, line=line)
    return values


def load_delimited(path: str | PathLike[str], delimiter: str = ",", *, has_header: bool = False) -> Dataset:
    """Load a rectangular numeric table, one point per row.

    Blank lines are ignored.
    With `has_header` the first non-blank row names the columns.

    Example::

        >>> import tempfile
        >>> with tempfile.TemporaryDirectory() as tmp:
        ...     path = Path(tmp, "points.csv")
        ...     _ = path.write_text("1,2\\n3,4\\n")
        ...     load_delimited(path).points.tolist()
        [[1.0, 2.0], [3.0, 4.0]]
    """
    names: tuple[str, ...] | None = None
    rows: list[list[float]] = []
    width: int | None = None
    with Path(path).open(newline="") as file:
        reader = csv.reader(file, delimiter=delimiter)
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is not None and len(row) != width:
                msg = f"Expected {width} columns, got {len(row)}"
                raise FormatError(msg, line=reader.line_num)
            width = len(row)
            if has_header and names is None:
                names = tuple(cell.strip() for cell in row)
                continue
            rows.append(_parse_row(row, reader.line_num))
    if not rows:
        msg = f"{Path(path).name} holds no data rows"
        raise FormatError(msg, line=1)
    return Dataset(np.array(rows, dtype=np.float64), Path(path).name, column_names=names)


def save_delimited(dataset: Dataset, path: str | PathLike[str], delimiter: str = ",") -> None:
    """Write `dataset` as delimited text which :any:`load_delimited` reads back exactly."""
    with Path(path).open("w", newline="") as file:
        writer = csv.writer(file, delimiter=delimiter, lineterminator="\n")
        if dataset.column_names is not None:
            writer.writerow(dataset.column_names)
        writer.writerows(dataset.points.tolist())


def exponential_spectrum(d: int, decay: float) -> FloatArray:
    """Return the eigenvalues ``decay**j`` for ``j = 0 .. d-1``.

    Example::

        >>> exponential_spectrum(3, 0.5).tolist()
        [1.0, 0.5, 0.25]
    """
    if not 0 < decay <= 1:
        msg = f"Decay must be in (0, 1], got {decay!r}."
        raise InvalidArgumentError(msg)
    return decay ** np.arange(d, dtype=np.float64)


def synth_gaussian_spectrum(d: int, n: int, eigenvalues: ArrayLike, seed: int) -> SyntheticDataset:
    """Draw `n` samples of ``N(0, Q diag(eigenvalues) Q^T)`` for a seeded random orthogonal `Q`.

    Zero eigenvalues are allowed and confine the samples to a subspace.
    """
    spectrum = np.asarray(eigenvalues, dtype=np.float64)
    if d < 1 or n < 1:
        msg = f"d and n must be positive, got d={d} and n={n}."
        raise InvalidArgumentError(msg)
    if spectrum.shape != (d,):
        msg = f"Expected {d} eigenvalues, got shape {spectrum.shape}."
        raise InvalidArgumentError(msg)
    if not np.isfinite(spectrum).all() or (spectrum < 0).any():
        msg = "Eigenvalues must be finite and non-negative."
        raise InvalidArgumentError(msg)
    if (np.diff(spectrum) > 0).any():
        msg = "Eigenvalues must be non-increasing."
        raise InvalidArgumentError(msg)
    generator = _seeding.rng(seed, _seeding.Purpose.SYNTHETIC)
    q, r = scipy.linalg.qr(generator.standard_normal((d, d)))
    rotation = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    points = (generator.standard_normal((n, d)) * np.sqrt(spectrum)) @ rotation.T
    spectrum.setflags(write=False)
    return SyntheticDataset(points, "synthetic", rotation=rotation, spectrum=spectrum)


def split(dataset: Dataset, sizes: Sequence[int], seed: int) -> tuple[Dataset, ...]:
    """Return disjoint random subsets of `dataset` with the given sizes, typically ``(train, tune, test)``.

    The parts keep the dataset's type and metadata.
    """
    if not sizes or any(size < 1 for size in sizes):
        msg = f"Split sizes must be positive, got {tuple(sizes)}."
        raise InvalidArgumentError(msg)
    if sum(sizes) > dataset.n:
        msg = f"Split sizes {tuple(sizes)} need {sum(sizes)} points but the dataset has {dataset.n}."
        raise InvalidArgumentError(msg)
    order = _seeding.rng(seed, _seeding.Purpose.SPLIT).permutation(dataset.n)
    bounds = list(itertools.accumulate(sizes, initial=0))
    parts = []
    for part, (start, stop) in enumerate(itertools.pairwise(bounds)):
        rows = np.sort(order[start:stop])
        parts.append(
            attrs.evolve(
                dataset,
                points=dataset.points[rows],
                name=f"{dataset.name}[{part}]",
                labels=None if dataset.labels is None else dataset.labels[rows],
            )
        )
    return tuple(parts)


@attrs.define(eq=False)
class StreamSource:
    """A seeded, single-consumer order over the points of a dataset.

    ``single_pass`` visits every point once in a random permutation.
    ``with_replacement`` draws uniform indices, up to `draws` of them or forever when `draws` is None.
    """

    dataset: Dataset
    seed: int
    mode: StreamMode = attrs.field(default="single_pass")
    draws: int | None = None
    cursor: int = 0
    _generator: np.random.Generator = attrs.field(init=False)
    _order: IndexArray | None = attrs.field(init=False)

    @mode.validator
    def _check_mode(self, _attribute: attrs.Attribute[str], value: str) -> None:
        if value not in ("single_pass", "with_replacement"):
            msg = f"Unknown stream mode {value!r}."
            raise InvalidArgumentError(msg)

    def __attrs_post_init__(self) -> None:
        """Derive the order from the seed."""
        self._generator = _seeding.rng(self.seed, _seeding.Purpose.STREAM)
        self._order = self._generator.permutation(self.dataset.n) if self.mode == "single_pass" else None

    @property
    def length(self) -> int | None:
        """Total number of indices this source yields, or None when unbounded."""
        return self.dataset.n if self._order is not None else self.draws

    @property
    def remaining(self) -> int | None:
        """Indices left to yield, or None when unbounded."""
        length = self.length
        return None if length is None else length - self.cursor

    def take(self, count: int) -> IndexArray:
        """Return up to `count` next indices and advance the cursor."""
        remaining = self.remaining
        if remaining is not None:
            count = min(count, remaining)
        count = max(count, 0)
        if self._order is not None:
            indices = self._order[self.cursor : self.cursor + count]
        else:
            indices = self._generator.integers(0, self.dataset.n, size=count).astype(np.intp)
        self.cursor += count
        return indices


def stream_batches(
    source: StreamSource, feature_map: FeatureMap, batch_size: int | Iterable[int] = 256
) -> Iterator[FloatArray]:
    """Yield the features of consecutive blocks of the stream as ``(b, m)`` arrays.

    `batch_size` is a fixed block size or an iterable of block sizes, the stream stops when either runs out.
    """
    sizes = itertools.repeat(batch_size) if isinstance(batch_size, int) else batch_size
    for size in sizes:
        if size < 1:
            msg = f"Batch sizes must be positive, got {size}."
            raise InvalidArgumentError(msg)
        indices = source.take(size)
        if not indices.size:
            return
        yield transform(feature_map, source.dataset.points[indices])


def stream(source: StreamSource, feature_map: FeatureMap, *, batch_size: int = 256) -> Iterator[FloatArray]:
    """Yield the feature vector of each point in stream order.

    Example::

        >>> from kpca.rff.kernelmap import KernelSpec, sample_feature_map
        >>> data = Dataset(np.eye(3))
        >>> feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=3), 4, seed=0)
        >>> len(list(stream(StreamSource(data, seed=0), feature_map)))
        3
    """
    for batch in stream_batches(source, feature_map, batch_size):
        yield from batch
