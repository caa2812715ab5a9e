"""Tests for dataset loading, synthetic data, splits and streams."""

from __future__ import annotations

import gzip
import math
import struct
from typing import TYPE_CHECKING

import numpy as np
import pytest

from kpca.rff.data import (
    Dataset,
    StreamSource,
    exponential_spectrum,
    load_delimited,
    load_idx,
    save_delimited,
    split,
    stream,
    stream_batches,
    synth_gaussian_spectrum,
)
from kpca.rff.errors import FormatError, InvalidArgumentError
from kpca.rff.kernelmap import KernelSpec, sample_feature_map, transform

if TYPE_CHECKING:
    from pathlib import Path

# ruff: noqa: D103


def _idx_images(pixels: np.ndarray) -> bytes:
    n, rows, cols = pixels.shape
    return b"\x00\x00\x08\x03" + struct.pack(">3I", n, rows, cols) + pixels.astype(np.uint8).tobytes()


def _idx_labels(labels: list[int]) -> bytes:
    return b"\x00\x00\x08\x01" + struct.pack(">I", len(labels)) + bytes(labels)


def test_load_idx(tmp_path: Path) -> None:
    pixels = np.arange(2 * 3 * 2).reshape(2, 3, 2) * 20
    images = tmp_path / "train-images-idx3-ubyte"
    images.write_bytes(_idx_images(pixels))
    labels = tmp_path / "train-labels-idx1-ubyte"
    labels.write_bytes(_idx_labels([7, 1]))
    data = load_idx(images, labels)
    assert data.points.shape == (2, 6)
    np.testing.assert_allclose(data.points, pixels.reshape(2, 6) / 255)
    assert data.points.max() <= 1.0
    assert data.labels is not None
    assert data.labels.tolist() == [7, 1]
    assert data.name == "train-images-idx3-ubyte"
    assert data.scale == pytest.approx(1 / 255)


def test_load_idx_gzip(tmp_path: Path) -> None:
    pixels = np.full((3, 2, 2), 255)
    path = tmp_path / "images.idx.gz"
    path.write_bytes(gzip.compress(_idx_images(pixels)))
    data = load_idx(path)
    assert data.points.tolist() == [[1.0] * 4] * 3
    assert data.labels is None
    assert data.name == "images.idx"


def test_load_idx_bad_magic(tmp_path: Path) -> None:
    path = tmp_path / "images"
    path.write_bytes(b"\x00\x00\x08\x01" + struct.pack(">3I", 1, 1, 1) + b"\x00")
    with pytest.raises(FormatError, match="magic") as info:
        load_idx(path)
    assert info.value.offset == 3


@pytest.mark.parametrize(("raw", "offset"), [(b"\x00\x00", 2), (b"\x00\x00\x08\x03\x00\x00\x00\x01", 8)])
def test_load_idx_truncated_header(tmp_path: Path, raw: bytes, offset: int) -> None:
    path = tmp_path / "images"
    path.write_bytes(raw)
    with pytest.raises(FormatError, match="Truncated") as info:
        load_idx(path)
    assert info.value.offset == offset


def test_load_idx_truncated_pixels(tmp_path: Path) -> None:
    path = tmp_path / "images"
    raw = _idx_images(np.zeros((2, 2, 2)))[:-1]
    path.write_bytes(raw)
    with pytest.raises(FormatError, match="pixel bytes") as info:
        load_idx(path)
    assert info.value.offset == len(raw)


def test_load_idx_label_count_mismatch(tmp_path: Path) -> None:
    images = tmp_path / "images"
    images.write_bytes(_idx_images(np.zeros((2, 1, 1))))
    labels = tmp_path / "labels"
    labels.write_bytes(_idx_labels([1, 2, 3]))
    with pytest.raises(FormatError, match="3 labels for 2 images"):
        load_idx(images, labels)


def test_load_idx_mnist(mnist: Dataset) -> None:
    assert mnist.dim == 784
    assert 0.0 <= mnist.points.min() <= mnist.points.max() <= 1.0


def test_load_delimited(tmp_path: Path) -> None:
    path = tmp_path / "points.tsv"
    path.write_text("x\ty\n\n1\t2.5\n-3e2\t4\n\n")
    data = load_delimited(path, "\t", has_header=True)
    assert data.points.tolist() == [[1.0, 2.5], [-300.0, 4.0]]
    assert data.column_names == ("x", "y")
    assert data.name == "points.tsv"


@pytest.mark.parametrize(
    ("text", "line", "match"),
    [
        ("1,2\n3\n", 2, "Expected 2 columns"),
        ("1,2\n\n3,abc\n", 3, "Non-numeric"),
        ("1,nan\n", 1, "Non-finite"),
        ("1,inf\n", 1, "Non-finite"),
        ("", 1, "no data rows"),
        ("\n\n", 1, "no data rows"),
    ],
)
def test_load_delimited_errors(tmp_path: Path, text: str, line: int, match: str) -> None:
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(FormatError, match=match) as info:
        load_delimited(path)
    assert info.value.line == line
    assert info.value.offset is None


def test_load_delimited_header_only(tmp_path: Path) -> None:
    path = tmp_path / "empty.csv"
    path.write_text("a,b\n")
    with pytest.raises(FormatError, match="no data rows"):
        load_delimited(path, has_header=True)


def test_save_delimited_round_trip(tmp_path: Path) -> None:
    points = np.random.default_rng(0).normal(size=(5, 3))
    data = Dataset(points, "random", column_names=("a", "b", "c"))
    path = tmp_path / "random.csv"
    save_delimited(data, path)
    loaded = load_delimited(path, has_header=True)
    np.testing.assert_array_equal(loaded.points, points)
    assert loaded.column_names == ("a", "b", "c")


def test_dataset_validation() -> None:
    with pytest.raises(InvalidArgumentError):
        Dataset(np.zeros((0, 3)))
    with pytest.raises(InvalidArgumentError):
        Dataset(np.zeros(3))
    with pytest.raises(InvalidArgumentError, match="non-finite"):
        Dataset(np.array([[1.0, np.nan]]), "bad")


def test_exponential_spectrum() -> None:
    np.testing.assert_allclose(exponential_spectrum(4, 0.7), [1.0, 0.7, 0.49, 0.343])


def test_synth_gaussian_spectrum() -> None:
    spectrum = exponential_spectrum(5, 0.5)
    data = synth_gaussian_spectrum(5, 40_000, spectrum, seed=3)
    np.testing.assert_allclose(data.rotation.T @ data.rotation, np.eye(5), atol=1e-12)
    sample = data.points.T @ data.points / data.n
    np.testing.assert_allclose(sample, data.population_covariance(), atol=0.04)
    assert data.eigengap(2) == pytest.approx(0.25)
    assert data.eigengap(5) == pytest.approx(spectrum[-1])
    np.testing.assert_array_equal(data.top_subspace(2), data.rotation[:, :2])
    again = synth_gaussian_spectrum(5, 40_000, spectrum, seed=3)
    np.testing.assert_array_equal(again.points, data.points)


def test_synth_gaussian_spectrum_zero_eigenvalues() -> None:
    data = synth_gaussian_spectrum(4, 50, [2.0, 1.0, 0.0, 0.0], seed=0)
    np.testing.assert_allclose(data.points @ data.rotation[:, 2:], 0.0, atol=1e-12)


@pytest.mark.parametrize(
    "eigenvalues", [[1.0, 2.0, 0.5], [1.0, -0.1, -0.2], [1.0, 0.5], [1.0, np.inf, 0.0]]
)
def test_synth_gaussian_spectrum_rejects(eigenvalues: list[float]) -> None:
    with pytest.raises(InvalidArgumentError):
        synth_gaussian_spectrum(3, 10, eigenvalues, seed=0)


def test_split() -> None:
    data = Dataset(np.arange(20.0).reshape(10, 2), "grid", labels=np.arange(10))
    train, tune, test = split(data, (5, 3, 2), seed=1)
    assert (train.n, tune.n, test.n) == (5, 3, 2)
    assert (train.name, test.name) == ("grid[0]", "grid[2]")
    rows = np.concatenate([part.points[:, 0] for part in (train, tune, test)]) / 2
    assert sorted(rows.tolist()) == list(range(10))
    assert train.labels is not None
    np.testing.assert_array_equal(train.labels * 2.0, train.points[:, 0])
    again = split(data, (5, 3, 2), seed=1)
    np.testing.assert_array_equal(again[0].points, train.points)
    assert not np.array_equal(split(data, (5, 3, 2), seed=2)[0].points, train.points)


def test_split_keeps_synthetic_metadata() -> None:
    data = synth_gaussian_spectrum(3, 20, [1.0, 0.5, 0.1], seed=0)
    (part,) = split(data, (10,), seed=0)
    assert type(part) is type(data)
    np.testing.assert_array_equal(part.rotation, data.rotation)  # type: ignore[attr-defined]


@pytest.mark.parametrize("sizes", [(), (0, 5), (6, 5)])
def test_split_rejects(sizes: tuple[int, ...]) -> None:
    with pytest.raises(InvalidArgumentError):
        split(Dataset(np.zeros((10, 1))), sizes, seed=0)


def test_stream_single_pass() -> None:
    data = Dataset(np.arange(7.0)[:, None])
    source = StreamSource(data, seed=4)
    assert (source.length, source.remaining) == (7, 7)
    first = source.take(3)
    rest = source.take(10)
    assert sorted([*first.tolist(), *rest.tolist()]) == list(range(7))
    assert source.remaining == 0
    assert source.take(1).size == 0
    replay = StreamSource(data, seed=4).take(7)
    np.testing.assert_array_equal(replay, np.concatenate([first, rest]))


def test_stream_with_replacement() -> None:
    data = Dataset(np.arange(5.0)[:, None])
    bounded = StreamSource(data, seed=0, mode="with_replacement", draws=12)
    indices = bounded.take(100)
    assert indices.size == 12
    assert ((indices >= 0) & (indices < 5)).all()
    unbounded = StreamSource(data, seed=0, mode="with_replacement")
    assert unbounded.length is None
    assert unbounded.take(1000).size == 1000
    with pytest.raises(InvalidArgumentError, match="mode"):
        StreamSource(data, seed=0, mode="shuffle")  # type: ignore[arg-type]


def test_stream_with_replacement_is_uniform() -> None:
    rows, draws = 10, 100_000
    source = StreamSource(Dataset(np.arange(float(rows))[:, None]), seed=3, mode="with_replacement", draws=draws)
    counts = np.bincount(source.take(draws), minlength=rows)
    assert counts.sum() == draws
    sigma = math.sqrt(draws * (1 / rows) * (1 - 1 / rows))
    assert (np.abs(counts - draws / rows) <= 4 * sigma).all()



def test_stream_features() -> None:
    data = Dataset(np.random.default_rng(0).normal(size=(10, 2)))
    feature_map = sample_feature_map(KernelSpec("rbf", 1.0, dim=2), 6, seed=0)
    order = StreamSource(data, seed=9).take(10)
    vectors = list(stream(StreamSource(data, seed=9), feature_map, batch_size=3))
    assert len(vectors) == 10
    np.testing.assert_allclose(vectors, transform(feature_map, data.points[order]))
    batches = list(stream_batches(StreamSource(data, seed=9), feature_map, [4, 4, 4]))
    assert [batch.shape for batch in batches] == [(4, 6), (4, 6), (2, 6)]
    with pytest.raises(InvalidArgumentError, match="positive"):
        list(stream_batches(StreamSource(data, seed=9), feature_map, 0))
