# ruff: noqa: D100 D103 ANN401
from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import numpy as np
import pytest

import kpca.rff
from kpca.rff.data import Dataset, load_idx


@pytest.fixture(autouse=True)
def _add_doctest_names(doctest_namespace: dict[str, Any]) -> None:
    """Add numpy and the package to all doctests."""
    doctest_namespace.update(
        {
            "np": np,
            "kpca": kpca,
        }
    )


def _find_idx(root: Path, stem: str) -> Path:
    for name in (stem, f"{stem}.gz"):
        if (root / name).exists():
            return root / name
    pytest.skip(f"{stem} not found in {root}")


@pytest.fixture(scope="session")
def mnist() -> Dataset:
    """MNIST training images from the directory named by KPCA_RFF_MNIST_DIR, the test is skipped without it."""
    root = os.environ.get("KPCA_RFF_MNIST_DIR")
    if not root:
        pytest.skip("KPCA_RFF_MNIST_DIR is not set")
    return load_idx(_find_idx(Path(root), "train-images-idx3-ubyte"))
