"""Streaming kernel PCA with random Fourier features."""

from __future__ import annotations

import importlib.metadata

from kpca.rff.batchpca import CovarianceAccumulator, GramModel, LearnerMeta, SubspaceModel
from kpca.rff.constants import Unavailable
from kpca.rff.data import Dataset, StreamSource, SyntheticDataset
from kpca.rff.errors import (
    ConfigError,
    FormatError,
    InvalidArgumentError,
    KpcaError,
    ResourceLimitError,
    SpectralGapError,
)
from kpca.rff.evaluate import EvalReport, EvalSet, SpectrumDiagnostics
from kpca.rff.kernelmap import FeatureMap, KernelSpec
from kpca.rff.streampca import OjaConfig, OjaLearner, OjaState

__all__ = (
    "ConfigError",
    "CovarianceAccumulator",
    "Dataset",
    "EvalReport",
    "EvalSet",
    "FeatureMap",
    "FormatError",
    "GramModel",
    "InvalidArgumentError",
    "KernelSpec",
    "KpcaError",
    "LearnerMeta",
    "OjaConfig",
    "OjaLearner",
    "OjaState",
    "ResourceLimitError",
    "SpectralGapError",
    "SpectrumDiagnostics",
    "StreamSource",
    "SubspaceModel",
    "SyntheticDataset",
    "Unavailable",
)

try:
    __version__ = importlib.metadata.version("kpca-rff")
except importlib.metadata.PackageNotFoundError:
    __version__ = ""
