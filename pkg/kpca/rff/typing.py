"""Common type-hints for kpca.rff."""

from __future__ import annotations

from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from typing_extensions import TypeAlias

FloatArray: TypeAlias = NDArray[np.float64]
"""Dense float64 array of any shape."""

IndexArray: TypeAlias = NDArray[np.intp]
"""Array of row indices."""

KernelFamily: TypeAlias = Literal["rbf", "laplacian", "cauchy"]
"""Supported shift-invariant kernel families."""

LearnerName: TypeAlias = Literal["rf_oja", "rf_erm", "exact_erm", "nystrom"]
"""Learners compared by the experiment harness."""

GramKind: TypeAlias = Literal["exact_erm", "nystrom"]
"""Kinds of kernel-matrix models."""

StreamMode: TypeAlias = Literal["single_pass", "with_replacement"]
"""Ordering policy of a stream source."""

MaybeFloat: TypeAlias = Any
"""A float, or :any:`kpca.rff.constants.Unavailable` when the quantity could not be computed."""
