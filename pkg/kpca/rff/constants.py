"""Special constants, sentinel values, and numerical thresholds."""

from __future__ import annotations

import math
from typing import Final

from sentinel_value import sentinel

Unavailable: Final = sentinel("Unavailable")
"""Marks a diagnostic quantity which could not be computed, such as `B_k` without an eigengap."""

TAU: Final = math.sqrt(2.0)
"""Uniform bound on a single random feature `sqrt(2) * cos(w.x + b)`."""

RANK_THRESHOLD: Final = 1e-12
"""Eigenvalues below this fraction of the largest eigenvalue are treated as zero."""

PINV_THRESHOLD: Final = 1e-10
"""Relative cutoff used for the Nystrom pseudo-inverse."""

GAP_FLOOR: Final = 1e-3
"""Smallest eigengap estimate accepted by the Oja schedule."""

DEFAULT_MAX_EXACT_POINTS: Final = 10_000
"""Default cap on the number of points for the exact kernel matrix."""

DEFAULT_MAX_EVAL_POINTS: Final = 4000
"""Default cap on the number of held-out points of an evaluation set."""

DEFAULT_WINDOW: Final = 1000
"""Default trailing window used for streaming Rayleigh quotients."""

WARMUP_HEAD: Final = 200
"""Number of leading stream samples inspected to estimate the eigengap."""

DEFAULT_MAX_STEP: Final = 0.5
"""Default bound on ``eta * ||z||^2`` for a single Oja update."""
