"""Experiment harness comparing RF-Oja, RF-ERM, exact ERM and Nystrom on held-out data.

A run is described by an :any:`ExperimentConfig`, usually parsed from a TOML file:

.. code-block:: toml

    m = 750
    k = 10
    nystrom_p = 100
    checkpoints = [250, 500, 1000, 2000, 5000]

    [dataset]
    kind = "idx"
    path = "train-images-idx3-ubyte.gz"

    [kernel]
    family = "rbf"
    sigma_squared = 50.0

Every (learner, seed) cell streams the same seeded training order, is snapshot at each checkpoint and evaluated on a
held-out set shared by all learners of that seed.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Final, Literal

import attrs
import cattrs
import numpy as np
from typing_extensions import TypeAlias

from kpca.rff import _seeding, callbacks
from kpca.rff._converter import _get_converter
from kpca.rff.batchpca import (
    CovarianceAccumulator,
    GramModel,
    SubspaceModel,
    accumulate_batch,
    exact_erm,
    nystrom_erm,
    rf_erm,
)
from kpca.rff.constants import (
    DEFAULT_MAX_EVAL_POINTS,
    DEFAULT_MAX_EXACT_POINTS,
    DEFAULT_MAX_STEP,
    DEFAULT_WINDOW,
    WARMUP_HEAD,
    Unavailable,
)
from kpca.rff.data import (
    Dataset,
    StreamSource,
    exponential_spectrum,
    load_delimited,
    load_idx,
    split,
    synth_gaussian_spectrum,
)
from kpca.rff.errors import ConfigError, SpectralGapError
from kpca.rff.evaluate import (
    EvalReport,
    EvalSet,
    SpectrumDiagnostics,
    build_eval_set,
    evaluate_model,
    feature_budget,
    fourth_moment_spectrum,
)
from kpca.rff.kernelmap import FeatureMap, KernelSpec, sample_feature_map, transform
from kpca.rff.streampca import OjaConfig, OjaLearner, resolve_config
from kpca.rff.typing import KernelFamily, LearnerName

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence
    from os import PathLike

    from kpca.rff.evaluate import Model
    from kpca.rff.typing import FloatArray

__all__ = (
    "CSV_HEADER",
    "AggregateRow",
    "CellFailure",
    "DatasetConfig",
    "DiagnoseConfig",
    "DiagnosisReport",
    "ExperimentConfig",
    "ExperimentResult",
    "KernelConfig",
    "OjaOverrides",
    "RunRecord",
    "diagnose",
    "load_dataset",
    "parse_config",
    "run_experiment",
    "structure_config",
    "unstructure_config",
    "write_results",
)

logger = logging.getLogger(__name__)

CSV_HEADER: Final = ("learner", "seed", "n_seen", "m", "k", "objective", "gram_deviation", "wall_time_s")
"""Columns of the results file.

``m`` is the feature dimension for rf_oja and rf_erm rows and the number of training points ``n_tr`` for exact_erm and
nystrom rows, whose models are expansions over the training set.
"""

_CONVERTER = _get_converter()

Evaluator: TypeAlias = Callable[["SubspaceModel | GramModel", EvalSet], EvalReport]
"""Signature of :any:`evaluate_model`."""


@attrs.frozen
class DatasetConfig:
    """Where the points come from."""

    kind: Literal["idx", "delimited", "synthetic"]
    path: str | None = None
    labels_path: str | None = None
    delimiter: str = ","
    has_header: bool = False
    dim: int = 50
    """Synthetic dimension."""
    size: int = 20000
    """Synthetic sample count."""
    decay: float = 0.7
    """Ratio of consecutive synthetic eigenvalues, used when `eigenvalues` is empty."""
    eigenvalues: tuple[float, ...] = ()
    seed: int = 0
    """Seed of the synthetic sample, independent of the sweep seeds."""


@attrs.frozen
class KernelConfig:
    """A kernel family with its bandwidth given either as `bandwidth` (sigma) or `sigma_squared`."""

    family: KernelFamily = "rbf"
    bandwidth: float | None = None
    sigma_squared: float | None = None

    def spec(self, dim: int) -> KernelSpec:
        """Return the kernel over points of dimension `dim`."""
        if self.sigma_squared is not None:
            return KernelSpec.from_sigma_squared(self.family, self.sigma_squared, dim)
        assert self.bandwidth is not None
        return KernelSpec(self.family, self.bandwidth, dim)


@attrs.frozen
class OjaOverrides:
    """Schedule settings passed to every RF-Oja cell, unset fields are resolved from the stream."""

    T0: int | None = None
    T1: int | None = None
    c_warm: float = 1.0
    c_mid: float = 1.0
    c_decay: float = 1.0
    gap_estimate: float | None = None
    window: int = DEFAULT_WINDOW
    max_step: float = DEFAULT_MAX_STEP
    warm_start: bool = True

    def to_config(self, k: int, seed: int) -> OjaConfig:
        """Return the Oja configuration of one cell."""
        return OjaConfig(
            k,
            T0=self.T0,
            T1=self.T1,
            c_warm=self.c_warm,
            c_mid=self.c_mid,
            c_decay=self.c_decay,
            gap_estimate=self.gap_estimate,
            seed=seed,
            window=self.window,
            max_step=self.max_step,
            warm_start=self.warm_start,
        )


@attrs.frozen
class DiagnoseConfig:
    """Sizes of the spectrum diagnostic."""

    samples: int = 2000
    features: int = 500


@attrs.frozen
class ExperimentConfig:
    """A complete experiment description."""

    dataset: DatasetConfig
    kernel: KernelConfig
    m: int
    k: int
    learners: tuple[LearnerName, ...] = ("rf_oja", "rf_erm", "exact_erm", "nystrom")
    nystrom_p: int = 100
    checkpoints: tuple[int, ...] = (250, 500, 1000, 2000, 5000)
    train_size: int = 0
    """Training split size, 0 uses the largest checkpoint."""
    tune_size: int = 0
    eval_size: int = 2000
    seeds: tuple[int, ...] = tuple(range(10))
    max_exact_points: int = DEFAULT_MAX_EXACT_POINTS
    max_eval_points: int = DEFAULT_MAX_EVAL_POINTS
    workers: int = 1
    output: str = "results.csv"
    oja: OjaOverrides = attrs.Factory(OjaOverrides)
    diagnose: DiagnoseConfig = attrs.Factory(DiagnoseConfig)

    @property
    def n_train(self) -> int:
        """Number of training points split off the dataset."""
        return self.train_size or self.checkpoints[-1]


def _check(condition: bool, key: str, msg: str) -> None:  # noqa: FBT001
    if not condition:
        raise ConfigError(msg, key=key)


def _required_points(config: ExperimentConfig) -> int:
    return config.n_train + config.tune_size + config.eval_size


def _validate(config: ExperimentConfig) -> ExperimentConfig:
    """Check the invariants spanning several fields."""
    _check(config.m >= 1, "m", "must be positive")
    _check(1 <= config.k <= config.m, "k", f"must be in [1, m={config.m}]")
    _check(bool(config.learners), "learners", "must not be empty")
    _check(len(set(config.learners)) == len(config.learners), "learners", "must not repeat")
    _check(bool(config.checkpoints), "checkpoints", "must not be empty")
    _check(config.checkpoints[0] >= 1, "checkpoints", "must be positive")
    _check(
        all(a < b for a, b in zip(config.checkpoints, config.checkpoints[1:])),
        "checkpoints",
        "must be strictly increasing",
    )
    _check(bool(config.seeds), "seeds", "must not be empty")
    _check(
        config.train_size == 0 or config.train_size >= config.checkpoints[-1],
        "train_size",
        f"must be 0 or at least the largest checkpoint {config.checkpoints[-1]}",
    )
    _check(config.tune_size >= 0, "tune_size", "must not be negative")
    _check(
        1 <= config.eval_size <= config.max_eval_points,
        "eval_size",
        f"must be in [1, max_eval_points={config.max_eval_points}]",
    )
    _check(config.workers >= 1, "workers", "must be positive")
    if "nystrom" in config.learners:
        _check(
            config.k <= config.nystrom_p <= config.checkpoints[0],
            "nystrom_p",
            f"must be in [k={config.k}, first checkpoint={config.checkpoints[0]}]",
        )
    kernel = config.kernel
    _check(
        (kernel.bandwidth is None) != (kernel.sigma_squared is None),
        "kernel.bandwidth",
        "exactly one of bandwidth and sigma_squared must be set",
    )
    scale = kernel.bandwidth if kernel.bandwidth is not None else kernel.sigma_squared
    _check(scale is not None and math.isfinite(scale) and scale > 0, "kernel.bandwidth", "must be positive")
    dataset = config.dataset
    if dataset.kind == "synthetic":
        _check(dataset.dim >= 1, "dataset.dim", "must be positive")
        _check(dataset.size >= 1, "dataset.size", "must be positive")
        _check(
            dataset.size >= _required_points(config),
            "dataset.size",
            f"must hold the training, tuning and evaluation splits, {_required_points(config)} points",
        )
        _check(0 < dataset.decay <= 1, "dataset.decay", "must be in (0, 1]")
        _check(
            not dataset.eigenvalues or len(dataset.eigenvalues) == dataset.dim,
            "dataset.eigenvalues",
            f"must be empty or hold dim={dataset.dim} values",
        )
    else:
        _check(dataset.path is not None, "dataset.path", f"is required for {dataset.kind} datasets")
    _check(config.diagnose.samples >= 2, "diagnose.samples", "must be at least 2")  # noqa: PLR2004
    _check(config.diagnose.features > config.k, "diagnose.features", f"must exceed k={config.k}")
    return config


def _error_key(message: str) -> str | None:
    _, separator, path = message.rpartition(" @ $")
    return path.lstrip(".") or None if separator else None


def structure_config(data: Mapping[str, Any]) -> ExperimentConfig:
    """Return a validated configuration from plain data such as a parsed TOML document.

    Example::

        >>> config = structure_config(
        ...     {"dataset": {"kind": "synthetic"}, "kernel": {"sigma_squared": 50.0}, "m": 64, "k": 3}
        ... )
        >>> config.checkpoints, config.n_train
        ((250, 500, 1000, 2000, 5000), 5000)
        >>> try:
        ...     structure_config({"dataset": {"kind": "synthetic"}, "kernel": {"bandwidth": 1.0}, "m": 4, "k": 9})
        ... except ConfigError as error:
        ...     print(error)
        k: must be in [1, m=4]
    """
    try:
        config = _CONVERTER.structure(dict(data), ExperimentConfig)
    except cattrs.BaseValidationError as exc:
        messages = cattrs.transform_error(exc)
        raise ConfigError("; ".join(messages), key=_error_key(messages[0]) if messages else None) from None
    return _validate(config)


def unstructure_config(config: ExperimentConfig) -> dict[str, Any]:
    """Return the effective configuration, defaults included, as JSON-compatible data."""
    data: dict[str, Any] = _CONVERTER.unstructure(config)
    return data


def parse_config(path: str | PathLike[str]) -> ExperimentConfig:
    """Read and validate a TOML experiment configuration."""
    try:
        with Path(path).open("rb") as file:
            data = tomllib.load(file)
    except OSError as exc:
        msg = f"Cannot read {path}: {exc.strerror}"
        raise ConfigError(msg) from exc
    except tomllib.TOMLDecodeError as exc:
        msg = f"Invalid TOML in {path}: {exc}"
        raise ConfigError(msg) from exc
    return structure_config(data)


def load_dataset(config: DatasetConfig) -> Dataset:
    """Load or generate the points described by `config`."""
    if config.kind == "idx":
        assert config.path is not None
        return load_idx(config.path, config.labels_path)
    if config.kind == "delimited":
        assert config.path is not None
        return load_delimited(config.path, config.delimiter, has_header=config.has_header)
    eigenvalues = config.eigenvalues or exponential_spectrum(config.dim, config.decay)
    return synth_gaussian_spectrum(config.dim, config.size, eigenvalues, config.seed)


@attrs.frozen
class RunRecord:
    """One evaluated checkpoint of one (learner, seed) cell."""

    learner: str
    seed: int
    n_seen: int
    m: int
    """Feature dimension, or the number of training points for kernel-matrix learners."""
    k: int
    objective: float
    gram_deviation: float
    wall_time_s: float
    """Cumulative training time of the cell, evaluation excluded."""


@attrs.frozen
class AggregateRow:
    """Mean or standard error over seeds of one (learner, checkpoint)."""

    learner: str
    statistic: Literal["mean", "stderr"]
    n_seen: int
    m: int
    k: int
    objective: float
    gram_deviation: float
    wall_time_s: float


@attrs.frozen
class CellFailure:
    """A (learner, seed) cell which stopped on an error."""

    learner: str
    seed: int
    error: str


@attrs.frozen
class ExperimentResult:
    """Everything produced by :any:`run_experiment`."""

    config: ExperimentConfig
    records: tuple[RunRecord, ...]
    aggregates: tuple[AggregateRow, ...]
    failures: tuple[CellFailure, ...]
    csv_path: Path | None = None

    @property
    def ok(self) -> bool:
        """True when no cell failed."""
        return not self.failures


@attrs.frozen(eq=False)
class _SeedContext:
    """The split, feature map and evaluation set shared by every learner of one seed."""

    seed: int
    train: Dataset
    feature_map: FeatureMap
    eval_set: EvalSet


def _prepare_seed(config: ExperimentConfig, dataset: Dataset, spec: KernelSpec, seed: int) -> _SeedContext:
    sizes = [config.n_train, config.tune_size, config.eval_size]
    if not config.tune_size:
        del sizes[1]
    parts = split(dataset, sizes, seed)
    feature_map = sample_feature_map(spec, config.m, seed)
    eval_set = build_eval_set(spec, feature_map, parts[-1].points, max_points=config.max_eval_points)
    return _SeedContext(seed, parts[0], feature_map, eval_set)


# Trainers receive the stream prefix and the points added since the last checkpoint.
# Random-feature trainers map the new points themselves, kernel-matrix trainers never touch the feature map.


@attrs.define(eq=False)
class _OjaTrainer:
    feature_map: FeatureMap
    config: OjaConfig
    n_total: int
    learner: OjaLearner | None = None

    def advance(self, _prefix: FloatArray, points: FloatArray) -> Model:
        features = transform(self.feature_map, points)
        if self.learner is None:
            head = features[: max(1, min(WARMUP_HEAD, self.n_total // 4))]
            config = self.config
            if not config.resolved:
                config = resolve_config(config, head, self.n_total)
            self.learner = OjaLearner.start(features.shape[1], config, head=head)
        self.learner.partial_fit_many(features)
        return self.learner.snapshot()


@attrs.define(eq=False)
class _ErmTrainer:
    feature_map: FeatureMap
    accumulator: CovarianceAccumulator
    k: int
    seed: int

    def advance(self, _prefix: FloatArray, points: FloatArray) -> Model:
        accumulate_batch(self.accumulator, transform(self.feature_map, points))
        return rf_erm(self.accumulator, self.k, seed=self.seed)


@attrs.frozen(eq=False)
class _ExactTrainer:
    spec: KernelSpec
    k: int
    max_points: int
    seed: int

    def advance(self, prefix: FloatArray, _points: FloatArray) -> Model:
        return exact_erm(self.spec, prefix, self.k, max_points=self.max_points, seed=self.seed)


@attrs.frozen(eq=False)
class _NystromTrainer:
    spec: KernelSpec
    p: int
    k: int
    seed: int

    def advance(self, prefix: FloatArray, _points: FloatArray) -> Model:
        return nystrom_erm(self.spec, prefix, self.p, self.k, self.seed)


_Trainer: TypeAlias = "_OjaTrainer | _ErmTrainer | _ExactTrainer | _NystromTrainer"


def _make_trainer(learner: LearnerName, config: ExperimentConfig, context: _SeedContext) -> _Trainer:
    spec = context.feature_map.spec
    if learner == "rf_oja":
        return _OjaTrainer(context.feature_map, config.oja.to_config(config.k, context.seed), config.checkpoints[-1])
    if learner == "rf_erm":
        return _ErmTrainer(context.feature_map, CovarianceAccumulator.empty(config.m), config.k, context.seed)
    if learner == "exact_erm":
        return _ExactTrainer(spec, config.k, config.max_exact_points, context.seed)
    return _NystromTrainer(spec, config.nystrom_p, config.k, context.seed)


def _run_cell(
    learner: LearnerName, config: ExperimentConfig, context: _SeedContext, evaluator: Evaluator
) -> list[RunRecord]:
    """Train one learner on one seed's stream, evaluating at every checkpoint."""
    logger.info("Starting %s with seed %d", learner, context.seed)
    trainer = _make_trainer(learner, config, context)
    source = StreamSource(context.train, context.seed)
    order: list[int] = []
    records = []
    elapsed = 0.0
    for checkpoint in config.checkpoints:
        start = time.perf_counter()
        indices = source.take(checkpoint - len(order))
        order.extend(indices.tolist())
        model = trainer.advance(context.train.points[order], context.train.points[indices])
        elapsed += time.perf_counter() - start
        report = evaluator(model, context.eval_set)
        record = RunRecord(
            learner,
            context.seed,
            checkpoint,
            report.meta.m,
            config.k,
            report.objective,
            report.gram_deviation,
            elapsed,
        )
        logger.debug("%s", record)
        callbacks._on_checkpoint(record)
        records.append(record)
    logger.info("Finished %s with seed %d in %.3fs", learner, context.seed, elapsed)
    return records


def _aggregate(config: ExperimentConfig, records: Sequence[RunRecord]) -> list[AggregateRow]:
    rows = []
    for learner in config.learners:
        for checkpoint in config.checkpoints:
            group = [r for r in records if r.learner == learner and r.n_seen == checkpoint]
            if not group:
                continue
            columns = np.array([(r.objective, r.gram_deviation, r.wall_time_s) for r in group])
            mean = columns.mean(axis=0)
            stderr = columns.std(axis=0, ddof=1) / math.sqrt(len(group)) if len(group) > 1 else np.zeros(3)
            first = group[0]
            rows.append(AggregateRow(learner, "mean", checkpoint, first.m, first.k, *map(float, mean)))
            rows.append(AggregateRow(learner, "stderr", checkpoint, first.m, first.k, *map(float, stderr)))
    return rows


def write_results(
    path: str | PathLike[str], records: Sequence[RunRecord], aggregates: Sequence[AggregateRow] = ()
) -> None:
    """Write detail rows followed by aggregate rows, whose seed column holds ``mean`` or ``stderr``."""
    with Path(path).open("w", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(attrs.astuple(record))
        for row in aggregates:
            writer.writerow(
                (row.learner, row.statistic, row.n_seen, row.m, row.k, row.objective, row.gram_deviation, row.wall_time_s)
            )


def _config_dump_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".config.json")


def run_experiment(
    config: ExperimentConfig,
    *,
    out: str | PathLike[str] | None = None,
    workers: int | None = None,
    seed_offset: int = 0,
    evaluator: Evaluator = evaluate_model,
    dataset: Dataset | None = None,
    write: bool = True,
) -> ExperimentResult:
    """Run every (learner, seed) cell of `config` and write the results.

    A failing cell is logged and reported in :any:`ExperimentResult.failures` while the sweep continues.
    `evaluator` replaces :any:`evaluate_model`, `dataset` skips loading ``config.dataset``.
    With `write` the CSV goes to `out` (default ``config.output``) and the effective configuration to
    ``<out stem>.config.json``.

    Raises:
        ConfigError: The dataset is too small for the training, tuning and evaluation splits.
    """
    data = load_dataset(config.dataset) if dataset is None else dataset
    required = _required_points(config)
    if data.n < required:
        msg = (
            f"needs {required} points for the training, tuning and evaluation splits"
            f" but the dataset has {data.n}"
        )
        raise ConfigError(msg, key="dataset")
    spec = config.kernel.spec(data.dim)
    seeds = [seed + seed_offset for seed in config.seeds]
    failures: list[CellFailure] = []
    records: list[RunRecord] = []
    with concurrent.futures.ThreadPoolExecutor(workers or config.workers) as pool:
        prepared = {seed: pool.submit(_prepare_seed, config, data, spec, seed) for seed in seeds}
        contexts: dict[int, _SeedContext] = {}
        for seed, future in prepared.items():
            try:
                contexts[seed] = future.result()
            except Exception as exc:
                logger.exception("Could not prepare seed %d", seed)
                failures.extend(CellFailure(learner, seed, repr(exc)) for learner in config.learners)
        cells = {
            pool.submit(_run_cell, learner, config, context, evaluator): (learner, seed)
            for seed, context in contexts.items()
            for learner in config.learners
        }
        for future in concurrent.futures.as_completed(cells):
            learner, seed = cells[future]
            try:
                records.extend(future.result())
            except Exception as exc:
                logger.exception("Cell %s with seed %d failed", learner, seed)
                failures.append(CellFailure(learner, seed, repr(exc)))
    learner_order = {learner: i for i, learner in enumerate(config.learners)}
    records.sort(key=lambda r: (learner_order[r.learner], r.seed, r.n_seen))
    failures.sort(key=lambda f: (learner_order[f.learner], f.seed))
    aggregates = _aggregate(config, records)
    csv_path = None
    if write:
        csv_path = Path(out if out is not None else config.output)
        write_results(csv_path, records, aggregates)
        _config_dump_path(csv_path).write_text(json.dumps(unstructure_config(config), indent=2) + "\n")
        logger.info("Wrote %d records to %s", len(records), csv_path)
    return ExperimentResult(config, tuple(records), tuple(aggregates), tuple(failures), csv_path)


@attrs.frozen(eq=False)
class DiagnosisReport:
    """Spectrum diagnostics with decay ratios and the implied feature budget."""

    diagnostics: SpectrumDiagnostics
    n: int
    """Training size the feature budget is computed for."""
    feature_budget: int | None

    @classmethod
    def from_diagnostics(cls, diagnostics: SpectrumDiagnostics, n: int) -> DiagnosisReport:
        """Return the report of `diagnostics` for `n` training samples."""
        return cls(diagnostics, n, feature_budget(diagnostics, n))

    def render(self, rows: int = 10) -> str:
        """Return a plain-text table of the leading eigenvalues and the derived quantities."""
        diag = self.diagnostics
        lines = [f"{'j':>4} {'cprime':>12} {'ratio':>8} {'l2':>12} {'ratio':>8}"]
        cprime_ratios = diag.decay_ratios(rows, which="cprime")
        l2_ratios = diag.decay_ratios(rows, which="l2")
        for j in range(min(rows, diag.cprime_eigenvalues.size)):
            cprime_ratio = f"{cprime_ratios[j - 1]:8.4f}" if 0 < j <= cprime_ratios.size else f"{'-':>8}"
            l2_ratio = f"{l2_ratios[j - 1]:8.4f}" if 0 < j <= l2_ratios.size else f"{'-':>8}"
            lines.append(
                f"{j + 1:>4} {diag.cprime_eigenvalues[j]:12.5e} {cprime_ratio} {diag.l2_eigenvalues[j]:12.5e} {l2_ratio}"
            )
        if diag.b_k is Unavailable:
            lines.append(f"B_{diag.k} unavailable: the eigengap vanishes")
        else:
            lines.append(f"B_{diag.k} = {diag.b_k:.6g}")
            lines.append(f"kappa = {diag.kappa:.6g} at h = {diag.argmin_h} for m = {diag.m}")
        budget = "unavailable" if self.feature_budget is None else str(self.feature_budget)
        lines.append(f"implied feature budget for n = {self.n}: {budget}")
        return "\n".join(lines)


def diagnose(config: ExperimentConfig, *, seed_offset: int = 0, dataset: Dataset | None = None) -> DiagnosisReport:
    """Estimate the fourth-moment spectrum of the configured kernel on a subsample of the dataset.

    Raises:
        SpectralGapError: The `k`-th eigengap of the estimated spectrum vanishes, so `B_k` and `kappa` are undefined.
    """
    data = load_dataset(config.dataset) if dataset is None else dataset
    spec = config.kernel.spec(data.dim)
    seed = config.seeds[0] + seed_offset
    count = min(config.diagnose.samples, data.n)
    rows = np.sort(_seeding.rng(seed, _seeding.Purpose.DIAGNOSTICS).choice(data.n, size=count, replace=False))
    diagnostics = fourth_moment_spectrum(spec, data.points[rows], config.diagnose.features, seed, k=config.k, m=config.m)
    if diagnostics.b_k is Unavailable:
        msg = (
            f"The estimated eigengap lambda_{config.k} - lambda_{config.k + 1} vanishes,"
            " so B_k and kappa are undefined. Try another k or more diagnose.features."
        )
        raise SpectralGapError(msg)
    report = DiagnosisReport.from_diagnostics(diagnostics, config.n_train)
    logger.info("kappa=%s at h=%s, feature budget %s", diagnostics.kappa, diagnostics.argmin_h, report.feature_budget)
    return report
