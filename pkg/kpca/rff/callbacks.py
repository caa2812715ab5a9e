"""Checkpoint observers notified by the experiment harness."""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable, TypeVar

from typing_extensions import TypeAlias

if TYPE_CHECKING:
    from kpca.rff.harness import RunRecord

_OnCheckpointFunc: TypeAlias = Callable[["RunRecord"], None]
_OnCheckpointFuncT = TypeVar("_OnCheckpointFuncT", bound=_OnCheckpointFunc)

_on_checkpoint_callbacks: list[_OnCheckpointFunc] = []


def register_checkpoint() -> Callable[[_OnCheckpointFuncT], _OnCheckpointFuncT]:
    """Return a decorator to register a function called with every new :any:`RunRecord`.

    Callbacks run on the worker thread which produced the record, in registration order.

    Example::

        >>> import kpca.rff.callbacks
        >>> from kpca.rff.harness import RunRecord
        >>> @kpca.rff.callbacks.register_checkpoint()
        ... def on_checkpoint(record: RunRecord) -> None:
        ...     print(f"{record.learner} reached {record.n_seen} samples")
        >>> kpca.rff.callbacks._on_checkpoint(RunRecord("rf_oja", 0, 500, 10, 2, 1.0, 0.1, 0.5))
        rf_oja reached 500 samples
        >>> kpca.rff.callbacks.unregister_checkpoint(on_checkpoint)
    """

    def register(callback: _OnCheckpointFuncT) -> _OnCheckpointFuncT:
        _on_checkpoint_callbacks.append(callback)
        return callback

    return register


def unregister_checkpoint(callback: _OnCheckpointFunc) -> None:
    """Unregister a registered checkpoint callback."""
    _on_checkpoint_callbacks.remove(callback)


def _on_checkpoint(record: RunRecord) -> None:
    for callback in _on_checkpoint_callbacks:
        callback(record)
