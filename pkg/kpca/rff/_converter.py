from __future__ import annotations

from typing import Any

import cattrs


def _structure_int(obj: object, _type_hint: type[Any]) -> int:
    """Structure an integer without truncating floats or accepting booleans."""
    if isinstance(obj, bool) or not isinstance(obj, int):
        msg = f"expected an integer, got {obj!r}"
        raise TypeError(msg)
    return obj


def _structure_float(obj: object, _type_hint: type[Any]) -> float:
    """Structure a float from an int or float, never from strings or booleans."""
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        msg = f"expected a number, got {obj!r}"
        raise TypeError(msg)
    return float(obj)


def _structure_str(obj: object, _type_hint: type[Any]) -> str:
    if not isinstance(obj, str):
        msg = f"expected a string, got {obj!r}"
        raise TypeError(msg)
    return obj


def _structure_bool(obj: object, _type_hint: type[Any]) -> bool:
    if not isinstance(obj, bool):
        msg = f"expected true or false, got {obj!r}"
        raise TypeError(msg)
    return obj


def _get_converter() -> cattrs.Converter:
    """Return a cattrs converter configured for kpca.rff configuration files.

    Unknown keys are rejected and scalars are not coerced between types.
    """
    converter = cattrs.Converter(forbid_extra_keys=True)
    converter.register_structure_hook(int, _structure_int)
    converter.register_structure_hook(float, _structure_float)
    converter.register_structure_hook(str, _structure_str)
    converter.register_structure_hook(bool, _structure_bool)
    return converter
