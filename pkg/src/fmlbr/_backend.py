"""Kernel backend selection: the compiled core when importable, else pure Python."""

from __future__ import annotations

from . import _pycore

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _compiled if _compiled is not None else _pycore


def available() -> list:
    return ["cython", "python"] if _compiled is not None else ["python"]


def get(name: str | None = None):
    if name is None:
        return _active
    if name == "python":
        return _pycore
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled core fmlbr._core is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}; choose from {available()}")


def set_backend(name: str) -> None:
    """Select the default kernels for subsequent calls ("cython" or "python")."""
    global _active
    _active = get(name)


def active_name() -> str:
    return _active.NAME
