"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``TEDPEAK_BACKEND=python`` forces the fallback at import time.
"""
import contextlib
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends():
    return sorted(_BACKENDS)


def _initial():
    wanted = os.environ.get("TEDPEAK_BACKEND", "auto")
    if wanted == "auto":
        return "compiled" if _compiled is not None else "python"
    if wanted not in _BACKENDS:
        raise ImportError(f"TEDPEAK_BACKEND={wanted!r} is not available; have {available_backends()}")
    return wanted


_active = _initial()


def backend_name():
    return _active


def kernels():
    return _BACKENDS[_active]


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    _active = name


@contextlib.contextmanager
def use_backend(name):
    previous = _active
    set_backend(name)
    try:
        yield kernels()
    finally:
        set_backend(previous)
