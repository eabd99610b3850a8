"""Kernel backend selection.

The numba kernels are used when numba imports cleanly, unless the
environment variable ``SQZBUDGET_DISABLE_NUMBA`` is set to a non-empty value
other than ``0``. The choice is made once, at import.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _numpy_kernels

ENV_FLAG = "SQZBUDGET_DISABLE_NUMBA"


def _numba_module() -> ModuleType | None:
    try:
        from . import _numba_kernels
    except ImportError:
        return None
    return _numba_kernels


def get_backend(name: str) -> ModuleType:
    """Return the kernel module for ``"numba"`` or ``"numpy"``."""
    if name == "numpy":
        return _numpy_kernels
    if name == "numba":
        mod = _numba_module()
        if mod is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return mod
    raise ValueError(f"unknown backend {name!r}")


def _select() -> tuple[str, ModuleType]:
    if os.environ.get(ENV_FLAG, "") not in ("", "0"):
        return "numpy", _numpy_kernels
    mod = _numba_module()
    if mod is None:
        return "numpy", _numpy_kernels
    return "numba", mod


BACKEND, kernels = _select()
