"""Selection of the row-sweep kernel backend.

The compiled extension is preferred when importable; otherwise the
NumPy fallback is used.  The environment variable ``MVTSK_BACKEND``
forces a choice: ``compiled`` (error if unavailable) or ``python``.
Graph construction and all dense linear algebra are backend-independent,
so fitted models differ across backends only by floating-point
summation order.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from types import ModuleType

from . import _kernels_py


def _load() -> ModuleType:
    forced = os.environ.get("MVTSK_BACKEND", "").strip().lower()
    if forced in ("python", "py", "fallback"):
        return _kernels_py
    try:
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    except ImportError:
        if forced in ("compiled", "cython", "c"):
            raise ImportError(
                "MVTSK_BACKEND requests the compiled backend but the "
                "mvtsk._kernels extension is not built"
            )
        return _kernels_py


_BACKEND = _load()

NAME: str = _BACKEND.NAME

error_row_sweep = _BACKEND.error_row_sweep
pseudo_row_sweep = _BACKEND.pseudo_row_sweep
simplex_project = _kernels_py.simplex_project


def get_backend(name: str | None = None) -> ModuleType:
    """Return a kernel module by name, or the active one when name is None."""
    if name is None:
        return _BACKEND
    name = name.strip().lower()
    if name in ("python", "py", "fallback"):
        return _kernels_py
    if name in ("compiled", "cython", "c"):
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    """Names of importable kernel backends."""
    out = ["python"]
    try:
        from . import _kernels  # noqa: F401

        out.insert(0, "compiled")
    except ImportError:
        pass
    return out


@contextmanager
def use_backend(name: str):
    """Temporarily route kernel calls through the named backend."""
    global error_row_sweep, pseudo_row_sweep, NAME
    mod = get_backend(name)
    saved = (error_row_sweep, pseudo_row_sweep, NAME)
    error_row_sweep, pseudo_row_sweep, NAME = (
        mod.error_row_sweep,
        mod.pseudo_row_sweep,
        mod.NAME,
    )
    try:
        yield mod
    finally:
        error_row_sweep, pseudo_row_sweep, NAME = saved
