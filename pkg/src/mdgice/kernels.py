"""Backend selection for the residual kernel.

The compiled extension ``mdgice._kernel`` is used when it imports;
otherwise the numpy implementation in ``mdgice._kernel_py`` is used.
Set ``MDGICE_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernel_py

try:  # pragma: no cover - depends on the build
    from . import _kernel as _kernel_c
except ImportError:  # pragma: no cover
    _kernel_c = None

HAVE_COMPILED = _kernel_c is not None


def default_backend() -> str:
    env = os.environ.get("MDGICE_BACKEND", "").strip().lower()
    if env in ("python", "numpy"):
        return "python"
    return "compiled" if HAVE_COMPILED else "python"


def get_kernel(name: str | None = None):
    name = name or default_backend()
    if name == "compiled":
        if not HAVE_COMPILED:
            raise ImportError("compiled kernel is not built; reinstall the package")
        return _kernel_c.residual_batch
    if name == "python":
        return _kernel_py.residual_batch
    raise ValueError(f"unknown kernel backend {name!r}")
