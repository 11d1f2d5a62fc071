"""Select the integration kernel at import time.

The compiled extension is used when it imports cleanly and ``FLOQSYM_PURE``
is unset; otherwise everything runs through :mod:`floqsym._fallback`.
"""
from __future__ import annotations

import os

from . import _fallback

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

if os.environ.get("FLOQSYM_PURE", "").strip() not in ("", "0"):
    _default = "python"
else:
    _default = "compiled" if _kernels is not None else "python"


def compiled_available() -> bool:
    return _kernels is not None


def default_backend() -> str:
    return _default


def resolve(backend: str | None, has_kernel: bool) -> str:
    """Pick the backend for one call; fields without a kernel always run in Python."""
    name = backend or _default
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled":
        if _kernels is None:
            raise RuntimeError("compiled backend requested but floqsym._kernels is not built")
        if not has_kernel:
            return "python"
    return name
