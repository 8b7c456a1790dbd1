"""Kernel backend selection.

The compiled kernels (regretlab._kernels, built from Cython) are preferred
when importable; otherwise the pure-python reference kernels are used. The
environment variable REGRETLAB_BACKEND forces the choice:

    auto      compiled if built, python otherwise (default)
    compiled  require the extension, fail loudly if missing
    python    ignore the extension
"""

import os

from . import _pykernels

_CHOICES = ("auto", "compiled", "python")


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_requested = os.environ.get("REGRETLAB_BACKEND", "auto").strip().lower() or "auto"
if _requested not in _CHOICES:
    raise ValueError(f"REGRETLAB_BACKEND must be one of {_CHOICES}, got {_requested!r}")

_compiled = None if _requested == "python" else _load_compiled()
if _requested == "compiled" and _compiled is None:
    raise ImportError("REGRETLAB_BACKEND=compiled but regretlab._kernels is not built")

kernels = _compiled if _compiled is not None else _pykernels
BACKEND = kernels.NAME


def get_kernels(name: str | None = None):
    """Kernel module for the given backend name (None = session default)."""
    if name is None or name == BACKEND:
        return kernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        compiled = _load_compiled()
        if compiled is None:
            raise ImportError("compiled kernels requested but regretlab._kernels is not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}; expected 'python' or 'compiled'")


def threads() -> int:
    """Parallelism cap from REGRETLAB_THREADS (default 1)."""
    raw = os.environ.get("REGRETLAB_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError("REGRETLAB_THREADS must be >= 1")
    return n
