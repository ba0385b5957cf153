"""Kernel backend selection.

The hot loops (alpha-distance matrices, the split scan, permutation replicates
and the Gini split search) have two implementations: numba-compiled loops in
``coseg._kernels_numba`` and vectorized numpy in ``coseg._kernels_numpy``.

Set ``COSEG_BACKEND=numpy`` to force the numpy path. The default is ``numba``
when numba imports cleanly, ``numpy`` otherwise. Both paths are tested
against each other.
"""

from __future__ import annotations

import os
import warnings

ENV_VAR = "COSEG_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def requested_backend() -> str:
    value = os.environ.get(ENV_VAR, "").strip().lower()
    if value in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if value not in ("numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not HAS_NUMBA:
        warnings.warn("numba requested but not importable; using numpy kernels")
        return "numpy"
    return value


def load_kernels(name: str | None = None):
    """Return the kernel module for ``name`` (default: the env-selected one)."""
    name = name or requested_backend()
    if name == "numba":
        from . import _kernels_numba as mod
    elif name == "numpy":
        from . import _kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r}")
    return mod


BACKEND = requested_backend()
kernels = load_kernels(BACKEND)
