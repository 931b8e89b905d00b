"""Kernel selector: compiled convolution when the extension built, pure
numpy otherwise.  HILOK_KERNEL=python forces the fallback (used by the
benchmark and the backend-agreement tests)."""

from __future__ import annotations

import os

import numpy as np

from . import _corepy

try:
    from . import _corec  # type: ignore[attr-defined]
except ImportError:
    _corec = None

BACKEND = "c" if (_corec is not None and os.environ.get("HILOK_KERNEL") != "python") else "python"


def conv_dense(A: np.ndarray, B: np.ndarray, ADD: np.ndarray, MUL: np.ndarray) -> np.ndarray:
    if BACKEND == "c" and A.ndim <= 2:
        A = np.ascontiguousarray(A, dtype=np.uint16)
        B = np.ascontiguousarray(B, dtype=np.uint16)
        if A.ndim == 1:
            return _corec.conv1(A, B, ADD, MUL)
        return _corec.conv2(A, B, ADD, MUL)
    return _corepy.conv_dense(A, B, ADD, MUL)
