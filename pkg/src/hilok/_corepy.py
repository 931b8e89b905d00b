"""Pure-Python (numpy) windowed convolution kernel.

Reference implementation of the dense n-dimensional coefficient convolution
over a finite field, driven entirely by the field's ADD/MUL code tables.  The
compiled backend in _corec must produce bit-identical output.
"""

from __future__ import annotations

import numpy as np


def conv_dense(A: np.ndarray, B: np.ndarray, ADD: np.ndarray, MUL: np.ndarray) -> np.ndarray:
    """Full convolution of coefficient boxes A, B (uint16 GF codes); output
    shape is elementwise A.shape + B.shape - 1."""
    if np.count_nonzero(A) > np.count_nonzero(B):
        A, B = B, A
    out_shape = tuple(da + db - 1 for da, db in zip(A.shape, B.shape))
    C = np.zeros(out_shape, dtype=np.uint16)
    for idx in np.argwhere(A):
        code = int(A[tuple(idx)])
        prod = MUL[code][B]
        sl = tuple(slice(int(i), int(i) + s) for i, s in zip(idx, B.shape))
        C[sl] = ADD[C[sl], prod]
    return C
