# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled windowed convolution kernel (1-D and 2-D coefficient boxes).

Same contract as _corepy.conv_dense, restricted to ndim <= 2; the selector
in _kernel routes higher dimensions to the pure-Python path.
"""

import numpy as np


def conv1(const unsigned short[::1] A, const unsigned short[::1] B,
          const unsigned short[:, ::1] ADD, const unsigned short[:, ::1] MUL):
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0]
    out = np.zeros(na + nb - 1, dtype=np.uint16)
    cdef unsigned short[::1] C = out
    cdef Py_ssize_t i, j
    cdef unsigned short a, b
    for i in range(na):
        a = A[i]
        if a == 0:
            continue
        for j in range(nb):
            b = B[j]
            if b != 0:
                C[i + j] = ADD[C[i + j], MUL[a, b]]
    return out


def conv2(const unsigned short[:, ::1] A, const unsigned short[:, ::1] B,
          const unsigned short[:, ::1] ADD, const unsigned short[:, ::1] MUL):
    cdef Py_ssize_t na0 = A.shape[0], na1 = A.shape[1]
    cdef Py_ssize_t nb0 = B.shape[0], nb1 = B.shape[1]
    out = np.zeros((na0 + nb0 - 1, na1 + nb1 - 1), dtype=np.uint16)
    cdef unsigned short[:, ::1] C = out
    cdef Py_ssize_t i0, i1, j0, j1
    cdef unsigned short a, b
    for i0 in range(na0):
        for i1 in range(na1):
            a = A[i0, i1]
            if a == 0:
                continue
            for j0 in range(nb0):
                for j1 in range(nb1):
                    b = B[j0, j1]
                    if b != 0:
                        C[i0 + j0, i1 + j1] = ADD[C[i0 + j0, i1 + j1], MUL[a, b]]
    return out
