# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled generation kernels.

Same contract and same RNG consumption order as ``_fallback``; see that
module for the reference semantics.  Uniforms come straight from the
generator's bit stream (next_double), so outputs are bit-identical to the
pure-Python backend for the same seed.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport int64_t
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy

from numpy.random cimport bitgen_t

import numpy as np

BACKEND = "compiled"

STATUS_OK = 0
STATUS_BUDGET = 1
STATUS_TRIALS = 2


cdef inline Py_ssize_t _upper_bound(const double *cdf, Py_ssize_t n, double u) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef bitgen_t *_bitgen(object generator) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(
        generator.bit_generator.capsule, "BitGenerator"
    )


cdef struct _Buf:
    int64_t *data
    Py_ssize_t cap


cdef inline int _ensure(_Buf *buf, Py_ssize_t need) except -1:
    cdef int64_t *grown
    if need <= buf.cap:
        return 0
    while buf.cap < need:
        buf.cap <<= 1
    grown = <int64_t *> realloc(buf.data, buf.cap * sizeof(int64_t))
    if grown == NULL:
        raise MemoryError()
    buf.data = grown
    return 0


cdef Py_ssize_t _generate(bitgen_t *rng, const double *cdf, Py_ssize_t table,
                          Py_ssize_t budget, _Buf *deg, _Buf *stack,
                          int64_t *max_out) except -2:
    """Fill deg.data with one preorder degree sequence.

    Returns the vertex count, or -1 if the budget was exceeded.  max_out
    receives the maximal out-degree of the generated tree.
    """
    cdef Py_ssize_t count = 0, depth = 0
    cdef Py_ssize_t k
    cdef int64_t best = 0
    stack.data[0] = 1
    depth = 1
    while depth > 0:
        if stack.data[depth - 1] == 1:
            depth -= 1
        else:
            stack.data[depth - 1] -= 1
        if count >= budget:
            return -1
        k = _upper_bound(cdf, table, rng.next_double(rng.state))
        _ensure(deg, count + 1)
        deg.data[count] = k
        count += 1
        if k > best:
            best = k
        if k > 0:
            _ensure(stack, depth + 1)
            stack.data[depth] = k
            depth += 1
    max_out[0] = best
    return count


cdef object _to_array(_Buf *deg, Py_ssize_t count):
    arr = np.empty(count, dtype=np.int64)
    cdef int64_t[::1] view = arr
    if count > 0:
        memcpy(&view[0], deg.data, count * sizeof(int64_t))
    return arr


cdef int _init_bufs(_Buf *deg, _Buf *stack) except -1:
    deg.cap = 1024
    deg.data = <int64_t *> malloc(deg.cap * sizeof(int64_t))
    stack.cap = 256
    stack.data = <int64_t *> malloc(stack.cap * sizeof(int64_t))
    if deg.data == NULL or stack.data == NULL:
        free(deg.data)
        free(stack.data)
        raise MemoryError()
    return 0


def generate_degrees(object generator, double[::1] cdf, Py_ssize_t budget):
    """Sample one tree; returns (int64 degree array or None, status)."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef _Buf deg, stack
    cdef int64_t best = 0
    cdef Py_ssize_t count
    _init_bufs(&deg, &stack)
    try:
        count = _generate(rng, &cdf[0], cdf.shape[0], budget, &deg, &stack, &best)
        if count < 0:
            return None, STATUS_BUDGET
        return _to_array(&deg, count), STATUS_OK
    finally:
        free(deg.data)
        free(stack.data)


def generate_eq(object generator, double[::1] cdf, int64_t target,
                Py_ssize_t budget, Py_ssize_t max_trials):
    """Rejection-sample a tree with maximal out-degree exactly target."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef _Buf deg, stack
    cdef int64_t best = 0
    cdef Py_ssize_t count, trials = 0
    _init_bufs(&deg, &stack)
    try:
        while trials < max_trials:
            trials += 1
            count = _generate(rng, &cdf[0], cdf.shape[0], budget, &deg, &stack, &best)
            if count < 0:
                return None, trials, STATUS_BUDGET
            if best == target:
                return _to_array(&deg, count), trials, STATUS_OK
        return None, trials, STATUS_TRIALS
    finally:
        free(deg.data)
        free(stack.data)


def generate_depth_truncated(object generator, double[::1] cdf,
                             Py_ssize_t max_depth, Py_ssize_t budget):
    """Sample a tree expanded only above depth max_depth (-1 marks frontier)."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef _Buf deg, stack, depths
    cdef Py_ssize_t count = 0, top = 0, k, d
    _init_bufs(&deg, &stack)
    depths.cap = 256
    depths.data = <int64_t *> malloc(depths.cap * sizeof(int64_t))
    if depths.data == NULL:
        free(deg.data)
        free(stack.data)
        raise MemoryError()
    try:
        stack.data[0] = 1
        depths.data[0] = 0
        top = 1
        while top > 0:
            d = depths.data[top - 1]
            if stack.data[top - 1] == 1:
                top -= 1
            else:
                stack.data[top - 1] -= 1
            if count >= budget:
                return None, STATUS_BUDGET
            if d >= max_depth:
                _ensure(&deg, count + 1)
                deg.data[count] = -1
                count += 1
                continue
            k = _upper_bound(&cdf[0], cdf.shape[0], rng.next_double(rng.state))
            _ensure(&deg, count + 1)
            deg.data[count] = k
            count += 1
            if k > 0:
                _ensure(&stack, top + 1)
                _ensure(&depths, top + 1)
                stack.data[top] = k
                depths.data[top] = d + 1
                top += 1
        return _to_array(&deg, count), STATUS_OK
    finally:
        free(deg.data)
        free(stack.data)
        free(depths.data)
