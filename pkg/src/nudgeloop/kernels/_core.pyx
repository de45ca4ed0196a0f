# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: DTW grid DP and LSTDQ system accumulation.

Mirrors kernels/pure.py exactly; tests assert equivalence on random inputs.
"""

from libc.math cimport sqrt, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def dtw_cost(a, b):
    """Minimal cumulative alignment cost, Euclidean local distance."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] aa = np.ascontiguousarray(
        np.atleast_2d(np.asarray(a, dtype=np.float64)).reshape(len(a), -1))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bb = np.ascontiguousarray(
        np.atleast_2d(np.asarray(b, dtype=np.float64)).reshape(len(b), -1))
    cdef Py_ssize_t n = aa.shape[0], m = bb.shape[0], d = aa.shape[1]
    if n == 0 or m == 0:
        raise ValueError("dtw_cost requires nonempty sequences")
    if bb.shape[1] != d:
        raise ValueError("sequences must share element dimension")

    cdef cnp.ndarray[cnp.float64_t, ndim=1] prev_arr = np.empty(m + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cur_arr = np.empty(m + 1)
    cdef double[:] prev = prev_arr
    cdef double[:] cur = cur_arr
    cdef double[:, :] av = aa
    cdef double[:, :] bv = bb
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, local, best

    prev[0] = 0.0
    for j in range(1, m + 1):
        prev[j] = INFINITY
    for i in range(1, n + 1):
        cur[0] = INFINITY
        for j in range(1, m + 1):
            acc = 0.0
            for k in range(d):
                diff = av[i - 1, k] - bv[j - 1, k]
                acc += diff * diff
            local = sqrt(acc)
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = local + best
        prev, cur = cur, prev
    return float(prev[m])


def lstdq_accumulate(patterns, actions, next_patterns, next_actions, rewards,
                     double gamma, Py_ssize_t dim, Py_ssize_t block_size):
    """Accumulate A = sum phi (phi - gamma phi')^T and b = sum phi r."""
    cdef cnp.ndarray[cnp.int64_t, ndim=2] p = np.ascontiguousarray(patterns, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] pn = np.ascontiguousarray(next_patterns, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] act = np.ascontiguousarray(actions, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nact = np.ascontiguousarray(next_actions, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r = np.ascontiguousarray(rewards, dtype=np.float64)

    cdef Py_ssize_t n = p.shape[0], f = p.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A_arr = np.zeros((dim, dim))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b_arr = np.zeros(dim)
    cdef double[:, :] A = A_arr
    cdef double[:] b = b_arr
    cdef long[:, :] pv = p
    cdef long[:, :] pnv = pn
    cdef long[:] av = act
    cdef long[:] nav = nact
    cdef double[:] rv = r
    cdef Py_ssize_t e, i, j, row, off, noff
    cdef double rew

    for e in range(n):
        off = av[e] * block_size
        noff = nav[e] * block_size
        rew = rv[e]
        for i in range(f):
            row = off + pv[e, i]
            b[row] += rew
            for j in range(f):
                A[row, off + pv[e, j]] += 1.0
                A[row, noff + pnv[e, j]] -= gamma
    return A_arr, b_arr
