# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Semantics must match ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp

ctypedef cnp.int64_t i64


def propagate_unit(const i64[::1] indptr, const i64[::1] indices, const double[::1] data,
                   Py_ssize_t start, Py_ssize_t steps):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cur_arr = np.zeros(n, dtype=np.float64)
    nxt_arr = np.zeros(n, dtype=np.float64)
    supp_arr = np.empty(n, dtype=np.int64)
    new_arr = np.empty(n, dtype=np.int64)
    mark_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] cur = cur_arr
    cdef double[::1] nxt = nxt_arr
    cdef i64[::1] supp = supp_arr
    cdef i64[::1] newsupp = new_arr
    cdef unsigned char[::1] mark = mark_arr
    cdef double[::1] tmpd
    cdef i64[::1] tmpi
    cdef Py_ssize_t nsupp = 1, nnew, a, k, t
    cdef i64 i, j
    cdef double w
    cur[start] = 1.0
    supp[0] = start
    with nogil:
        for t in range(steps):
            nnew = 0
            for a in range(nsupp):
                i = supp[a]
                w = cur[i]
                cur[i] = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    j = indices[k]
                    if mark[j] == 0:
                        mark[j] = 1
                        newsupp[nnew] = j
                        nnew += 1
                    nxt[j] += w * data[k]
            for a in range(nnew):
                mark[newsupp[a]] = 0
            tmpd = cur
            cur = nxt
            nxt = tmpd
            tmpi = supp
            supp = newsupp
            newsupp = tmpi
            nsupp = nnew
    return np.asarray(cur).copy()


def simulate_block(const i64[::1] indptr, const i64[::1] indices, const double[::1] cdf,
                   i64[::1] states, const double[:, ::1] uniforms, i64 error_index):
    cdef Py_ssize_t n = states.shape[0]
    cdef Py_ssize_t steps = uniforms.shape[1]
    cdef Py_ssize_t r, t, k, hi
    cdef i64 s
    cdef double u
    with nogil:
        for r in range(n):
            s = states[r]
            for t in range(steps):
                if s == error_index:
                    break
                k = indptr[s]
                hi = indptr[s + 1] - 1
                u = uniforms[r, t]
                while k < hi and u >= cdf[k]:
                    k += 1
                s = indices[k]
            states[r] = s
