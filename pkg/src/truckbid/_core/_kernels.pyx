# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: KG grid scan and max-weight assignment with duals.

Mirrors truckbid._core.reference; the two are tested for agreement.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF BIG = 1e18

INFEASIBLE = -1e18


def kg_grid_values(q, fc, fs, prices):
    """Expected revenue and knowledge-gradient value at every grid price."""
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] fcv = np.ascontiguousarray(fc, dtype=np.float64)
    cdef double[:, ::1] fsv = np.ascontiguousarray(fs, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(prices, dtype=np.float64)
    cdef Py_ssize_t K = fcv.shape[0]
    cdef Py_ssize_t M = fcv.shape[1]
    rev_arr = np.empty(M, dtype=np.float64)
    nu_arr = np.empty(M, dtype=np.float64)
    joint_arr = np.empty((K, M), dtype=np.float64)
    w_arr = np.empty(K, dtype=np.float64)
    cdef double[::1] rev = rev_arr
    cdef double[::1] nu = nu_arr
    cdef double[:, ::1] joint = joint_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t k, m, j, oc, os
    cdef double s, base, acc, best, val, pc, ps

    for k in range(K):
        for m in range(M):
            joint[k, m] = fcv[k, m] * fsv[k, m]
    base = -BIG
    for m in range(M):
        s = 0.0
        for k in range(K):
            s += qv[k] * joint[k, m]
        rev[m] = pv[m] * s
        if rev[m] > base:
            base = rev[m]

    for j in range(M):
        acc = 0.0
        for oc in range(2):
            for os in range(2):
                for k in range(K):
                    pc = fcv[k, j] if oc == 0 else 1.0 - fcv[k, j]
                    ps = fsv[k, j] if os == 0 else 1.0 - fsv[k, j]
                    w[k] = qv[k] * pc * ps
                best = -BIG
                for m in range(M):
                    s = 0.0
                    for k in range(K):
                        s += w[k] * joint[k, m]
                    val = pv[m] * s
                    if val > best:
                        best = val
                acc += best
        nu[j] = acc - base
    return rev_arr, nu_arr


def solve_assignment(weights, hold):
    """Max-weight assignment with a per-row outside option; see reference."""
    w_in = np.ascontiguousarray(weights, dtype=np.float64)
    h_in = np.ascontiguousarray(hold, dtype=np.float64)
    cdef double[:, ::1] wv = w_in
    cdef double[::1] hv = h_in
    cdef Py_ssize_t n = wv.shape[0]
    cdef Py_ssize_t s = wv.shape[1]
    cdef Py_ssize_t m = s + n
    cdef Py_ssize_t NONE = n

    cost_arr = np.full((n, m), BIG, dtype=np.float64)
    cdef double[:, ::1] cost = cost_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(s):
            if wv[i, j] > INFEASIBLE:
                cost[i, j] = -wv[i, j]
        cost[i, s + i] = -hv[i]

    u_arr = np.zeros(n, dtype=np.float64)
    v_arr = np.zeros(m + 1, dtype=np.float64)
    p_arr = np.full(m + 1, NONE, dtype=np.intp)
    way_arr = np.full(m, m, dtype=np.intp)
    minv_arr = np.empty(m, dtype=np.float64)
    used_arr = np.zeros(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t[::1] p = p_arr
    cdef Py_ssize_t[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef cnp.uint8_t[::1] used = used_arr
    cdef Py_ssize_t j0, j1, i0
    cdef double delta, cur

    for i in range(n):
        p[m] = i
        j0 = m
        for j in range(m):
            minv[j] = BIG
        for j in range(m + 1):
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = BIG
            j1 = -1
            for j in range(m):
                if not used[j]:
                    cur = cost[i0, j] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            u[i] += delta
            v[m] -= delta
            j0 = j1
            if p[j0] == NONE:
                break
        while j0 != m:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    assign_arr = np.full(n, -1, dtype=np.intp)
    col_duals_arr = np.zeros(s, dtype=np.float64)
    cdef Py_ssize_t[::1] assign = assign_arr
    cdef double[::1] col_duals = col_duals_arr
    cdef double objective = 0.0
    for j in range(s):
        if p[j] != NONE:
            assign[p[j]] = j
            col_duals[j] = -v[j]
    for i in range(n):
        if assign[i] >= 0:
            objective += wv[i, assign[i]]
        else:
            objective += hv[i]
    return assign_arr, col_duals_arr, float(objective)
