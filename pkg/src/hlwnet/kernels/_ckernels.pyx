# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.  Same contracts as ``_pykernels``; keep the two in step."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, INFINITY, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"

ctypedef cnp.int64_t i64

cdef enum:
    MODE_CAPPED = 1
    MAX_TERMS = 8

cdef double IMPROVE_TOL = 1e-12
cdef double NEED_CAP = 2.0


cdef inline double _need(double r, double c) nogil:
    if c <= 0.0:
        return NEED_CAP
    cdef double v = r / c
    return v if v < NEED_CAP else NEED_CAP


cdef inline double _trap(double x, double a, double b, double c, double d) nogil:
    if x < a or x > d:
        return 0.0
    cdef double mu = 1.0, v
    if b > a:
        v = (x - a) / (b - a)
        if v < mu:
            mu = v
    if d > c:
        v = (d - x) / (d - c)
        if v < mu:
            mu = v
    if mu < 0.0:
        return 0.0
    return mu if mu < 1.0 else 1.0


cdef double _fuzzy(const double* x, const double[:, ::1] bounds, const double[:, :, ::1] mf,
                   const i64[:, ::1] ante, const i64[:, ::1] neg, const i64[::1] cons,
                   const double[:, ::1] out_mu, const double[::1] grid) nogil:
    cdef Py_ssize_t n_in = bounds.shape[0], n_rules = ante.shape[0]
    cdef Py_ssize_t n_out = out_mu.shape[0], n_grid = grid.shape[0]
    cdef double xc[16]
    cdef double levels[MAX_TERMS]
    cdef Py_ssize_t k, r, t, g
    cdef double s, mu, v, agg, num = 0.0, den = 0.0
    for k in range(n_in):
        v = x[k]
        if v < bounds[k, 0]:
            v = bounds[k, 0]
        if v > bounds[k, 1]:
            v = bounds[k, 1]
        xc[k] = v
    for t in range(n_out):
        levels[t] = 0.0
    for r in range(n_rules):
        s = 1.0
        for k in range(n_in):
            t = ante[r, k]
            if t < 0:
                continue
            mu = _trap(xc[k], mf[k, t, 0], mf[k, t, 1], mf[k, t, 2], mf[k, t, 3])
            if neg[r, k]:
                mu = 1.0 - mu
            if mu < s:
                s = mu
        if s > levels[cons[r]]:
            levels[cons[r]] = s
    for g in range(n_grid):
        agg = 0.0
        for t in range(n_out):
            v = out_mu[t, g]
            if levels[t] < v:
                v = levels[t]
            if v > agg:
                agg = v
        num += agg * grid[g]
        den += agg
    if den == 0.0:
        return 0.5
    return num / den


def fuzzy_score(x, const double[:, ::1] bounds, const double[:, :, ::1] mf,
                const i64[:, ::1] ante, const i64[:, ::1] neg, const i64[::1] cons,
                const double[:, ::1] out_mu, const double[::1] grid):
    cdef double buf[16]
    cdef Py_ssize_t k
    if bounds.shape[0] > 16 or out_mu.shape[0] > MAX_TERMS:
        raise ValueError("rule table too large for the compiled kernel")
    for k in range(bounds.shape[0]):
        buf[k] = float(x[k])
    return _fuzzy(buf, bounds, mf, ante, neg, cons, out_mu, grid)


cdef inline double _share_satisfaction(double c, double r, i64 count, double load, int mode) nogil:
    if c <= 0.0:
        return 0.0
    if mode == MODE_CAPPED and load <= 1.0:
        return 1.0
    cdef double s = c / count / r
    return s if s < 1.0 else 1.0


def pf_value(const i64[::1] labels, const double[:, ::1] C, const double[::1] R, int mode):
    cdef Py_ssize_t n_aps = C.shape[0], n_users = C.shape[1], i, j
    cdef i64[::1] counts = np.zeros(n_aps, dtype=np.int64)
    cdef double[::1] load = np.zeros(n_aps)
    cdef double total = 0.0, s
    for j in range(n_users):
        i = labels[j]
        counts[i] += 1
        load[i] += _need(R[j], C[i, j])
    for j in range(n_users):
        i = labels[j]
        s = _share_satisfaction(C[i, j], R[j], counts[i], load[i], mode)
        total += log(s) if s > 0 else -INFINITY
    return total


cdef i64 _wifi_index(const i64[::1] is_wifi):
    cdef Py_ssize_t i
    for i in range(is_wifi.shape[0]):
        if is_wifi[i]:
            return i
    return -1


cdef void _best_lifi(const double[:, ::1] snr_db, const i64[::1] is_wifi, i64[::1] out) nogil:
    cdef Py_ssize_t n_aps = snr_db.shape[0], n_users = snr_db.shape[1], i, j
    cdef double best
    for j in range(n_users):
        best = -INFINITY
        out[j] = -1
        for i in range(n_aps):
            if is_wifi[i]:
                continue
            if snr_db[i, j] > best:
                best = snr_db[i, j]
                out[j] = i


cdef void _score_inputs(double* x, Py_ssize_t j, i64 ref, i64 wifi, const double[::1] R,
                        const double[:, ::1] snr_db, const double[::1] load,
                        const double[:, ::1] bounds) nogil:
    cdef double v
    x[0] = R[j]
    x[1] = snr_db[wifi, j] if wifi >= 0 else bounds[1, 0]
    x[2] = snr_db[ref, j] if ref >= 0 else bounds[2, 0]
    if wifi >= 0:
        v = 1.0 - load[wifi]
        x[3] = v if v > 0.0 else 0.0
    else:
        x[3] = 0.0
    if ref >= 0:
        v = 1.0 - load[ref]
        x[4] = v if v > 0.0 else 0.0
    else:
        x[4] = 0.0


def flopt(const double[:, ::1] C, const double[::1] R, const double[:, ::1] snr_db,
          const i64[::1] is_wifi, const double[:, ::1] bounds, const double[:, :, ::1] mf,
          const i64[:, ::1] ante, const i64[:, ::1] neg, const i64[::1] cons,
          const double[:, ::1] out_mu, const double[::1] grid):
    cdef Py_ssize_t n_aps = C.shape[0], n_users = C.shape[1], i, j, step
    cdef i64 wifi = _wifi_index(is_wifi), cand, ref, pick_j, pick_i
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels_arr = np.full(n_users, -1, dtype=np.int64)
    cdef i64[::1] labels = labels_arr
    cdef i64[::1] best_lifi = np.empty(n_users, dtype=np.int64)
    cdef i64[::1] counts = np.zeros(n_aps, dtype=np.int64)
    cdef double[::1] load = np.zeros(n_aps)
    cdef double x[5]
    cdef double best_score, cand_s, share, s, score
    _best_lifi(snr_db, is_wifi, best_lifi)
    for step in range(n_users):
        best_score = -INFINITY
        pick_j = -1
        pick_i = -1
        for j in range(n_users):
            if labels[j] >= 0:
                continue
            cand = -1
            cand_s = -INFINITY
            for i in range(n_aps):
                share = C[i, j] / (counts[i] + 1)
                s = share / R[j]
                if s > 1.0:
                    s = 1.0
                if s > cand_s:  # ties keep the lowest AP index
                    cand = i
                    cand_s = s
            ref = best_lifi[j] if cand == wifi else cand
            _score_inputs(x, j, ref, wifi, R, snr_db, load, bounds)
            score = _fuzzy(x, bounds, mf, ante, neg, cons, out_mu, grid)
            if cand != wifi:
                score = 1.0 - score
            if score > best_score:
                best_score = score
                pick_j = j
                pick_i = cand
        labels[pick_j] = pick_i
        counts[pick_i] += 1
        load[pick_i] += _need(R[pick_j], C[pick_i, pick_j])
    return labels_arr


def fl(const double[:, ::1] C, const double[::1] R, const double[:, ::1] snr_db,
       const i64[::1] is_wifi, double threshold, const double[:, ::1] bounds,
       const double[:, :, ::1] mf, const i64[:, ::1] ante, const i64[:, ::1] neg,
       const i64[::1] cons, const double[:, ::1] out_mu, const double[::1] grid):
    cdef Py_ssize_t n_aps = C.shape[0], n_users = C.shape[1], i, j, k
    cdef i64 wifi = _wifi_index(is_wifi), n_lifi = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels_arr = np.empty(n_users, dtype=np.int64)
    cdef i64[::1] labels = labels_arr
    cdef i64[::1] best_lifi = np.empty(n_users, dtype=np.int64)
    cdef double[::1] load = np.zeros(n_aps)
    cdef double[::1] first = np.empty(n_users)
    cdef double x[5]
    _best_lifi(snr_db, is_wifi, best_lifi)
    for i in range(n_aps):
        if not is_wifi[i]:
            n_lifi += 1
    for j in range(n_users):
        labels[j] = best_lifi[j]
        i = best_lifi[j]
        if i >= 0:
            load[i] += _need(R[j], C[i, j])
    if wifi < 0:
        return labels_arr
    if n_lifi == 0:
        labels_arr[:] = wifi
        return labels_arr
    for j in range(n_users):
        _score_inputs(x, j, best_lifi[j], wifi, R, snr_db, load, bounds)
        first[j] = _fuzzy(x, bounds, mf, ante, neg, cons, out_mu, grid)
    cdef i64[::1] order = np.lexsort((np.arange(n_users), -np.asarray(first))).astype(np.int64)
    for k in range(n_users):
        j = order[k]
        _score_inputs(x, j, best_lifi[j], wifi, R, snr_db, load, bounds)
        if _fuzzy(x, bounds, mf, ante, neg, cons, out_mu, grid) < threshold:
            break
        labels[j] = wifi
        load[wifi] += _need(R[j], C[wifi, j])
        i = best_lifi[j]
        if i >= 0:
            load[i] -= _need(R[j], C[i, j])
    return labels_arr


cdef inline cnp.uint64_t _splitmix_next(cnp.uint64_t* state) nogil:
    state[0] += <cnp.uint64_t>0x9E3779B97F4A7C15ULL
    cdef cnp.uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <cnp.uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <cnp.uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


def gt(labels_in, const double[:, ::1] C, const double[::1] R, cnp.uint64_t seed,
       Py_ssize_t max_sweeps, bint use_log, int mode):
    cdef Py_ssize_t n_aps = C.shape[0], n_users = C.shape[1], i, j, k, q, sweep = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels_arr = np.array(labels_in, dtype=np.int64)
    cdef i64[::1] labels = labels_arr
    cdef i64* counts = <i64*>malloc(n_aps * sizeof(i64))
    cdef double* load = <double*>malloc(n_aps * sizeof(double))
    cdef i64* order = <i64*>malloc((n_users + 1) * sizeof(i64))
    if counts == NULL or load == NULL or order == NULL:
        free(counts)
        free(load)
        free(order)
        raise MemoryError()
    cdef cnp.uint64_t state = seed
    cdef i64 moves = 0, cur, best_i, tmp
    cdef bint moved = True
    cdef double best_p, cur_p, p, s, extra
    with nogil:
        for sweep in range(max_sweeps):
            for q in range(n_users):
                order[q] = q
            for q in range(n_users - 1, 0, -1):
                k = <Py_ssize_t>(_splitmix_next(&state) % <cnp.uint64_t>(q + 1))
                tmp = order[q]
                order[q] = order[k]
                order[k] = tmp
            moved = False
            for q in range(n_users):
                j = order[q]
                for i in range(n_aps):
                    counts[i] = 0
                    load[i] = 0.0
                for k in range(n_users):
                    if k == j:
                        continue
                    i = labels[k]
                    counts[i] += 1
                    load[i] += _need(R[k], C[i, k])
                cur = labels[j]
                best_i = -1
                best_p = -INFINITY
                cur_p = -INFINITY
                for i in range(n_aps):
                    extra = _need(R[j], C[i, j])
                    s = _share_satisfaction(C[i, j], R[j], counts[i] + 1, load[i] + extra, mode)
                    if use_log:
                        p = log(s) if s > 0 else -INFINITY
                    else:
                        p = s
                    if i == cur:
                        cur_p = p
                    if p > best_p:
                        best_i = i
                        best_p = p
                if best_i != cur and best_p > cur_p + IMPROVE_TOL:
                    labels[j] = best_i
                    moves += 1
                    moved = True
            if not moved:
                break
    free(counts)
    free(load)
    free(order)
    if not moved:
        return labels_arr, sweep + 1, moves, True
    return labels_arr, max_sweeps, moves, False


cdef double _assignment_value(const i64* digits, const double[:, ::1] C, const double[::1] R,
                              const double[:, ::1] need, i64* counts, double* load,
                              Py_ssize_t n_aps, Py_ssize_t n_users, int mode) nogil:
    cdef Py_ssize_t i, j
    cdef double total = 0.0, s, c
    for i in range(n_aps):
        counts[i] = 0
        load[i] = 0.0
    for j in range(n_users):
        i = digits[j]
        counts[i] += 1
        load[i] += need[i, j]
    for j in range(n_users):
        i = digits[j]
        c = C[i, j]
        if c <= 0.0:
            s = 0.0
        elif mode == MODE_CAPPED and load[i] <= 1.0:
            s = 1.0
        else:
            s = c / counts[i] / R[j]
            if s > 1.0:
                s = 1.0
        total += log(s) if s > 0 else -INFINITY
    return total


cdef inline bint _advance(i64* digits, Py_ssize_t n_users, i64 base) nogil:
    cdef Py_ssize_t j = n_users - 1
    while j >= 0:
        digits[j] += 1
        if digits[j] < base:
            return True
        digits[j] = 0
        j -= 1
    return False


def exhaustive(const double[:, ::1] C, const double[::1] R, int mode):
    cdef Py_ssize_t n_aps = C.shape[0], n_users = C.shape[1], i, j
    cdef cnp.ndarray[cnp.int64_t, ndim=1] digits_arr = np.zeros(n_users, dtype=np.int64)
    cdef i64[::1] digits = digits_arr
    cdef i64[::1] counts = np.zeros(n_aps, dtype=np.int64)
    cdef double[::1] load = np.zeros(n_aps)
    cdef double[:, ::1] need = np.empty((n_aps, n_users))
    cdef double best = -INFINITY, v, tol
    cdef bint more
    for i in range(n_aps):
        for j in range(n_users):
            need[i, j] = _need(R[j], C[i, j])
    with nogil:
        more = True
        while more:
            v = _assignment_value(&digits[0], C, R, need, &counts[0], &load[0], n_aps, n_users, mode)
            if v > best:
                best = v
            more = _advance(&digits[0], n_users, n_aps)
        tol = 0.0
        if best > -INFINITY:
            tol = IMPROVE_TOL * (fabs(best) if fabs(best) > 1.0 else 1.0)
        for j in range(n_users):
            digits[j] = 0
        more = True
        while more:
            v = _assignment_value(&digits[0], C, R, need, &counts[0], &load[0], n_aps, n_users, mode)
            if v >= best - tol:
                break
            more = _advance(&digits[0], n_users, n_aps)
    return digits_arr, best
