# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels.

Same semantics and draw order as ``brwre._pykernels``; variates come from
numpy's own C distribution routines on the caller's bit generators, so the
two backends produce identical output for identical generator states.
"""
import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, exp, log1p, rint, INFINITY
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    binomial_t, random_binomial, random_multinomial,
)

cnp.import_array()

cdef double LOGE2 = 0.693147180559945309417232121458176568

cdef int64_t CENSORED = -1


cdef bitgen_t* _bitgen(object rng) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(rng.bit_generator.capsule, "BitGenerator")


cdef inline double _logaddexp(double x, double y) noexcept nogil:
    # numpy's npy_logaddexp
    cdef double tmp
    if x == y:
        return x + LOGE2
    tmp = x - y
    if tmp > 0:
        return x + log1p(exp(-tmp))
    return y + log1p(exp(tmp))


cdef inline int64_t _total_offspring(bitgen_t* bg, int64_t parents, double* probs,
                                     int64_t* buf, Py_ssize_t d,
                                     binomial_t* binom) noexcept nogil:
    cdef Py_ssize_t k
    cdef int64_t total = 0
    memset(buf, 0, d * sizeof(int64_t))
    random_multinomial(bg, parents, buf, probs, d, binom)
    for k in range(d):
        total += k * buf[k]
    return total


def stayer_gw(probs, double omega, Py_ssize_t size, int64_t cap, int64_t bound,
              rng, bint record_jumps):
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t d = p.shape[0]
    cdef bitgen_t* bg = _bitgen(rng)
    cdef binomial_t binom
    binom.has_binomial = 0

    times_arr = np.full(size, CENSORED, dtype=np.int64)
    cdef int64_t[::1] times = times_arr
    cdef int64_t[::1] w = np.ones(size, dtype=np.int64)
    cdef int64_t[::1] alive = np.arange(size, dtype=np.int64)
    cdef int64_t[::1] total = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] buf = np.zeros(d, dtype=np.int64)
    cdef Py_ssize_t n_alive = size, i, n_next, n_rec = 0, cap_rec = 0
    cdef int64_t g = 0, idx, stay, jumps
    cdef int64_t[::1] r_root, r_gen, r_cnt

    if record_jumps:
        cap_rec = max(16, 2 * size)
        roots_arr = np.empty(cap_rec, dtype=np.int64)
        gens_arr = np.empty(cap_rec, dtype=np.int64)
        cnts_arr = np.empty(cap_rec, dtype=np.int64)
        r_root, r_gen, r_cnt = roots_arr, gens_arr, cnts_arr

    with rng.bit_generator.lock:
        while n_alive > 0 and g < cap:
            g += 1
            with nogil:
                for i in range(n_alive):
                    total[i] = _total_offspring(bg, w[alive[i]], &p[0], &buf[0], d, &binom)
            if record_jumps and n_rec + n_alive > cap_rec:
                cap_rec = 2 * (n_rec + n_alive)
                roots_arr = np.resize(roots_arr, cap_rec)
                gens_arr = np.resize(gens_arr, cap_rec)
                cnts_arr = np.resize(cnts_arr, cap_rec)
                r_root, r_gen, r_cnt = roots_arr, gens_arr, cnts_arr
            with nogil:
                n_next = 0
                for i in range(n_alive):
                    idx = alive[i]
                    stay = random_binomial(bg, omega, total[i], &binom)
                    if record_jumps:
                        jumps = total[i] - stay
                        if jumps > 0:
                            r_root[n_rec] = idx
                            r_gen[n_rec] = g
                            r_cnt[n_rec] = jumps
                            n_rec += 1
                    w[idx] = stay
                    if stay == 0:
                        times[idx] = g
                    elif stay <= bound:
                        alive[n_next] = idx
                        n_next += 1
                n_alive = n_next

    if record_jumps:
        return times_arr, roots_arr[:n_rec].copy(), gens_arr[:n_rec].copy(), cnts_arr[:n_rec].copy()
    empty = np.empty(0, dtype=np.int64)
    return times_arr, empty, empty.copy(), empty.copy()


def run_counts(probs, omegas, log_stay, log_move, Py_ssize_t n_steps, int64_t threshold,
               site_rngs, record_steps, bint prune):
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef double[::1] om = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef double[::1] ls = np.ascontiguousarray(log_stay, dtype=np.float64)
    cdef double[::1] lmv = np.ascontiguousarray(log_move, dtype=np.float64)
    cdef Py_ssize_t d = p.shape[0]
    cdef Py_ssize_t size = n_steps + 2
    cdef Py_ssize_t n_rngs = len(site_rngs)
    if n_rngs < n_steps + 1 or om.shape[0] < n_steps + 1:
        raise ValueError("need a generator and an environment value for every site 0..n_steps")

    cnt_arr = np.zeros(size, dtype=np.int64)
    sat_arr = np.zeros(size, dtype=np.uint8)
    lm_arr = np.zeros(size, dtype=np.float64)
    cdef int64_t[::1] cnt = cnt_arr
    cdef unsigned char[::1] sat = sat_arr
    cdef double[::1] lm = lm_arr
    minima_arr = np.zeros(n_steps + 1, dtype=np.int64)
    cdef int64_t[::1] minima = minima_arr
    cdef unsigned char[::1] rec = np.zeros(n_steps + 1, dtype=np.uint8)
    cdef int64_t[::1] buf = np.zeros(d, dtype=np.int64)
    cdef binomial_t binom
    binom.has_binomial = 0

    cdef bitgen_t** bgs = <bitgen_t**> malloc(n_rngs * sizeof(bitgen_t*))
    if bgs == NULL:
        raise MemoryError()
    cdef Py_ssize_t j
    try:
        for j in range(n_rngs):
            bgs[j] = _bitgen(site_rngs[j])
    except BaseException:
        free(bgs)
        raise

    for s in record_steps:
        if 0 <= s <= n_steps:
            rec[s] = 1

    cdef Py_ssize_t lo = 0, hi = 0, t, n_sat, cand
    cdef double log_half = log(threshold / 2.0)
    cdef double floor_val, slope
    cdef int64_t c, tot, stay_e, move_e, carry_e, new_e
    cdef double stay_l, move_l, carry_l, la, lb, merged
    cdef bint stay_s, move_s, carry_s
    cdef int64_t prunes = 0, max_sat = 0, demotions = 0
    cdef int64_t remaining
    snapshots = []
    cnt[0] = 1

    if rec[0]:
        snapshots.append((0, lo, cnt_arr[lo:hi + 1].copy(), sat_arr[lo:hi + 1].astype(bool),
                          lm_arr[lo:hi + 1].copy()))
    try:
        for t in range(1, n_steps + 1):
            with nogil:
                carry_e = 0
                carry_s = False
                carry_l = 0.0
                for j in range(lo, hi + 2):
                    stay_e = 0
                    move_e = 0
                    stay_s = False
                    move_s = False
                    stay_l = 0.0
                    move_l = 0.0
                    if j <= hi:
                        if sat[j]:
                            stay_s = True
                            move_s = True
                            stay_l = lm[j] + ls[j]
                            move_l = lm[j] + lmv[j]
                        elif cnt[j] > 0:
                            c = cnt[j]
                            tot = _total_offspring(bgs[j], c, &p[0], &buf[0], d, &binom)
                            stay_e = random_binomial(bgs[j], om[j], tot, &binom)
                            move_e = tot - stay_e
                    # combine stayers at j with movers arriving from j - 1
                    if not stay_s and not carry_s:
                        new_e = stay_e + carry_e
                        if new_e >= threshold:
                            sat[j] = 1
                            lm[j] = log(<double> new_e)
                            cnt[j] = 0
                        else:
                            sat[j] = 0
                            lm[j] = 0.0
                            cnt[j] = new_e
                    else:
                        if stay_s:
                            la = stay_l
                        elif stay_e > 0:
                            la = log(<double> stay_e)
                        else:
                            la = -INFINITY
                        if carry_s:
                            lb = carry_l
                        elif carry_e > 0:
                            lb = log(<double> carry_e)
                        else:
                            lb = -INFINITY
                        merged = _logaddexp(la, lb)
                        if merged < log_half:
                            sat[j] = 0
                            lm[j] = 0.0
                            cnt[j] = <int64_t> rint(exp(merged))
                            demotions += 1
                        else:
                            sat[j] = 1
                            lm[j] = merged
                            cnt[j] = 0
                    carry_e = move_e
                    carry_s = move_s
                    carry_l = move_l

                if sat[hi + 1] or cnt[hi + 1] > 0:
                    hi += 1
                while lo <= hi and not sat[lo] and cnt[lo] == 0:
                    lo += 1

            if lo > hi:
                raise RuntimeError("population vanished; offspring law must have p_0 = 0")

            with nogil:
                if prune:
                    remaining = n_steps - t
                    for j in range(lo, hi):
                        if sat[j]:
                            slope = ls[j] if ls[j] < 0.0 else 0.0
                            floor_val = lm[j] + remaining * slope
                            if floor_val >= log_half + 1e-9:
                                for cand in range(j + 1, hi + 1):
                                    cnt[cand] = 0
                                    sat[cand] = 0
                                    lm[cand] = 0.0
                                hi = j
                                prunes += 1
                                break
                n_sat = 0
                for j in range(lo, hi + 1):
                    n_sat += sat[j]
                if n_sat > max_sat:
                    max_sat = n_sat
                minima[t] = lo

            if rec[t]:
                snapshots.append((t, lo, cnt_arr[lo:hi + 1].copy(), sat_arr[lo:hi + 1].astype(bool),
                                  lm_arr[lo:hi + 1].copy()))
    finally:
        free(bgs)

    diag = {"prunes": int(prunes), "max_saturated": int(max_sat), "demotions": int(demotions)}
    return minima_arr, snapshots, diag
