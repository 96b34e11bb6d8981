# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled walker kernel.

Mirrors _walk_py.walk step for step: same SplitMix64 stream consumption,
same formulas, inner products accumulated in ascending index order, so
both backends return bitwise-identical arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, log, pow, sqrt

cnp.import_array()

DEF PI = 3.141592653589793

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t cocylim_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline double cocylim_next_uniform(uint64_t *state) {
        *state += 0x9E3779B97F4A7C15ULL;
        uint64_t z = cocylim_mix64(*state);
        return (double)(z >> 11) * 1.1102230246251565e-16;
    }
    """
    ctypedef unsigned long long uint64_t
    uint64_t cocylim_mix64(uint64_t z) nogil
    double cocylim_next_uniform(uint64_t *state) nogil


DEF RENORM_STEPS = 20
RENORM_EVERY = RENORM_STEPS


def walk(chain, u, long n_steps, long trials, object seed, checkpoints,
         double tilt_t=0.0, guide=None, long grid_n=0, grid_points=None,
         bint track_matrix=False):
    """Compiled counterpart of cocylim.kernels._walk_py.walk."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] init_cum = np.ascontiguousarray(
        chain.init_cum, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] prob = np.ascontiguousarray(
        chain.prob, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=2] nctx = np.ascontiguousarray(
        chain.nctx, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=2] genidx = np.ascontiguousarray(
        chain.gen, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] gens = np.ascontiguousarray(
        chain.gens_T, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] kword = np.ascontiguousarray(
        chain.kword_of_ctx, dtype=np.int32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cps = np.ascontiguousarray(
        checkpoints, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uvec = np.ascontiguousarray(
        u, dtype=np.float64)

    cdef bint tilted = tilt_t != 0.0 or guide is not None
    cdef bint has_guide = guide is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] guide_flat
    if has_guide:
        guide_flat = np.ascontiguousarray(guide, dtype=np.float64)
    else:
        guide_flat = np.zeros(1)
    cdef bint has_points = grid_points is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gpts
    if has_points:
        gpts = np.ascontiguousarray(grid_points, dtype=np.float64)
    else:
        gpts = np.zeros((1, 1))
    cdef long stride = grid_n if grid_n > 0 else (gpts.shape[0] if has_points else 1)

    cdef long d = chain.dimension
    cdef long q = prob.shape[1]
    cdef long C = init_cum.shape[0]
    cdef long K = cps.shape[0]
    cdef long npts = gpts.shape[0]
    if d > 8 or q > 8:
        raise ValueError("compiled kernel supports d <= 8 and q <= 8")

    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_S = np.zeros((trials, K))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_logw = np.zeros((trials, K))
    cdef cnp.ndarray[cnp.float64_t, ndim=4] out_mats
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_mat_logs
    if track_matrix:
        out_mats = np.zeros((trials, K, d, d))
        out_mat_logs = np.zeros((trials, K))
    else:
        out_mats = np.zeros((1, 1, 1, 1))
        out_mat_logs = np.zeros((1, 1))

    cdef uint64_t master = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL

    cdef double[64] v
    cdef double[64] img
    cdef double[64] vbest
    cdef double[4096] M
    cdef double[4096] Mtmp
    cdef double[64] wslot
    cdef double[64] cum
    cdef double S, logw, mat_log, r, total, nrm, s, phi, pos, best, dot
    cdef double wsel, psel, gval, fro
    cdef uint64_t state
    cdef long t, step, ck, ci, slot, i, j, kk, gi, jn, sel, gid, nxt
    cdef long gslot

    with nogil:
        for t in range(trials):
            state = cocylim_mix64(master + GAMMA * (<uint64_t>t + 1ULL))
            r = cocylim_next_uniform(&state) * init_cum[C - 1]
            ci = 0
            while ci < C - 1 and init_cum[ci] <= r:
                ci += 1
            for i in range(d):
                v[i] = uvec[i]
            S = 0.0
            logw = 0.0
            mat_log = 0.0
            if track_matrix:
                for i in range(d):
                    for j in range(d):
                        M[i * d + j] = 1.0 if i == j else 0.0
            ck = 0
            for step in range(1, n_steps + 1):
                total = 0.0
                sel = -1
                for slot in range(q):
                    if prob[ci, slot] <= 0.0:
                        wslot[slot] = 0.0
                        cum[slot] = total
                        continue
                    gid = genidx[ci, slot]
                    nrm = 0.0
                    for i in range(d):
                        s = 0.0
                        for j in range(d):
                            s += gens[gid, i, j] * v[j]
                        img[slot * d + i] = s
                        nrm += s * s
                    nrm = sqrt(nrm)
                    wslot[slot] = prob[ci, slot]
                    if tilted:
                        wslot[slot] = wslot[slot] * pow(nrm, tilt_t)
                        if has_guide:
                            nxt = nctx[ci, slot]
                            if has_points:
                                best = -1.0
                                gi = 0
                                for kk in range(npts):
                                    dot = 0.0
                                    for i in range(d):
                                        dot += img[slot * d + i] / nrm * gpts[kk, i]
                                    if dot < 0.0:
                                        dot = -dot
                                    if dot > best:
                                        best = dot
                                        gi = kk
                            elif grid_n == 1:
                                gi = 0
                            else:
                                phi = atan2(img[slot * d + 1], img[slot * d + 0])
                                if phi < 0.0:
                                    phi += PI
                                pos = phi * grid_n / PI
                                jn = <long>(pos + 0.5)
                                if jn >= grid_n:
                                    jn -= grid_n
                                gi = jn
                            wslot[slot] = wslot[slot] * guide_flat[kword[nxt] * stride + gi]
                    total += wslot[slot]
                    cum[slot] = total
                r = cocylim_next_uniform(&state) * total
                sel = 0
                while sel < q - 1 and cum[sel] <= r:
                    sel += 1
                if tilted:
                    psel = prob[ci, sel]
                    wsel = wslot[sel]
                    logw += log(psel) - (log(wsel) - log(total))
                # recompute the chosen image exactly as stored
                nrm = 0.0
                for i in range(d):
                    nrm += img[sel * d + i] * img[sel * d + i]
                nrm = sqrt(nrm)
                S += log(nrm)
                for i in range(d):
                    v[i] = img[sel * d + i] / nrm
                if track_matrix:
                    gid = genidx[ci, sel]
                    for i in range(d):
                        for kk in range(d):
                            s = 0.0
                            for j in range(d):
                                s += gens[gid, i, j] * M[j * d + kk]
                            Mtmp[i * d + kk] = s
                    for i in range(d * d):
                        M[i] = Mtmp[i]
                    if step % RENORM_STEPS == 0:
                        fro = 0.0
                        for i in range(d * d):
                            fro += M[i] * M[i]
                        fro = sqrt(fro)
                        mat_log += log(fro)
                        for i in range(d * d):
                            M[i] = M[i] / fro
                ci = nctx[ci, sel]
                while ck < K and cps[ck] == step:
                    out_S[t, ck] = S
                    out_logw[t, ck] = logw
                    if track_matrix:
                        for i in range(d):
                            for j in range(d):
                                out_mats[t, ck, i, j] = M[i * d + j]
                        out_mat_logs[t, ck] = mat_log
                    ck += 1

    out = {"S": out_S, "logw": out_logw}
    if track_matrix:
        out["mats"] = out_mats
        out["mat_logs"] = out_mat_logs
    return out
