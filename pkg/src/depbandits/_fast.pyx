# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled simulation kernels.

Bit-identical twins of depbandits/kernels/pure.py: every arithmetic
expression matches the pure module operation for operation (no
-ffast-math, no reassociation). Keep the two files in lockstep when
editing either.
"""

from libc.math cimport INFINITY, log, sqrt

import numpy as np


cdef double _bern_weighted_kl(double x, double th, Py_ssize_t c,
                              const long long[::1] offs,
                              const long long[::1] carms,
                              const unsigned char[::1] mirror,
                              const long long[::1] cnt,
                              const double[::1] s,
                              long long n) noexcept nogil:
    cdef double total = 0.0
    cdef double w, p, q
    cdef Py_ssize_t idx
    cdef long long aa
    for idx in range(offs[c], offs[c + 1]):
        aa = carms[idx]
        w = (<double> cnt[aa]) / (<double> n)
        if mirror[aa]:
            p = 1.0 - th
            q = 1.0 - x
        else:
            p = th
            q = x
        total += w * (p * log(p / q) + (1.0 - p) * log((1.0 - p) / (1.0 - q)))
    return total


def run_ucb_d_bernoulli(T, n_arms, is_mirror, offsets, cluster_arms,
                        theta_star, lo, hi, mean_true, kappa, draws,
                        cover_min_t):
    cdef Py_ssize_t t_horizon = int(T)
    cdef Py_ssize_t m_arms = int(n_arms)
    cdef const unsigned char[::1] mirror = np.ascontiguousarray(is_mirror, dtype=np.uint8)
    cdef const long long[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const long long[::1] carms = np.ascontiguousarray(cluster_arms, dtype=np.int64)
    cdef const double[::1] ts = np.ascontiguousarray(theta_star, dtype=np.float64)
    cdef const double[::1] lo_v = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hi_v = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[::1] mt = np.ascontiguousarray(mean_true, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(draws, dtype=np.float64)
    cdef double kap = float(kappa)
    cdef Py_ssize_t min_t = int(cover_min_t)
    cdef Py_ssize_t n_clusters = offs.shape[0] - 1

    choices_arr = np.empty(t_horizon, dtype=np.int64)
    rewards_arr = np.empty(t_horizon, dtype=np.float64)
    cover_arr = np.zeros(n_clusters, dtype=np.int64)
    cnt_arr = np.zeros(m_arms, dtype=np.int64)
    s_arr = np.zeros(m_arms, dtype=np.float64)
    uc_arr = np.zeros(m_arms, dtype=np.float64)

    cdef long long[::1] choices = choices_arr
    cdef double[::1] rewards = rewards_arr
    cdef long long[::1] cover_hits = cover_arr
    cdef long long[::1] cnt = cnt_arr
    cdef double[::1] s = s_arr
    cdef double[::1] uc = uc_arr

    cdef long long cover_rounds = 0
    cdef Py_ssize_t t, c, idx, k, a
    cdef long long aa, n
    cdef double succ, th, logt, r, hi_b, lo_b, ba, bb, mid, best, rr
    cdef bint count_cover

    with nogil:
        for t in range(1, t_horizon + 1):
            a = 0
            if t <= m_arms:
                a = t - 1
            else:
                logt = log(<double> t)
                count_cover = t >= min_t
                if count_cover:
                    cover_rounds += 1
                for c in range(n_clusters):
                    succ = 0.0
                    n = 0
                    for idx in range(offs[c], offs[c + 1]):
                        aa = carms[idx]
                        if mirror[aa]:
                            succ += cnt[aa] - s[aa]
                        else:
                            succ += s[aa]
                        n += cnt[aa]
                    th = succ / (<double> n)
                    if th < lo_v[c]:
                        th = lo_v[c]
                    elif th > hi_v[c]:
                        th = hi_v[c]
                    r = sqrt(kap * logt / (<double> n))

                    if _bern_weighted_kl(hi_v[c], th, c, offs, carms, mirror, cnt, s, n) <= r:
                        hi_b = hi_v[c]
                    else:
                        ba = th
                        bb = hi_v[c]
                        for k in range(64):
                            mid = 0.5 * (ba + bb)
                            if _bern_weighted_kl(mid, th, c, offs, carms, mirror, cnt, s, n) <= r:
                                ba = mid
                            else:
                                bb = mid
                        hi_b = ba
                    if _bern_weighted_kl(lo_v[c], th, c, offs, carms, mirror, cnt, s, n) <= r:
                        lo_b = lo_v[c]
                    else:
                        ba = lo_v[c]
                        bb = th
                        for k in range(64):
                            mid = 0.5 * (ba + bb)
                            if _bern_weighted_kl(mid, th, c, offs, carms, mirror, cnt, s, n) <= r:
                                bb = mid
                            else:
                                ba = mid
                        lo_b = bb

                    for idx in range(offs[c], offs[c + 1]):
                        aa = carms[idx]
                        if mirror[aa]:
                            uc[aa] = 1.0 - lo_b
                        else:
                            uc[aa] = hi_b

                    if count_cover:
                        if _bern_weighted_kl(ts[c], th, c, offs, carms, mirror, cnt, s, n) <= r:
                            cover_hits[c] += 1

                best = -INFINITY
                a = 0
                for k in range(m_arms):
                    if uc[k] > best:
                        best = uc[k]
                        a = k

            rr = 1.0 if u[t - 1] < mt[a] else 0.0
            choices[t - 1] = a
            rewards[t - 1] = rr
            cnt[a] += 1
            s[a] += rr

    return choices_arr, rewards_arr, cover_arr, int(cover_rounds)


cdef double _gauss_weighted_kl(double x, double th, Py_ssize_t c,
                               const long long[::1] offs,
                               const long long[::1] carms,
                               const double[::1] scale,
                               const double[::1] noise,
                               const long long[::1] cnt,
                               long long n) noexcept nogil:
    cdef double total = 0.0
    cdef double w, d
    cdef Py_ssize_t idx
    cdef long long aa
    for idx in range(offs[c], offs[c + 1]):
        aa = carms[idx]
        w = (<double> cnt[aa]) / (<double> n)
        d = scale[aa] * (th - x)
        total += w * (d * d / (2.0 * noise[aa] * noise[aa]))
    return total


def run_ucb_d_gaussian(T, n_arms, offsets, cluster_arms, scale, noise,
                       a1, a2, kcoef, theta_star, lo, hi, mean_true,
                       kappa, draws, cover_min_t):
    cdef Py_ssize_t t_horizon = int(T)
    cdef Py_ssize_t m_arms = int(n_arms)
    cdef const long long[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const long long[::1] carms = np.ascontiguousarray(cluster_arms, dtype=np.int64)
    cdef const double[::1] sc = np.ascontiguousarray(scale, dtype=np.float64)
    cdef const double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef const double[::1] a1_v = np.ascontiguousarray(a1, dtype=np.float64)
    cdef const double[::1] a2_v = np.ascontiguousarray(a2, dtype=np.float64)
    cdef const double[::1] kc = np.ascontiguousarray(kcoef, dtype=np.float64)
    cdef const double[::1] ts = np.ascontiguousarray(theta_star, dtype=np.float64)
    cdef const double[::1] lo_v = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hi_v = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[::1] mt = np.ascontiguousarray(mean_true, dtype=np.float64)
    cdef const double[::1] z = np.ascontiguousarray(draws, dtype=np.float64)
    cdef double kap = float(kappa)
    cdef Py_ssize_t min_t = int(cover_min_t)
    cdef Py_ssize_t n_clusters = offs.shape[0] - 1

    choices_arr = np.empty(t_horizon, dtype=np.int64)
    rewards_arr = np.empty(t_horizon, dtype=np.float64)
    cover_arr = np.zeros(n_clusters, dtype=np.int64)
    cnt_arr = np.zeros(m_arms, dtype=np.int64)
    s_arr = np.zeros(m_arms, dtype=np.float64)
    uc_arr = np.zeros(m_arms, dtype=np.float64)

    cdef long long[::1] choices = choices_arr
    cdef double[::1] rewards = rewards_arr
    cdef long long[::1] cover_hits = cover_arr
    cdef long long[::1] cnt = cnt_arr
    cdef double[::1] s = s_arr
    cdef double[::1] uc = uc_arr

    cdef long long cover_rounds = 0
    cdef Py_ssize_t t, c, idx, k, a
    cdef long long aa, n
    cdef double sxy, sxx, th, logt, r, coef, hw, hi_b, lo_b, best, rr
    cdef bint count_cover

    with nogil:
        for t in range(1, t_horizon + 1):
            a = 0
            if t <= m_arms:
                a = t - 1
            else:
                logt = log(<double> t)
                count_cover = t >= min_t
                if count_cover:
                    cover_rounds += 1
                for c in range(n_clusters):
                    sxy = 0.0
                    sxx = 0.0
                    n = 0
                    for idx in range(offs[c], offs[c + 1]):
                        aa = carms[idx]
                        sxy += a1_v[aa] * s[aa]
                        sxx += cnt[aa] * a2_v[aa]
                        n += cnt[aa]
                    th = sxy / sxx
                    if th < lo_v[c]:
                        th = lo_v[c]
                    elif th > hi_v[c]:
                        th = hi_v[c]
                    r = sqrt(kap * logt / (<double> n))

                    coef = 0.0
                    for idx in range(offs[c], offs[c + 1]):
                        aa = carms[idx]
                        coef += ((<double> cnt[aa]) / (<double> n)) * kc[aa]
                    hw = sqrt(r / coef)
                    lo_b = th - hw
                    hi_b = th + hw
                    if lo_b < lo_v[c]:
                        lo_b = lo_v[c]
                    if hi_b > hi_v[c]:
                        hi_b = hi_v[c]

                    for idx in range(offs[c], offs[c + 1]):
                        aa = carms[idx]
                        if sc[aa] > 0.0:
                            uc[aa] = sc[aa] * hi_b
                        else:
                            uc[aa] = sc[aa] * lo_b

                    if count_cover:
                        if _gauss_weighted_kl(ts[c], th, c, offs, carms, sc, nz, cnt, n) <= r:
                            cover_hits[c] += 1

                best = -INFINITY
                a = 0
                for k in range(m_arms):
                    if uc[k] > best:
                        best = uc[k]
                        a = k

            rr = mt[a] + nz[a] * z[t - 1]
            choices[t - 1] = a
            rewards[t - 1] = rr
            cnt[a] += 1
            s[a] += rr

    return choices_arr, rewards_arr, cover_arr, int(cover_rounds)


def run_vanilla(T, n_arms, family, mean_true, noise, two_sig2, draws):
    cdef Py_ssize_t t_horizon = int(T)
    cdef Py_ssize_t m_arms = int(n_arms)
    cdef int fam = int(family)
    cdef const double[::1] mt = np.ascontiguousarray(mean_true, dtype=np.float64)
    cdef const double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef const double[::1] ts2 = np.ascontiguousarray(two_sig2, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(draws, dtype=np.float64)

    choices_arr = np.empty(t_horizon, dtype=np.int64)
    rewards_arr = np.empty(t_horizon, dtype=np.float64)
    cnt_arr = np.zeros(m_arms, dtype=np.int64)
    s_arr = np.zeros(m_arms, dtype=np.float64)

    cdef long long[::1] choices = choices_arr
    cdef double[::1] rewards = rewards_arr
    cdef long long[::1] cnt = cnt_arr
    cdef double[::1] s = s_arr

    cdef Py_ssize_t t, k, a
    cdef double logt, v, best, rr

    with nogil:
        for t in range(1, t_horizon + 1):
            a = 0
            if t <= m_arms:
                a = t - 1
            else:
                logt = log(<double> t)
                best = -INFINITY
                a = 0
                for k in range(m_arms):
                    v = s[k] / (<double> cnt[k]) + sqrt(ts2[k] * logt / (<double> cnt[k]))
                    if v > best:
                        best = v
                        a = k
            if fam == 0:
                rr = mt[a] + nz[a] * d[t - 1]
            else:
                rr = 1.0 if d[t - 1] < mt[a] else 0.0
            choices[t - 1] = a
            rewards[t - 1] = rr
            cnt[a] += 1
            s[a] += rr

    return choices_arr, rewards_arr
