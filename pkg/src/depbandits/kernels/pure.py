"""Pure-Python twins of the compiled simulation kernels.

Every arithmetic expression here mirrors depbandits._fast operation for
operation, in the same order, so the two implementations produce
bit-identical outputs. Keep them in lockstep when editing either. The
expressions also mirror the generic estimation/policies code paths;
equivalence is enforced by tests.

Inputs arrive as arrays from the harness kernel plan; outputs are the
per-round arm choices (0-based), rewards, and for the index policy the
per-cluster counts of rounds whose confidence ball covered theta_star.
"""

from __future__ import annotations

import math

import numpy as np

BISECT_ITERS = 64


def _bern_weighted_kl(x, th, c, offs, carms, mirror, cnt, s, n):
    # sum_i w_i KL_i(th || x) in local arm order
    total = 0.0
    for idx in range(offs[c], offs[c + 1]):
        aa = carms[idx]
        w = cnt[aa] / n
        if mirror[aa]:
            p = 1.0 - th
            q = 1.0 - x
        else:
            p = th
            q = x
        total += w * (p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q)))
    return total


def run_ucb_d_bernoulli(T, n_arms, is_mirror, offsets, cluster_arms,
                        theta_star, lo, hi, mean_true, kappa, draws,
                        cover_min_t):
    M = int(n_arms)
    K = len(offsets) - 1
    mirror = [bool(x) for x in is_mirror]
    offs = [int(x) for x in offsets]
    carms = [int(x) for x in cluster_arms]
    ts = [float(x) for x in theta_star]
    lo = [float(x) for x in lo]
    hi = [float(x) for x in hi]
    mt = [float(x) for x in mean_true]
    u = [float(x) for x in draws]
    kappa = float(kappa)

    cnt = [0] * M
    s = [0.0] * M
    uc = [0.0] * M
    choices = np.empty(T, dtype=np.int64)
    rewards = np.empty(T, dtype=np.float64)
    cover_hits = [0] * K
    cover_rounds = 0

    for t in range(1, T + 1):
        if t <= M:
            a = t - 1
        else:
            logt = math.log(t)
            count_cover = t >= cover_min_t
            if count_cover:
                cover_rounds += 1
            for c in range(K):
                succ = 0.0
                n = 0
                for idx in range(offs[c], offs[c + 1]):
                    aa = carms[idx]
                    if mirror[aa]:
                        succ += cnt[aa] - s[aa]
                    else:
                        succ += s[aa]
                    n += cnt[aa]
                th = succ / n
                if th < lo[c]:
                    th = lo[c]
                elif th > hi[c]:
                    th = hi[c]
                r = math.sqrt(kappa * logt / n)

                if _bern_weighted_kl(hi[c], th, c, offs, carms, mirror, cnt, s, n) <= r:
                    hi_b = hi[c]
                else:
                    ba, bb = th, hi[c]
                    for _ in range(BISECT_ITERS):
                        mid = 0.5 * (ba + bb)
                        if _bern_weighted_kl(mid, th, c, offs, carms, mirror, cnt, s, n) <= r:
                            ba = mid
                        else:
                            bb = mid
                    hi_b = ba
                if _bern_weighted_kl(lo[c], th, c, offs, carms, mirror, cnt, s, n) <= r:
                    lo_b = lo[c]
                else:
                    ba, bb = lo[c], th
                    for _ in range(BISECT_ITERS):
                        mid = 0.5 * (ba + bb)
                        if _bern_weighted_kl(mid, th, c, offs, carms, mirror, cnt, s, n) <= r:
                            bb = mid
                        else:
                            ba = mid
                    lo_b = bb

                for idx in range(offs[c], offs[c + 1]):
                    aa = carms[idx]
                    uc[aa] = 1.0 - lo_b if mirror[aa] else hi_b

                if count_cover:
                    if _bern_weighted_kl(ts[c], th, c, offs, carms, mirror, cnt, s, n) <= r:
                        cover_hits[c] += 1

            best = -math.inf
            a = 0
            for k in range(M):
                if uc[k] > best:
                    best = uc[k]
                    a = k

        rr = 1.0 if u[t - 1] < mt[a] else 0.0
        choices[t - 1] = a
        rewards[t - 1] = rr
        cnt[a] += 1
        s[a] += rr

    return choices, rewards, np.asarray(cover_hits, dtype=np.int64), cover_rounds


def _gauss_weighted_kl(x, th, c, offs, carms, scale, noise, cnt, n):
    total = 0.0
    for idx in range(offs[c], offs[c + 1]):
        aa = carms[idx]
        w = cnt[aa] / n
        d = scale[aa] * (th - x)
        total += w * (d * d / (2.0 * noise[aa] * noise[aa]))
    return total


def run_ucb_d_gaussian(T, n_arms, offsets, cluster_arms, scale, noise,
                       a1, a2, kcoef, theta_star, lo, hi, mean_true,
                       kappa, draws, cover_min_t):
    M = int(n_arms)
    K = len(offsets) - 1
    offs = [int(x) for x in offsets]
    carms = [int(x) for x in cluster_arms]
    scale = [float(x) for x in scale]
    noise = [float(x) for x in noise]
    a1 = [float(x) for x in a1]
    a2 = [float(x) for x in a2]
    kcoef = [float(x) for x in kcoef]
    ts = [float(x) for x in theta_star]
    lo = [float(x) for x in lo]
    hi = [float(x) for x in hi]
    mt = [float(x) for x in mean_true]
    z = [float(x) for x in draws]
    kappa = float(kappa)

    cnt = [0] * M
    s = [0.0] * M
    uc = [0.0] * M
    choices = np.empty(T, dtype=np.int64)
    rewards = np.empty(T, dtype=np.float64)
    cover_hits = [0] * K
    cover_rounds = 0

    for t in range(1, T + 1):
        if t <= M:
            a = t - 1
        else:
            logt = math.log(t)
            count_cover = t >= cover_min_t
            if count_cover:
                cover_rounds += 1
            for c in range(K):
                sxy = 0.0
                sxx = 0.0
                n = 0
                for idx in range(offs[c], offs[c + 1]):
                    aa = carms[idx]
                    sxy += a1[aa] * s[aa]
                    sxx += cnt[aa] * a2[aa]
                    n += cnt[aa]
                th = sxy / sxx
                if th < lo[c]:
                    th = lo[c]
                elif th > hi[c]:
                    th = hi[c]
                r = math.sqrt(kappa * logt / n)

                coef = 0.0
                for idx in range(offs[c], offs[c + 1]):
                    aa = carms[idx]
                    coef += (cnt[aa] / n) * kcoef[aa]
                hw = math.sqrt(r / coef)
                lo_b = th - hw
                hi_b = th + hw
                if lo_b < lo[c]:
                    lo_b = lo[c]
                if hi_b > hi[c]:
                    hi_b = hi[c]

                for idx in range(offs[c], offs[c + 1]):
                    aa = carms[idx]
                    uc[aa] = scale[aa] * hi_b if scale[aa] > 0.0 else scale[aa] * lo_b

                if count_cover:
                    if _gauss_weighted_kl(ts[c], th, c, offs, carms, scale, noise, cnt, n) <= r:
                        cover_hits[c] += 1

            best = -math.inf
            a = 0
            for k in range(M):
                if uc[k] > best:
                    best = uc[k]
                    a = k

        rr = mt[a] + noise[a] * z[t - 1]
        choices[t - 1] = a
        rewards[t - 1] = rr
        cnt[a] += 1
        s[a] += rr

    return choices, rewards, np.asarray(cover_hits, dtype=np.int64), cover_rounds


def run_vanilla(T, n_arms, family, mean_true, noise, two_sig2, draws):
    """family: 0 Gaussian (draws are standard normals), 1 Bernoulli
    (draws are uniforms)."""
    M = int(n_arms)
    mt = [float(x) for x in mean_true]
    nz = [float(x) for x in noise]
    ts2 = [float(x) for x in two_sig2]
    d = [float(x) for x in draws]

    cnt = [0] * M
    s = [0.0] * M
    choices = np.empty(T, dtype=np.int64)
    rewards = np.empty(T, dtype=np.float64)

    for t in range(1, T + 1):
        if t <= M:
            a = t - 1
        else:
            logt = math.log(t)
            best = -math.inf
            a = 0
            for k in range(M):
                v = s[k] / cnt[k] + math.sqrt(ts2[k] * logt / cnt[k])
                if v > best:
                    best = v
                    a = k
        if family == 0:
            rr = mt[a] + nz[a] * d[t - 1]
        else:
            rr = 1.0 if d[t - 1] < mt[a] else 0.0
        choices[t - 1] = a
        rewards[t - 1] = rr
        cnt[a] += 1
        s[a] += rr

    return choices, rewards
