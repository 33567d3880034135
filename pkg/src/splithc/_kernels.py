"""Compiled hot loop for oracle-counter accumulation.

The jitted kernel reproduces the vectorized oracle answers cell for cell
(same hash, same coin, same adversary pick); equality is covered by tests.
Falls back to None when numba is unavailable.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard speedup, soft dep
    njit = None

if njit is not None:

    @njit(cache=True, inline="always")
    def _mix64_scalar(x):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))

    @njit(cache=True)
    def pair_count_kernel(u, t_arr, zlo, zhi, clo, chi, v_arr, pos_v,
                          hv, hseed, coin, adv_mode,
                          azlo, azhi, aclo, achi, apos_v, c1, c2):
        """Accumulate c1/c2 for anchor u over all (t, v) pairs; returns #queries."""
        nq = 0
        hu = hv[u]
        for i in range(t_arr.shape[0]):
            t = t_arr[i]
            hut = hu + hv[t]
            lo_i, hi_i = zlo[i], zhi[i]
            cl_i, ch_i = clo[i], chi[i]
            for j in range(v_arr.shape[0]):
                v = v_arr[j]
                if v == t:
                    continue
                nq += 1
                p = pos_v[j]
                if p < lo_i or p >= hi_i:
                    truth = v
                elif cl_i <= p < ch_i:
                    truth = t
                else:
                    truth = u
                h = _mix64_scalar((hut + hv[v]) ^ hseed)
                if (h >> np.uint64(11)) < coin:
                    ans = truth
                else:
                    if truth == v:
                        a, b = (u, t) if u < t else (t, u)
                    elif truth == t:
                        a, b = (u, v) if u < v else (v, u)
                    else:
                        a, b = (t, v) if t < v else (v, t)
                    if adv_mode == 1:
                        ans = a
                    elif adv_mode == 0:
                        ans = b if (h & np.uint64(1)) else a
                    else:
                        ap = apos_v[j]
                        if ap < azlo[i] or ap >= azhi[i]:
                            alt = v
                        elif aclo[i] <= ap < achi[i]:
                            alt = t
                        else:
                            alt = u
                        ans = alt if alt != truth else a
                if ans == v:
                    c1[j] += 1
                elif ans == t:
                    c2[j] += 1
        return nq

else:  # pragma: no cover
    pair_count_kernel = None
