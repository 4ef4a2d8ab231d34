"""Fused elementwise kernels for the spiking predictive-coding loop.

Elements are processed in cache-sized blocks with the iteration loop outside
the element loop, and resets are written branch-free so the inner loop
vectorizes. ``v * (1 - s)`` and ``v - s * thr`` with ``s`` in {0, 1} are exact,
so results match the numpy reference bit for bit.
"""

import numba
import numpy as np

_BLOCK = 2048


@numba.njit(cache=True, nogil=True)
def spiking_pc_loop(P, Z0, K, gamma,
                    beta_pred, thr_pred, sub_pred,
                    beta_err, thr_err, sub_err):
    p_flat = P.ravel()
    z0_flat = Z0.ravel()
    n = p_flat.size
    out = np.empty(n)
    v_pred = np.empty(_BLOCK)
    v_pos = np.empty(_BLOCK)
    v_neg = np.empty(_BLOCK)
    z = np.empty(_BLOCK)
    for start in range(0, n, _BLOCK):
        m = min(_BLOCK, n - start)
        for j in range(m):
            v_pred[j] = 0.0
            v_pos[j] = 0.0
            v_neg[j] = 0.0
            z[j] = z0_flat[start + j]
        for _ in range(K):
            for j in range(m):
                p = p_flat[start + j]
                e = p - z[j]
                a = beta_err * v_pos[j] + max(e, 0.0)
                s_pos = 1.0 if a >= thr_err else 0.0
                b = beta_err * v_neg[j] + max(-e, 0.0)
                s_neg = 1.0 if b >= thr_err else 0.0
                if sub_err:
                    v_pos[j] = a - s_pos * thr_err
                    v_neg[j] = b - s_neg * thr_err
                else:
                    v_pos[j] = a * (1.0 - s_pos)
                    v_neg[j] = b * (1.0 - s_neg)
                u = p + gamma * (s_pos - s_neg)
                c = beta_pred * v_pred[j] + u
                s = 1.0 if c >= thr_pred else 0.0
                if sub_pred:
                    v_pred[j] = c - s * thr_pred
                else:
                    v_pred[j] = c * (1.0 - s)
                z[j] = s
        for j in range(m):
            out[start + j] = z[j]
    return out.reshape(P.shape)
