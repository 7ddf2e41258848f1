"""Numba-compiled inner loop for skip-gram negative-sampling SGD.

Single-threaded calls are bit-reproducible: all randomness (subsampling,
dynamic window, negative draws) comes from an explicit 64-bit LCG whose state
is threaded through the kernel. Hogwild mode runs the same kernel from
several threads (nogil) over disjoint sentence ranges with shared weights.
"""

import numpy as np
from numba import njit

U64 = np.uint64
_MUL = U64(6364136223846793005)
_INC = U64(1442695040888963407)
_SHIFT = U64(33)
_TWO31 = 2147483648.0


def derive_seed(*parts: int) -> np.uint64:
    """Mix integers into a kernel RNG state (splitmix64 over the parts)."""
    mask = (1 << 64) - 1
    state = 0x9E3779B97F4A7C15
    for p in parts:
        state = (state + (p & mask)) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        state = z ^ (z >> 31)
    return np.uint64(state if state != 0 else 1)


@njit(cache=True, nogil=True)
def sgns_epoch(
    ids,
    offsets,
    s_begin,
    s_end,
    w_center,
    w_context,
    noise_cdf,
    keep_prob,
    window,
    negatives,
    alpha0,
    alpha_floor,
    total_words,
    words_done0,
    state0,
):
    """One pass over sentences [s_begin, s_end); updates weights in place.

    ids holds vocabulary ids with -1 for out-of-vocabulary tokens, which are
    never trained but still occupy window positions. Returns
    (loss_sum, pair_count, words_done, rng_state); loss is the summed
    negative log-likelihood of the sampled objective.
    """
    dim = w_center.shape[1]
    vocab_size = noise_cdf.shape[0]
    state = state0
    words_done = words_done0
    loss_sum = 0.0
    pair_count = 0

    max_len = 0
    for s in range(s_begin, s_end):
        n = offsets[s + 1] - offsets[s]
        if n > max_len:
            max_len = n
    buf = np.empty(max_len, np.int32)
    grad_c = np.empty(dim, np.float64)

    for s in range(s_begin, s_end):
        beg = offsets[s]
        end = offsets[s + 1]

        # frequent-word subsampling; dropped tokens vacate their positions,
        # out-of-vocabulary tokens keep theirs
        m = 0
        for t in range(beg, end):
            wid = ids[t]
            if wid < 0:
                buf[m] = -1
                m += 1
                continue
            words_done += 1
            kp = keep_prob[wid]
            if kp < 1.0:
                state = state * _MUL + _INC
                if np.int64(state >> _SHIFT) / _TWO31 >= kp:
                    continue
            buf[m] = wid
            m += 1

        for c in range(m):
            wc = buf[c]
            if wc < 0:
                continue
            frac = 1.0 - words_done / (total_words + 1.0)
            if frac < alpha_floor:
                frac = alpha_floor
            alpha = alpha0 * frac

            state = state * _MUL + _INC
            b = 1 + np.int64(state >> _SHIFT) % window
            lo = c - b
            if lo < 0:
                lo = 0
            hi = c + b + 1
            if hi > m:
                hi = m

            for j in range(lo, hi):
                if j == c:
                    continue
                wo = buf[j]
                if wo < 0:
                    continue

                for d in range(dim):
                    grad_c[d] = 0.0

                # positive pair: push sigma(v_c . u_o) toward 1
                dot = 0.0
                for d in range(dim):
                    dot += w_center[wc, d] * w_context[wo, d]
                if dot >= 0.0:
                    e = np.exp(-dot)
                    sig = 1.0 / (1.0 + e)
                    loss_sum += np.log1p(e)
                else:
                    e = np.exp(dot)
                    sig = e / (1.0 + e)
                    loss_sum += np.log1p(e) - dot
                g = sig - 1.0
                for d in range(dim):
                    grad_c[d] += g * w_context[wo, d]
                    w_context[wo, d] -= alpha * g * w_center[wc, d]

                # negatives: push sigma(v_c . u_n) toward 0
                for _ in range(negatives):
                    state = state * _MUL + _INC
                    r = np.int64(state >> _SHIFT) / _TWO31
                    lo_i = 0
                    hi_i = vocab_size - 1
                    while lo_i < hi_i:
                        mid = (lo_i + hi_i) >> 1
                        if noise_cdf[mid] > r:
                            hi_i = mid
                        else:
                            lo_i = mid + 1
                    wn = lo_i
                    if wn == wo:
                        continue
                    dot = 0.0
                    for d in range(dim):
                        dot += w_center[wc, d] * w_context[wn, d]
                    if dot >= 0.0:
                        e = np.exp(-dot)
                        sig = 1.0 / (1.0 + e)
                        loss_sum += dot + np.log1p(e)
                    else:
                        e = np.exp(dot)
                        sig = e / (1.0 + e)
                        loss_sum += np.log1p(e)
                    for d in range(dim):
                        grad_c[d] += sig * w_context[wn, d]
                        w_context[wn, d] -= alpha * sig * w_center[wc, d]

                for d in range(dim):
                    w_center[wc, d] -= alpha * grad_c[d]
                pair_count += 1

    return loss_sum, pair_count, words_done, state
