"""Compiled hot loops.

Everything here is implementation detail behind the public modules: a
forced-step trace used by represent/lift, a single-pass word extractor, a
conditioned-crossing interior sampler, and a small episode sampler for the
straightness experiment. Kernels that need randomness carry their own
splitmix64 state so they can draw an unbounded number of bits cheaply.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(inline="always")
def _next64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def trace_steps(colors, up_color, start):
    """Forced-step walk.

    colors[k] is the color seen at step k+1; up_color[j] is the color of site
    x+1 when x = j mod 4. Exactly one neighbor of any site carries a given
    color, so each step is determined: up if the upper neighbor matches,
    else down. Returns the positions including the start.
    """
    m = colors.shape[0]
    out = np.empty(m + 1, np.int64)
    out[0] = start
    p = start
    for k in range(m):
        if up_color[p & 3] == colors[k]:
            p += 1
        else:
            p -= 1
        out[k + 1] = p
    return out


@njit(cache=True, nogil=True)
def crossing_word(vals, z1, sgn, n):
    """Word of a crossing, one bit per length-3 subinterval.

    vals is the path restricted to the crossing, already reversed if the
    anchor endpoint is the later one, so the scan always starts at the
    anchor. Subinterval m spans values z1 + 3m*sgn .. z1 + (3m+3)*sgn.
    Bit m is 1 iff the first crossing of subinterval m in scan order takes
    exactly 3 steps. Single pass: a site on a subinterval boundary updates
    the adjacent one or two subintervals; a flip between the two ends of a
    subinterval with no intermediate hit of either end is a crossing.
    """
    word = np.zeros(n, np.uint8)
    found = np.zeros(n, np.uint8)
    side = np.full(n, -1, np.int8)  # -1 none, 0 low end, 1 high end
    last_t = np.zeros(n, np.int64)
    nfound = 0
    for t in range(vals.shape[0]):
        u = (vals[t] - z1) * sgn
        if u < 0 or u > 3 * n or u % 3 != 0:
            continue
        j = u // 3
        if j < n:
            if side[j] == 1 and found[j] == 0:
                found[j] = 1
                nfound += 1
                if t - last_t[j] == 3:
                    word[j] = 1
            side[j] = 0
            last_t[j] = t
        if j > 0:
            m = j - 1
            if side[m] == 0 and found[m] == 0:
                found[m] = 1
                nfound += 1
                if t - last_t[m] == 3:
                    word[m] = 1
            side[m] = 1
            last_t[m] = t
        if nfound == n:
            break
    return word


@njit(cache=True, nogil=True)
def sample_interior(state, gap, buf, budget):
    """One conditioned crossing of an interval of the given gap.

    Simple random walk from the entry boundary, first step forced inward,
    run to either boundary; rejected and retried unless it reaches the far
    end, which is exactly the law of a crossing interior. Relative positions
    0..gap are written to buf. Returns (entries, steps_used); entries is -1
    if the step budget or the buffer ran out.
    """
    used = 0
    cap = buf.shape[0]
    pool = np.uint64(0)
    nbits = 0
    while True:
        pos = 1
        t = 1
        buf[0] = 0
        buf[1] = 1
        used += 1
        while 0 < pos < gap:
            if nbits == 0:
                pool = _next64(state)
                nbits = 64
            if pool & np.uint64(1):
                pos += 1
            else:
                pos -= 1
            pool >>= np.uint64(1)
            nbits -= 1
            t += 1
            used += 1
            if t >= cap or used >= budget:
                return -1, used
            buf[t] = pos
        if pos == gap:
            return t + 1, used


@njit(cache=True, nogil=True)
def straightness_episodes(seed, target, nbins):
    """Collect completed crossings of (0,3) from independent episodes.

    Each episode starts at 0; a first step down cannot produce a crossing
    and is skipped outright. Upward episodes run until hitting 0 or 3 and
    count as crossings only on reaching 3. Returns (straight_count,
    duration_hist) where hist[k] counts duration 3+2k and the last bin
    collects the overflow.
    """
    state = np.empty(1, np.uint64)
    state[0] = seed
    hist = np.zeros(nbins + 1, np.int64)
    straight = 0
    done = 0
    pool = np.uint64(0)
    nbits = 0
    while done < target:
        if nbits == 0:
            pool = _next64(state)
            nbits = 64
        up = pool & np.uint64(1)
        pool >>= np.uint64(1)
        nbits -= 1
        if up == np.uint64(0):
            continue
        pos = 1
        t = 1
        while 0 < pos < 3:
            if nbits == 0:
                pool = _next64(state)
                nbits = 64
            if pool & np.uint64(1):
                pos += 1
            else:
                pos -= 1
            pool >>= np.uint64(1)
            nbits -= 1
            t += 1
        if pos == 3:
            done += 1
            if t == 3:
                straight += 1
            k = (t - 3) // 2
            if k >= nbins:
                k = nbins
            hist[k] += 1
    return straight, hist
