"""JIT-compiled event loops for the exclusion-process simulator.

Everything here is deliberately low level: per-trajectory state lives in small
preallocated arrays, trajectories are embarrassingly parallel under
``numba.prange``, and each trajectory owns an independent random stream derived
from ``(master_seed, trajectory_index)``.  The derivation is splitmix64-based
(one mixing round on ``master ^ i * PRIME`` yields a stream key, whose splitmix
sequence seeds a xoshiro256++ state), so per-trajectory paths never depend on
scheduling or on how many trajectories run alongside them.

Rates follow the sped-up generator: every discordant bulk bond fires at rate
``n**2``, the two reservoir sites flip at rate ``n * r`` with ``r`` the
creation/annihilation parameter matching the current occupancy.  Concordant
bond exchanges are no-ops and are thinned away, which preserves the law.
"""

import math

import numpy as np
from numba import njit, prange

U64 = np.uint64

_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_KEYMULT = U64(0xA0761D6478BD642F)

# initialization modes for trajectories
INIT_MARGINALS = 0   # independent Bernoulli(p[x]) sites
INIT_EXACT_DIST = 1  # inverse-CDF sample of a full distribution over {0,1}^(n-1)


@njit(cache=True, inline="always")
def _splitmix64(state):
    """One splitmix64 step: returns (advanced state, 64-bit output)."""
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    z = z ^ (z >> U64(31))
    return state, z


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << U64(k)) | (x >> (U64(64) - U64(k)))


@njit(cache=True)
def _seed_stream(master_seed, index, s):
    """Fill xoshiro256++ state ``s`` for trajectory ``index``."""
    st = U64(master_seed) ^ (U64(index) * _KEYMULT)
    nonzero = U64(0)
    for j in range(4):
        st, out = _splitmix64(st)
        s[j] = out
        nonzero |= out
    if nonzero == U64(0):
        s[0] = U64(1)


@njit(cache=True, inline="always")
def _xoshiro_next(s):
    result = _rotl(s[0] + s[3], 23) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, inline="always")
def _uniform(s):
    """Uniform double in [0, 1) with 53 random bits."""
    return (_xoshiro_next(s) >> U64(11)) * 1.1102230246251565e-16


@njit(cache=True, inline="always")
def _bond_update(bits, act_list, act_pos, b, n_act):
    """Re-derive activity of bond ``b`` after its endpoints changed."""
    active = bits[b] != bits[b + 1]
    pos = act_pos[b]
    if active and pos < 0:
        act_pos[b] = n_act
        act_list[n_act] = b
        n_act += 1
    elif (not active) and pos >= 0:
        last = act_list[n_act - 1]
        act_list[pos] = last
        act_pos[last] = pos
        act_pos[b] = -1
        n_act -= 1
    return n_act


@njit(cache=True)
def _init_bits(bits, s, init_mode, marginals, dist_cum):
    nm1 = bits.shape[0]
    if init_mode == INIT_MARGINALS:
        for q in range(nm1):
            bits[q] = 1 if _uniform(s) < marginals[q] else 0
    else:
        u = _uniform(s)
        lo = 0
        hi = dist_cum.shape[0] - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if dist_cum[mid] <= u:
                lo = mid + 1
            else:
                hi = mid
        for q in range(nm1):
            bits[q] = (lo >> q) & 1


@njit(cache=True)
def _run_snapshots(n, alpha, beta, bits, s, obs, out_row):
    """Evolve one trajectory, writing occupancy snapshots at each obs time.

    Returns the number of executed events (diagnostic).
    """
    nm1 = n - 1
    nb = n - 2
    n2 = float(n) * float(n)
    nfl = float(n)
    act_list = np.empty(nb, np.int32)
    act_pos = np.full(nb, -1, np.int32)
    n_act = 0
    for b in range(nb):
        if bits[b] != bits[b + 1]:
            act_pos[b] = n_act
            act_list[n_act] = b
            n_act += 1
    t = 0.0
    k_obs = 0
    n_obs = obs.shape[0]
    events = 0
    while True:
        rl = nfl * (alpha if bits[0] == 0 else 1.0 - alpha)
        rr = nfl * (beta if bits[nm1 - 1] == 0 else 1.0 - beta)
        rb = n2 * n_act
        total = rb + rl + rr
        if total <= 0.0:
            while k_obs < n_obs:
                for q in range(nm1):
                    out_row[k_obs, q] = bits[q]
                k_obs += 1
            return events
        t_next = t - math.log1p(-_uniform(s)) / total
        while k_obs < n_obs and obs[k_obs] <= t_next:
            for q in range(nm1):
                out_row[k_obs, q] = bits[q]
            k_obs += 1
        if k_obs >= n_obs:
            return events
        t = t_next
        v = _uniform(s) * total
        if v < rb:
            j = int(v / n2)
            if j >= n_act:
                j = n_act - 1
            b = act_list[j]
            tmp = bits[b]
            bits[b] = bits[b + 1]
            bits[b + 1] = tmp
            if b > 0:
                n_act = _bond_update(bits, act_list, act_pos, b - 1, n_act)
            if b < nb - 1:
                n_act = _bond_update(bits, act_list, act_pos, b + 1, n_act)
        elif v < rb + rl:
            bits[0] ^= 1
            n_act = _bond_update(bits, act_list, act_pos, 0, n_act)
        else:
            bits[nm1 - 1] ^= 1
            n_act = _bond_update(bits, act_list, act_pos, nb - 1, n_act)
        events += 1


@njit(cache=True, parallel=True)
def sim_snapshots(n, alpha, beta, init_mode, marginals, dist_cum, obs,
                  master_seed, traj_offset, out):
    """Simulate ``out.shape[0]`` trajectories; ``out`` is uint8 (M, T, n-1)."""
    m = out.shape[0]
    counts = np.zeros(m, np.int64)
    for i in prange(m):
        s = np.empty(4, np.uint64)
        _seed_stream(master_seed, traj_offset + i, s)
        bits = np.empty(n - 1, np.uint8)
        _init_bits(bits, s, init_mode, marginals, dist_cum)
        counts[i] = _run_snapshots(n, alpha, beta, bits, s, obs, out[i])
    return counts


@njit(cache=True)
def _run_martingale(n, alpha, beta, bits, s, obs,
                    phv, lcoef, gw, pl2, pr2,
                    out_y, out_il, out_ig):
    """One trajectory with event-exact accumulation of the martingale terms.

    ``phv``   (K, n-1): test function values phi(x/n) on sites
    ``lcoef`` (K, n-1): site coefficients of the drift integrand (discrete
                        Laplacian of phi scaled by n^{-1/2}, plus the sqrt(n)
                        boundary brackets folded into sites 1 and n-1)
    ``gw``    (K, n-2): bond weights (1/n) (grad_n^+ phi)^2
    ``pl2/pr2`` (K,):   phi(1/n)^2 and phi((n-1)/n)^2

    Outputs at each obs time: out_y = sum_x phi(x/n) eta(x) (raw field sum),
    out_il = int_0^t sum_x lcoef eta ds, out_ig = int_0^t Gamma(eta_s) ds.
    """
    nm1 = n - 1
    nb = n - 2
    kk = phv.shape[0]
    n2 = float(n) * float(n)
    nfl = float(n)
    act_list = np.empty(nb, np.int32)
    act_pos = np.full(nb, -1, np.int32)
    n_act = 0
    for b in range(nb):
        if bits[b] != bits[b + 1]:
            act_pos[b] = n_act
            act_list[n_act] = b
            n_act += 1
    l_cur = np.zeros(kk, np.float64)
    g_cur = np.zeros(kk, np.float64)
    il = np.zeros(kk, np.float64)
    ig = np.zeros(kk, np.float64)
    for k in range(kk):
        acc = 0.0
        for q in range(nm1):
            if bits[q]:
                acc += lcoef[k, q]
        l_cur[k] = acc
        acc = 0.0
        for b in range(nb):
            if bits[b] != bits[b + 1]:
                acc += gw[k, b]
        acc += pl2[k] * (alpha + (1.0 - 2.0 * alpha) * bits[0])
        acc += pr2[k] * (beta + (1.0 - 2.0 * beta) * bits[nm1 - 1])
        g_cur[k] = acc
    t = 0.0
    t_mark = 0.0
    k_obs = 0
    n_obs = obs.shape[0]
    while True:
        rl = nfl * (alpha if bits[0] == 0 else 1.0 - alpha)
        rr = nfl * (beta if bits[nm1 - 1] == 0 else 1.0 - beta)
        rb = n2 * n_act
        total = rb + rl + rr
        if total <= 0.0:
            t_next = obs[n_obs - 1] + 1.0
        else:
            t_next = t - math.log1p(-_uniform(s)) / total
        while k_obs < n_obs and obs[k_obs] <= t_next:
            dt = obs[k_obs] - t_mark
            for k in range(kk):
                il[k] += l_cur[k] * dt
                ig[k] += g_cur[k] * dt
                acc = 0.0
                for q in range(nm1):
                    if bits[q]:
                        acc += phv[k, q]
                out_y[k_obs, k] = acc
                out_il[k_obs, k] = il[k]
                out_ig[k_obs, k] = ig[k]
            t_mark = obs[k_obs]
            k_obs += 1
        if k_obs >= n_obs:
            return
        dt = t_next - t_mark
        for k in range(kk):
            il[k] += l_cur[k] * dt
            ig[k] += g_cur[k] * dt
        t_mark = t_next
        t = t_next
        v = _uniform(s) * total
        if v < rb:
            j = int(v / n2)
            if j >= n_act:
                j = n_act - 1
            b = act_list[j]
            d = float(bits[b + 1]) - float(bits[b])
            tmp = bits[b]
            bits[b] = bits[b + 1]
            bits[b + 1] = tmp
            for k in range(kk):
                l_cur[k] += (lcoef[k, b] - lcoef[k, b + 1]) * d
            if b > 0:
                old = 1.0 if act_pos[b - 1] >= 0 else 0.0
                n_act = _bond_update(bits, act_list, act_pos, b - 1, n_act)
                new = 1.0 if act_pos[b - 1] >= 0 else 0.0
                if new != old:
                    for k in range(kk):
                        g_cur[k] += gw[k, b - 1] * (new - old)
            if b < nb - 1:
                old = 1.0 if act_pos[b + 1] >= 0 else 0.0
                n_act = _bond_update(bits, act_list, act_pos, b + 1, n_act)
                new = 1.0 if act_pos[b + 1] >= 0 else 0.0
                if new != old:
                    for k in range(kk):
                        g_cur[k] += gw[k, b + 1] * (new - old)
            if b == 0:
                for k in range(kk):
                    g_cur[k] += pl2[k] * (1.0 - 2.0 * alpha) * d
            if b == nb - 1:
                for k in range(kk):
                    g_cur[k] += pr2[k] * (1.0 - 2.0 * beta) * (-d)
        elif v < rb + rl:
            d = 1.0 - 2.0 * float(bits[0])
            bits[0] ^= 1
            old = 1.0 if act_pos[0] >= 0 else 0.0
            n_act = _bond_update(bits, act_list, act_pos, 0, n_act)
            new = 1.0 if act_pos[0] >= 0 else 0.0
            for k in range(kk):
                l_cur[k] += lcoef[k, 0] * d
                g_cur[k] += pl2[k] * (1.0 - 2.0 * alpha) * d
                if new != old:
                    g_cur[k] += gw[k, 0] * (new - old)
        else:
            d = 1.0 - 2.0 * float(bits[nm1 - 1])
            bits[nm1 - 1] ^= 1
            old = 1.0 if act_pos[nb - 1] >= 0 else 0.0
            n_act = _bond_update(bits, act_list, act_pos, nb - 1, n_act)
            new = 1.0 if act_pos[nb - 1] >= 0 else 0.0
            for k in range(kk):
                l_cur[k] += lcoef[k, nm1 - 1] * d
                g_cur[k] += pr2[k] * (1.0 - 2.0 * beta) * d
                if new != old:
                    g_cur[k] += gw[k, nb - 1] * (new - old)


@njit(cache=True, parallel=True)
def sim_martingale(n, alpha, beta, init_mode, marginals, dist_cum, obs,
                   master_seed, traj_offset,
                   phv, lcoef, gw, pl2, pr2,
                   out_y, out_il, out_ig):
    """Martingale-accumulator ensemble; outputs are (M, T, K) float64."""
    m = out_y.shape[0]
    for i in prange(m):
        s = np.empty(4, np.uint64)
        _seed_stream(master_seed, traj_offset + i, s)
        bits = np.empty(n - 1, np.uint8)
        _init_bits(bits, s, init_mode, marginals, dist_cum)
        _run_martingale(n, alpha, beta, bits, s, obs,
                        phv, lcoef, gw, pl2, pr2,
                        out_y[i], out_il[i], out_ig[i])


def derive_stream_state(master_seed, index):
    """Python mirror of the per-trajectory stream derivation (for tests).

    Returns the four xoshiro256++ state words produced by feeding
    ``master_seed ^ index * KEYMULT`` through four splitmix64 steps.
    """
    mask = (1 << 64) - 1
    st = (int(master_seed) ^ ((int(index) * int(_KEYMULT)) & mask)) & mask
    words = []
    for _ in range(4):
        st = (st + int(_GOLDEN)) & mask
        z = st
        z = ((z ^ (z >> 30)) * int(_MIX1)) & mask
        z = ((z ^ (z >> 27)) * int(_MIX2)) & mask
        z = z ^ (z >> 31)
        words.append(z)
    if not any(words):
        words[0] = 1
    return words
