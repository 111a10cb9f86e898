"""Numba event loops for the exact next-event simulation.

The kernels consume pre-drawn uniforms from a buffer in a fixed order
(waiting time, then site/category selection, then coupling marks) and
return to Python when the buffer runs dry, so the random stream stays a
single per-replica numpy generator and runs stay reproducible.

Status codes returned by the chunk runners:
  0  reached t_end
  1  exploded (a site count reached the stop threshold)
  2  uniform buffer exhausted, refill and re-enter
  3  frozen (total event rate hit zero)
  4  event budget exceeded
  5  dominating chain reached its cap (domination kernel only)
"""
from __future__ import annotations

import numpy as np
from numba import njit

# fstate slots
F_TIME = 0
F_EXTINCT_AT = 1
F_BIRTH_SUM = 2
F_Y_HIT = 3
FSTATE_LEN = 4
# istate slots
I_TOTAL = 0
I_EVENTS = 1
I_SAMPLE = 2
I_SUP = 3
I_TOT = 4
I_Y = 5
I_DOMINATED = 6
ISTATE_LEN = 7


@njit(cache=True, inline="always")
def _set_leaf(tree, cap, k, val):
    j = cap + k
    tree[j] = val
    j >>= 1
    while j >= 1:
        tree[j] = tree[2 * j] + tree[2 * j + 1]
        j >>= 1


@njit(cache=True, inline="always")
def _descend(tree, cap, n, x):
    j = 1
    while j < cap:
        left = tree[2 * j]
        if x < left:
            j = 2 * j
        else:
            x -= left
            j = 2 * j + 1
    k = j - cap
    if k > n - 1:
        k = n - 1
    return k, x


@njit(cache=True)
def run_chunk(counts, tree, cap, n, n2, birth_tab, death_tab,
              c_stop, t_end, budget,
              sup_thr, sup_hit, tot_thr, tot_hit,
              sample_times, snaps,
              u, fstate, istate):
    t = fstate[F_TIME]
    total = istate[I_TOTAL]
    events = istate[I_EVENTS]
    si = istate[I_SAMPLE]
    supi = istate[I_SUP]
    toti = istate[I_TOT]
    n_samples = sample_times.shape[0]
    n_sup = sup_thr.shape[0]
    n_tot = tot_thr.shape[0]
    nu = u.shape[0]
    uidx = 0
    status = -1
    inf = np.inf
    next_sample = sample_times[si] if si < n_samples else inf
    next_sup = sup_thr[supi] if supi < n_sup else np.int64(1) << 62
    next_tot = tot_thr[toti] if toti < n_tot else np.int64(1) << 62
    while True:
        r_tot = tree[1]
        if r_tot <= 0.0:
            fstate[F_EXTINCT_AT] = t
            while si < n_samples and sample_times[si] <= t_end:
                snaps[si] = counts
                si += 1
            t = t_end
            status = 3
            break
        if uidx + 2 > nu:
            status = 2
            break
        dt = -np.log(1.0 - u[uidx]) / r_tot
        uidx += 1
        t_next = t + dt
        if next_sample <= t_next:
            while si < n_samples and sample_times[si] <= t_next and sample_times[si] <= t_end:
                snaps[si] = counts
                si += 1
            next_sample = sample_times[si] if si < n_samples else inf
        if t_next > t_end:
            t = t_end
            status = 0
            break
        if events >= budget:
            status = 4
            break
        x = u[uidx] * r_tot
        uidx += 1
        k, x = _descend(tree, cap, n, x)
        c = counts[k]
        jump = n2 * c
        t = t_next
        events += 1
        if x < 2.0 * jump:
            if x < jump:
                dest = k + 1 if k + 1 < n else 0
            else:
                dest = k - 1 if k > 0 else n - 1
            cs = c - 1
            counts[k] = cs
            cd = counts[dest] + 1
            counts[dest] = cd
            _set_leaf(tree, cap, k, 2.0 * n2 * cs + birth_tab[cs] + death_tab[cs])
            _set_leaf(tree, cap, dest, 2.0 * n2 * cd + birth_tab[cd] + death_tab[cd])
            if cd >= next_sup:
                while supi < n_sup and cd >= sup_thr[supi]:
                    sup_hit[supi] = t
                    supi += 1
                next_sup = sup_thr[supi] if supi < n_sup else np.int64(1) << 62
            if cd >= c_stop:
                status = 1
                break
        elif x < 2.0 * jump + birth_tab[c]:
            cn = c + 1
            counts[k] = cn
            total += 1
            _set_leaf(tree, cap, k, 2.0 * n2 * cn + birth_tab[cn] + death_tab[cn])
            if cn >= next_sup:
                while supi < n_sup and cn >= sup_thr[supi]:
                    sup_hit[supi] = t
                    supi += 1
                next_sup = sup_thr[supi] if supi < n_sup else np.int64(1) << 62
            if total >= next_tot:
                while toti < n_tot and total >= tot_thr[toti]:
                    tot_hit[toti] = t
                    toti += 1
                next_tot = tot_thr[toti] if toti < n_tot else np.int64(1) << 62
            if cn >= c_stop:
                status = 1
                break
        else:
            # death; c == 0 can only be reached by a rounding edge, treat as no-op
            if c > 0:
                cn = c - 1
                counts[k] = cn
                total -= 1
                _set_leaf(tree, cap, k, 2.0 * n2 * cn + birth_tab[cn] + death_tab[cn])
    fstate[F_TIME] = t
    istate[I_TOTAL] = total
    istate[I_EVENTS] = events
    istate[I_SAMPLE] = si
    istate[I_SUP] = supi
    istate[I_TOT] = toti
    return status, uidx


@njit(cache=True)
def run_domination_chunk(counts, tree, cap, n, n2, birth_tab, death_tab,
                         linear_mode, master_rate, accept_tab, y_birth_tab,
                         y_cap, c_stop, t_end, budget,
                         sample_times, snaps, ysnap,
                         u, fstate, istate):
    """Joint run of the particle system and the dominating chain Y.

    Bounded-d mode: site deaths are thinned from one master clock of rate
    ell*n*||d||_inf whose every ring also decrements Y.  Linear-d mode:
    deaths live in the tree and each one decrements Y exactly.  At each
    system birth, Y increments when the uniform mark falls below
    ell*n*b(Y/(ell*n)) / sum_k ell*b(counts_k/ell), a ratio in [0, 1] by
    Jensen's inequality while Y <= total.
    """
    t = fstate[F_TIME]
    birth_sum = fstate[F_BIRTH_SUM]
    total = istate[I_TOTAL]
    events = istate[I_EVENTS]
    si = istate[I_SAMPLE]
    y = istate[I_Y]
    n_samples = sample_times.shape[0]
    nu = u.shape[0]
    uidx = 0
    status = -1
    resync = 0
    while True:
        r_tree = tree[1]
        r_tot = r_tree + master_rate
        if r_tot <= 0.0:
            fstate[F_EXTINCT_AT] = t
            while si < n_samples and sample_times[si] <= t_end:
                snaps[si] = counts
                ysnap[si] = y
                si += 1
            t = t_end
            status = 3
            break
        if uidx + 4 > nu:
            status = 2
            break
        dt = -np.log(1.0 - u[uidx]) / r_tot
        uidx += 1
        t_next = t + dt
        while si < n_samples and sample_times[si] <= t_next and sample_times[si] <= t_end:
            snaps[si] = counts
            ysnap[si] = y
            si += 1
        if t_next > t_end:
            t = t_end
            status = 0
            break
        if events >= budget:
            status = 4
            break
        x = u[uidx] * r_tot
        uidx += 1
        t = t_next
        events += 1
        if x < master_rate:
            # master death clock: Y always steps down, the system by thinning
            k = int(u[uidx] * n)
            if k > n - 1:
                k = n - 1
            uidx += 1
            acc = u[uidx]
            uidx += 1
            if y > 0:
                y -= 1
            c = counts[k]
            if c > 0 and acc < accept_tab[c]:
                cn = c - 1
                counts[k] = cn
                total -= 1
                _set_leaf(tree, cap, k, 2.0 * n2 * cn + birth_tab[cn])
                birth_sum += birth_tab[cn] - birth_tab[c]
        else:
            k, x = _descend(tree, cap, n, x - master_rate)
            c = counts[k]
            jump = n2 * c
            if x < 2.0 * jump:
                if x < jump:
                    dest = k + 1 if k + 1 < n else 0
                else:
                    dest = k - 1 if k > 0 else n - 1
                cs = c - 1
                counts[k] = cs
                cd = counts[dest] + 1
                counts[dest] = cd
                if linear_mode:
                    _set_leaf(tree, cap, k, 2.0 * n2 * cs + birth_tab[cs] + death_tab[cs])
                    _set_leaf(tree, cap, dest, 2.0 * n2 * cd + birth_tab[cd] + death_tab[cd])
                else:
                    _set_leaf(tree, cap, k, 2.0 * n2 * cs + birth_tab[cs])
                    _set_leaf(tree, cap, dest, 2.0 * n2 * cd + birth_tab[cd])
                birth_sum += birth_tab[cs] - birth_tab[c]
                birth_sum += birth_tab[cd] - birth_tab[cd - 1]
                if cd >= c_stop:
                    status = 1
                    break
            elif x < 2.0 * jump + birth_tab[c]:
                mark = u[uidx]
                uidx += 1
                if birth_sum > 0.0 and mark < y_birth_tab[y] / birth_sum:
                    y += 1
                cn = c + 1
                counts[k] = cn
                total += 1
                if linear_mode:
                    _set_leaf(tree, cap, k, 2.0 * n2 * cn + birth_tab[cn] + death_tab[cn])
                else:
                    _set_leaf(tree, cap, k, 2.0 * n2 * cn + birth_tab[cn])
                birth_sum += birth_tab[cn] - birth_tab[c]
                if y >= y_cap:
                    fstate[F_Y_HIT] = t
                    status = 5
                    break
                if cn >= c_stop:
                    status = 1
                    break
            else:
                # linear-mode death: system and Y step down together
                if c > 0:
                    cn = c - 1
                    counts[k] = cn
                    total -= 1
                    _set_leaf(tree, cap, k, 2.0 * n2 * cn + birth_tab[cn] + death_tab[cn])
                    birth_sum += birth_tab[cn] - birth_tab[c]
                    if y > 0:
                        y -= 1
        if y > total:
            istate[I_DOMINATED] = 0
        resync += 1
        if resync >= 1 << 20:
            # limit float drift in the incrementally maintained birth-rate sum
            birth_sum = 0.0
            for i in range(n):
                birth_sum += birth_tab[counts[i]]
            resync = 0
    if y > total:
        istate[I_DOMINATED] = 0
    fstate[F_TIME] = t
    fstate[F_BIRTH_SUM] = birth_sum
    istate[I_TOTAL] = total
    istate[I_EVENTS] = events
    istate[I_SAMPLE] = si
    istate[I_Y] = y
    return status, uidx


@njit(cache=True)
def run_bd_chunk(btab, dtab, state_cap, u, fstate, istate):
    """Exact simulation of the one-dimensional birth-death chain up to state_cap."""
    r = istate[0]
    t = fstate[0]
    nu = u.shape[0]
    uidx = 0
    status = -1
    while True:
        if r >= state_cap:
            status = 1
            break
        br = btab[r]
        dr = dtab[r]
        rate = br + dr
        if rate <= 0.0:
            status = 3
            break
        if uidx + 2 > nu:
            status = 2
            break
        t += -np.log(1.0 - u[uidx]) / rate
        uidx += 1
        if u[uidx] * rate < br:
            r += 1
        elif r > 0:
            r -= 1
        uidx += 1
    fstate[0] = t
    istate[0] = r
    return status, uidx
