"""Pure numpy implementations of the simulation kernels.

These define the draw order that the compiled kernels reproduce exactly:
every random variate comes from ``Generator.multinomial`` /
``Generator.binomial`` (the compiled side calls the same numpy C routines
on the same bit generator), so both backends emit identical streams.
"""
from __future__ import annotations

import math

import numpy as np

CENSORED = -1


def stayer_gw(probs, omega, size, cap, bound, rng, record_jumps):
    """Run ``size`` independent stayer Galton-Watson processes in lockstep.

    Each generation: every live process draws its total offspring (one
    multinomial per process, in index order), then its stayers (one binomial
    per process, in index order).  Children that do not stay are jumpers.

    Returns ``(times, roots, gens, counts)``; ``times[i]`` is the first
    generation with zero stayers or ``CENSORED``.  When ``record_jumps`` is
    set, ``(roots[r], gens[r], counts[r])`` lists the positive jumper counts.
    """
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    ks = np.arange(probs.size, dtype=np.int64)
    times = np.full(size, CENSORED, dtype=np.int64)
    w = np.ones(size, dtype=np.int64)
    alive = np.arange(size, dtype=np.int64)
    roots, gens, counts = [], [], []
    g = 0
    while alive.size and g < cap:
        g += 1
        total = rng.multinomial(w[alive], probs) @ ks
        stay = rng.binomial(total, omega)
        if record_jumps:
            jumps = total - stay
            nz = jumps > 0
            roots.append(alive[nz])
            gens.append(np.full(int(nz.sum()), g, dtype=np.int64))
            counts.append(jumps[nz])
        w[alive] = stay
        dead = stay == 0
        times[alive[dead]] = g
        alive = alive[~dead & (stay <= bound)]
    if record_jumps and roots:
        return times, np.concatenate(roots), np.concatenate(gens), np.concatenate(counts)
    empty = np.empty(0, dtype=np.int64)
    return times, empty, empty.copy(), empty.copy()


def _log_of_count(c):
    # scalar libm calls: matches the compiled kernel bit for bit
    return np.array([math.log(v) if v > 0 else -math.inf for v in c.tolist()], dtype=np.float64)


def run_counts(probs, omegas, log_stay, log_move, n_steps, threshold, site_rngs,
               record_steps, prune):
    """Hybrid exact/log-mass site-count evolution; see ``brwre.simulate.simulate_counts``.

    Exact sites draw from their own generator (``site_rngs[j]``) in
    increasing site order; saturated sites follow the mean flow in log space.
    """
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    ks = np.arange(probs.size, dtype=np.int64)
    size = n_steps + 2
    cnt = np.zeros(size, dtype=np.int64)
    sat = np.zeros(size, dtype=bool)
    lm = np.zeros(size, dtype=np.float64)
    cnt[0] = 1
    lo = hi = 0
    log_half = math.log(threshold / 2.0)
    minima = np.zeros(n_steps + 1, dtype=np.int64)
    record = set(int(s) for s in record_steps)
    snapshots = []
    diag = {"prunes": 0, "max_saturated": 0, "demotions": 0}
    if 0 in record:
        snapshots.append((0, lo, cnt[lo:hi + 1].copy(), sat[lo:hi + 1].copy(), lm[lo:hi + 1].copy()))

    for t in range(1, n_steps + 1):
        width = hi - lo + 1
        src = slice(lo, hi + 1)
        c_src, s_src, l_src = cnt[src], sat[src], lm[src]

        stay_ex = np.zeros(width, dtype=np.int64)
        move_ex = np.zeros(width, dtype=np.int64)
        for i in np.flatnonzero(~s_src & (c_src > 0)):
            j = lo + i
            g = site_rngs[j]
            total = int(g.multinomial(int(c_src[i]), probs) @ ks)
            stayers = int(g.binomial(total, omegas[j]))
            stay_ex[i] = stayers
            move_ex[i] = total - stayers
        stay_lm = np.where(s_src, l_src + log_stay[src], 0.0)
        move_lm = np.where(s_src, l_src + log_move[src], 0.0)

        # new[lo + i] = stay[i] + move[i - 1], for i in 0..width
        a_ex = np.append(stay_ex, 0)
        a_sat = np.append(s_src, False)
        a_lm = np.append(stay_lm, 0.0)
        b_ex = np.insert(move_ex, 0, 0)
        b_sat = np.insert(s_src, 0, False)
        b_lm = np.insert(move_lm, 0, 0.0)

        new_ex = a_ex + b_ex
        new_sat = np.zeros(width + 1, dtype=bool)
        new_lm = np.zeros(width + 1)

        both_exact = ~a_sat & ~b_sat
        promote = both_exact & (new_ex >= threshold)
        new_sat[promote] = True
        new_lm[promote] = _log_of_count(new_ex[promote])
        new_ex[promote] = 0

        mixed = ~both_exact
        if mixed.any():
            la = np.where(a_sat[mixed], a_lm[mixed], _log_of_count(a_ex[mixed]))
            lb = np.where(b_sat[mixed], b_lm[mixed], _log_of_count(b_ex[mixed]))
            merged = np.logaddexp(la, lb)
            demote = merged < log_half
            idx = np.flatnonzero(mixed)
            keep = idx[~demote]
            new_sat[keep] = True
            new_lm[keep] = merged[~demote]
            new_ex[keep] = 0
            drop = idx[demote]
            new_ex[drop] = [round(math.exp(v)) for v in merged[demote].tolist()]
            diag["demotions"] += int(demote.sum())

        dst = slice(lo, hi + 2)
        cnt[dst], sat[dst], lm[dst] = new_ex, new_sat, new_lm
        if new_sat[-1] or new_ex[-1] > 0:
            hi += 1
        while lo <= hi and not sat[lo] and cnt[lo] == 0:
            lo += 1
        if lo > hi:
            raise RuntimeError("population vanished; offspring law must have p_0 = 0")

        if prune:
            remaining = n_steps - t
            cand = np.flatnonzero(sat[lo:hi + 1])
            if cand.size:
                js = cand + lo
                floor = lm[js] + remaining * np.minimum(log_stay[js], 0.0)
                ok = np.flatnonzero(floor >= log_half + 1e-9)
                if ok.size and js[ok[0]] < hi:
                    j = int(js[ok[0]])
                    cnt[j + 1:hi + 1] = 0
                    sat[j + 1:hi + 1] = False
                    lm[j + 1:hi + 1] = 0.0
                    hi = j
                    diag["prunes"] += 1

        n_sat = int(sat[lo:hi + 1].sum())
        if n_sat > diag["max_saturated"]:
            diag["max_saturated"] = n_sat
        minima[t] = lo
        if t in record:
            snapshots.append((t, lo, cnt[lo:hi + 1].copy(), sat[lo:hi + 1].copy(), lm[lo:hi + 1].copy()))
    return minima, snapshots, diag
