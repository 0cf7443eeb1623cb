"""Compiled q-variation dynamic programme over prefix-sum tables.

A scalar two-parameter table is stored in the form

    eta(i, j) = a[j] - d[i] - sum_r b[r, i] * c[r, j]

which covers increments, second levels and cross integrals of grid paths.
The DP  V(j) = max_{i<j} V(i) + |eta(i, j)|**q  is exact; candidate indices
are grouped in blocks and a block is skipped only when an interval bound on
``V + |eta|**q`` over the block cannot beat the current maximum.
"""

import numpy as np
from numba import njit

BLOCK = 32
FANOUT = 8
# bounds are inflated by this factor before pruning so that rounding in the
# bound never discards a strictly better candidate
_SLACK = 1.0 + 1e-12


@njit(cache=True)
def _pw(x, q, k4):
    # x**q; when 4q is an integer k4 > 0 use multiplications and square roots
    if k4 <= 0:
        return x**q
    r = 1.0
    for _ in range(k4 // 4):
        r *= x
    f = k4 % 4
    if f == 2:
        r *= np.sqrt(x)
    elif f == 1:
        r *= np.sqrt(np.sqrt(x))
    elif f == 3:
        s = np.sqrt(x)
        r *= s * np.sqrt(s)
    return r


def quarter_code(q):
    """Fast-power code for ``_pw``: 4q when it is a small integer, else 0."""
    k4 = 4.0 * q
    return int(k4) if k4 == int(k4) and k4 <= 64 else 0


@njit(cache=True)
def _eta(a, d, b, c, i, j):
    v = a[j] - d[i]
    for r in range(b.shape[0]):
        v -= b[r, i] * c[r, j]
    return v


@njit(cache=True)
def _box_stats(d, b, c, bs):
    # Per block: the bilinear part is re-centred at the block's middle column,
    # d_i + sum_r b_ri c_rj = e_i + sum_r b_ri (c_rj - cref_r), which keeps the
    # box of e_i narrow because eta(i, i) = 0 ties d_i to b_i c_i.
    n = d.shape[0]
    R = b.shape[0]
    nblk = (n + bs - 1) // bs
    elo = np.empty(nblk)
    ehi = np.empty(nblk)
    blo = np.empty((R, nblk))
    bhi = np.empty((R, nblk))
    cref = np.empty((R, nblk))
    for kb in range(nblk):
        s = kb * bs
        e = min(n, s + bs)
        mid = (s + e - 1) // 2
        for r in range(R):
            cref[r, kb] = c[r, mid]
            blo[r, kb] = b[r, s:e].min()
            bhi[r, kb] = b[r, s:e].max()
        lo = np.inf
        hi = -np.inf
        for i in range(s, e):
            v = d[i]
            for r in range(R):
                v += b[r, i] * cref[r, kb]
            lo = min(lo, v)
            hi = max(hi, v)
        elo[kb] = lo
        ehi[kb] = hi
    return elo, ehi, blo, bhi, cref


@njit(cache=True)
def _box_bound(aj, c, j, elo, ehi, blo, bhi, cref, kb):
    # sup over the block of |aj - e_i - sum_r b_ri (c_rj - cref_r)|
    lo = elo[kb]
    hi = ehi[kb]
    for r in range(c.shape[0]):
        cj = c[r, j] - cref[r, kb]
        if cj >= 0.0:
            lo += cj * blo[r, kb]
            hi += cj * bhi[r, kb]
        else:
            lo += cj * bhi[r, kb]
            hi += cj * blo[r, kb]
    return max(abs(aj - lo), abs(aj - hi)) * _SLACK


@njit(cache=True)
def qvar_power(a, d, b, c, q, k4, bs, prev):
    """Return max over grid partitions of sum |eta|**q; fills ``prev`` with argmax links."""
    n = a.shape[0]
    if n < 2:
        return 0.0
    sb = bs * FANOUT
    elo, ehi, blo, bhi, cref = _box_stats(d, b, c, bs)
    Elo, Ehi, Blo, Bhi, Cref = _box_stats(d, b, c, sb)
    vmax = np.full(elo.shape[0], -1.0)
    Vmax = np.full(Elo.shape[0], -1.0)
    V = np.zeros(n)
    vmax[0] = 0.0
    Vmax[0] = 0.0
    for j in range(1, n):
        best = -1.0
        barg = 0
        aj = a[j]
        cur = (j - 1) // bs
        for i in range(j - 1, cur * bs - 1, -1):
            val = V[i] + _pw(abs(_eta(a, d, b, c, i, j)), q, k4)
            if val > best:
                best = val
                barg = i
        kb = cur - 1
        while kb >= 0:
            ks = kb // FANOUT
            if (kb + 1) % FANOUT == 0:
                # block kb closes superblock ks, which is therefore complete
                m = _box_bound(aj, c, j, Elo, Ehi, Blo, Bhi, Cref, ks)
                if Vmax[ks] + _pw(m, q, k4) <= best:
                    kb -= FANOUT
                    continue
            m = _box_bound(aj, c, j, elo, ehi, blo, bhi, cref, kb)
            if vmax[kb] + _pw(m, q, k4) > best:
                s = kb * bs
                for i in range(s + bs - 1, s - 1, -1):
                    val = V[i] + _pw(abs(_eta(a, d, b, c, i, j)), q, k4)
                    if val > best:
                        best = val
                        barg = i
            kb -= 1
        V[j] = best
        prev[j] = barg
        if best > vmax[j // bs]:
            vmax[j // bs] = best
        if best > Vmax[j // sb]:
            Vmax[j // sb] = best
    return V[n - 1]


@njit(cache=True)
def qvar_power_dense(a, d, b, c, q, k4):
    """Unpruned O(n^2) version of :func:`qvar_power`, kept as a cross-check."""
    n = a.shape[0]
    V = np.zeros(n)
    for j in range(1, n):
        best = 0.0
        for i in range(j):
            val = V[i] + _pw(abs(_eta(a, d, b, c, i, j)), q, k4)
            if val > best:
                best = val
        V[j] = best
    return V[n - 1] if n > 1 else 0.0
