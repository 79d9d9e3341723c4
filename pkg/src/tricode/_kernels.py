"""Numba kernels on bit-packed stabilizer tableaux.

Layout: a tableau of ``n`` generators on ``n`` qubits is two ``(n, W)`` uint64
arrays (X plane, Z plane) with ``W = ceil(n / 64)``; qubit ``q`` lives in word
``q >> 6`` at bit ``q & 63``. Signs are a ``(n,)`` uint8 array, 1 meaning -1.

All uint64 arithmetic uses typed constants; mixing uint64 with int64 makes
numba promote to float64.
"""

import numba as nb
import numpy as np

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ZERO = np.uint64(0)
_ONE = np.uint64(1)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)


@nb.njit(cache=True, inline="always")
def popcount(v):
    v = v - ((v >> _S1) & _M1)
    v = (v & _M2) + ((v >> _S2) & _M2)
    v = (v + (v >> _S4)) & _M4
    return np.int64((v * _H01) >> _S56)


@nb.njit(cache=True, inline="always")
def get_bit(row, q):
    return np.int64((row[q >> 6] >> np.uint64(q & 63)) & _ONE)


@nb.njit(cache=True)
def product_phase(x1, z1, x2, z2):
    """Exponent of i (mod 4, unreduced) picked up by P1 * P2, Y = iXZ."""
    s = 0
    for w in range(x1.shape[0]):
        a = x1[w]
        b = z1[w]
        c = x2[w]
        d = z2[w]
        if (a | b) == _ZERO or (c | d) == _ZERO:
            continue
        pos = (a & b & d & ~c) | (a & ~b & c & d) | (~a & b & c & ~d)
        neg = (a & b & c & ~d) | (a & ~b & ~c & d) | (~a & b & c & d)
        s += popcount(pos) - popcount(neg)
    return s


@nb.njit(cache=True)
def rowsum(tx, tz, r, h, i):
    """Row h <- row i * row h (rows must commute)."""
    s = 2 * np.int64(r[h]) + 2 * np.int64(r[i]) + product_phase(tx[i], tz[i], tx[h], tz[h])
    for w in range(tx.shape[1]):
        tx[h, w] ^= tx[i, w]
        tz[h, w] ^= tz[i, w]
    r[h] = np.uint8((s & 3) >> 1)


@nb.njit(cache=True)
def anticommutes(ax, az, bx, bz):
    acc = _ZERO
    for w in range(ax.shape[0]):
        acc ^= (ax[w] & bz[w]) ^ (az[w] & bx[w])
    return popcount(acc) & 1


@nb.njit(cache=True)
def anticommuting_rows(tx, tz, px, pz, words):
    n = tx.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    for g in range(n):
        acc = _ZERO
        for j in range(words.shape[0]):
            w = words[j]
            acc ^= (tx[g, w] & pz[w]) ^ (tz[g, w] & px[w])
        out[g] = np.uint8(popcount(acc) & 1)
    return out


@nb.njit(cache=True)
def project(tx, tz, r, px, pz, words, sign_bit):
    """Measure the Pauli (px, pz) and collapse onto eigenvalue (-1)**sign_bit.

    Returns the index of the replaced generator, or -1 when the outcome was
    already fixed by the state (the tableau is then untouched).
    """
    n = tx.shape[0]
    k = -1
    for g in range(n):
        acc = _ZERO
        for j in range(words.shape[0]):
            w = words[j]
            acc ^= (tx[g, w] & pz[w]) ^ (tz[g, w] & px[w])
        if popcount(acc) & 1:
            if k < 0:
                k = g
            else:
                rowsum(tx, tz, r, g, k)
    if k < 0:
        return -1
    for w in range(tx.shape[1]):
        tx[k, w] = px[w]
        tz[k, w] = pz[w]
    r[k] = np.uint8(sign_bit)
    return k


@nb.njit(cache=True)
def run_steps(tx, tz, r, op_x, op_z, op_words, op_nwords, schedule, outcome_bits):
    """Apply a precomputed measurement schedule; returns the random-outcome count."""
    n_random = 0
    for i in range(schedule.shape[0]):
        o = schedule[i]
        k = project(tx, tz, r, op_x[o], op_z[o], op_words[o, : op_nwords[o]], outcome_bits[i])
        if k >= 0:
            n_random += 1
    return n_random


@nb.njit(cache=True)
def gf2_rank_inplace(mat, ncols):
    """Rank over GF(2) of packed rows; destroys ``mat``."""
    n = mat.shape[0]
    nw = mat.shape[1]
    rank = 0
    for c in range(ncols):
        if rank == n:
            break
        w = c >> 6
        bit = _ONE << np.uint64(c & 63)
        piv = -1
        for i in range(rank, n):
            if mat[i, w] & bit:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(w, nw):
                tmp = mat[piv, k]
                mat[piv, k] = mat[rank, k]
                mat[rank, k] = tmp
        for i in range(rank + 1, n):
            if mat[i, w] & bit:
                for k in range(w, nw):
                    mat[i, k] ^= mat[rank, k]
        rank += 1
    return rank


@nb.njit(cache=True)
def restricted_rank(tx, tz, qubits):
    """GF(2) rank of the generators restricted to ``qubits`` (X and Z columns)."""
    n = tx.shape[0]
    m = qubits.shape[0]
    ncols = 2 * m
    nw = (ncols + 63) >> 6
    mat = np.zeros((n, nw), dtype=np.uint64)
    rows = 0
    for g in range(n):
        nonzero = False
        for j in range(m):
            q = qubits[j]
            w = q >> 6
            b = np.uint64(q & 63)
            if (tx[g, w] >> b) & _ONE:
                c = 2 * j
                mat[rows, c >> 6] |= _ONE << np.uint64(c & 63)
                nonzero = True
            if (tz[g, w] >> b) & _ONE:
                c = 2 * j + 1
                mat[rows, c >> 6] |= _ONE << np.uint64(c & 63)
                nonzero = True
        if nonzero:
            rows += 1
    return gf2_rank_inplace(mat[:rows], ncols)


@nb.njit(cache=True)
def decompose(tx, tz, r, px, pz):
    """Write (px, pz) as a product of generators.

    Returns the phase exponent s (mod 4) with  p * prod(gens) = i**s * I,
    or -1 if p is not in the (sign-free) group.
    """
    n = tx.shape[0]
    nq = n
    ex = tx.copy()
    ez = tz.copy()
    er = r.copy()
    pivots = np.empty(n, dtype=np.int64)
    rank = 0
    for c in range(2 * nq):
        if rank == n:
            break
        q = c >> 1
        use_z = c & 1
        w = q >> 6
        bit = _ONE << np.uint64(q & 63)
        piv = -1
        for i in range(rank, n):
            v = ez[i, w] if use_z else ex[i, w]
            if v & bit:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(ex.shape[1]):
                t = ex[piv, k]
                ex[piv, k] = ex[rank, k]
                ex[rank, k] = t
                t = ez[piv, k]
                ez[piv, k] = ez[rank, k]
                ez[rank, k] = t
            t8 = er[piv]
            er[piv] = er[rank]
            er[rank] = t8
        for i in range(rank + 1, n):
            v = ez[i, w] if use_z else ex[i, w]
            if v & bit:
                rowsum(ex, ez, er, i, rank)
        pivots[rank] = c
        rank += 1

    rx = px.copy()
    rz = pz.copy()
    s = 0
    for t in range(rank):
        c = pivots[t]
        q = c >> 1
        w = q >> 6
        bit = _ONE << np.uint64(q & 63)
        v = rz[w] if (c & 1) else rx[w]
        if v & bit:
            # R <- h_t * R
            s += 2 * np.int64(er[t]) + product_phase(ex[t], ez[t], rx, rz)
            for k in range(rx.shape[0]):
                rx[k] ^= ex[t, k]
                rz[k] ^= ez[t, k]
    for k in range(rx.shape[0]):
        if rx[k] != _ZERO or rz[k] != _ZERO:
            return -1
    return s & 3


@nb.njit(cache=True)
def prefix_commutes(tx, tz, edges, use_z_plane, step):
    """Renyi-2 values of the growing strings built from ``edges``.

    Entry ``k`` is 1 iff the operator on ``edges[: step * (k + 1)]`` commutes
    with every generator. Z-type strings test the X plane and vice versa;
    ``use_z_plane`` selects the plane to read.
    """
    n = tx.shape[0]
    m = edges.shape[0] // step
    par = np.zeros(n, dtype=np.uint8)
    out = np.zeros(m, dtype=np.uint8)
    plane = tz if use_z_plane else tx
    for k in range(m):
        for j in range(k * step, (k + 1) * step):
            q = edges[j]
            w = q >> 6
            b = np.uint64(q & 63)
            for g in range(n):
                par[g] ^= np.uint8((plane[g, w] >> b) & _ONE)
        ok = 1
        for g in range(n):
            if par[g]:
                ok = 0
                break
        out[k] = ok
    return out
