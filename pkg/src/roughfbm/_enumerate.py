"""Compiled sorted-tuple enumeration behind product-measure skeleton integrals.

Frequencies are integer modes listed in sector order, so a tuple lies in the
ordered domain exactly when its positions are nondecreasing along the vertex
order.  Vertex 0 is the root.  The non-root vertices are enumerated
explicitly; their weight only enters the root test through
``(sum of modes, position of vertex 1, largest magnitude)``, which lets the
root be attached in one pass over aggregated states.
"""

import numpy as np
from numba import njit

DENSE_LIMIT = 30_000_000


@njit(cache=True)
def _rest_state(parent, amp, kvals, idx, D, Mx, c_reg, trivial):
    """Weight of the non-root vertices at positions ``idx``; flags resonance."""
    r = idx.shape[0]
    m = r + 1
    w = 1.0 + 0.0j
    for j in range(r):
        w *= amp[j + 1, idx[j]]
    if w == 0:
        return w, False
    for v in range(m):
        D[v] = 0
        Mx[v] = 0
    for j in range(r):
        D[j + 1] = kvals[idx[j]]
    for v in range(m - 1, 0, -1):
        p = parent[v]
        if p > 0:
            D[p] += D[v]
            a = abs(kvals[idx[v - 1]])
            if Mx[v] > a:
                a = Mx[v]
            if a > Mx[p]:
                Mx[p] = a
    for v in range(1, m):
        if D[v] == 0:
            if trivial:
                return 0.0j, True
            return 0.0j, False
        if not trivial and Mx[v] > 0 and not abs(D[v]) > c_reg * Mx[v]:
            return 0.0j, False
        w /= 1j * D[v]
    return w, False


@njit(cache=True)
def block_weights(parent, amp, kvals, c_reg, trivial):
    """Coefficients ``W`` with ``skeleton(t) = sum_S W[S + off] exp(i t S dxi) / dxi^m``.

    ``parent[v]`` is the local parent of vertex ``v`` (-1 for the root at 0)
    and ``amp[v]`` its amplitude table over ``kvals``.  Returns ``(W, off,
    resonant)``; ``resonant`` is set when TRIVIAL mode meets a vanishing
    denominator with nonzero weight.
    """
    m = parent.shape[0]
    G = kvals.shape[0]
    K = 0
    for g in range(G):
        if abs(kvals[g]) > K:
            K = abs(kvals[g])
    off = m * K
    W = np.zeros(2 * off + 1, dtype=np.complex128)
    if m == 1:
        for g in range(G):
            a = amp[0, g]
            if a != 0:
                W[kvals[g] + off] += a / (1j * kvals[g])
        return W, off, False

    r = m - 1
    roff = r * K
    nR = 2 * roff + 1
    dense = nR * G * (K + 1) <= DENSE_LIMIT
    if dense:
        rest = np.zeros((nR, G, K + 1), dtype=np.complex128)
    else:
        rest = np.zeros((1, 1, 1), dtype=np.complex128)
    idx = np.zeros(r, dtype=np.int64)
    D = np.zeros(m, dtype=np.int64)
    Mx = np.zeros(m, dtype=np.int64)
    resonant = False

    while True:
        w, flag = _rest_state(parent, amp, kvals, idx, D, Mx, c_reg, trivial)
        if flag:
            resonant = True
        if w != 0:
            R = 0
            M = 0
            for j in range(r):
                R += kvals[idx[j]]
                a = abs(kvals[idx[j]])
                if a > M:
                    M = a
            if dense:
                rest[R + roff, idx[0], M] += w
            else:
                for g in range(idx[0] + 1):
                    a0 = amp[0, g]
                    if a0 == 0:
                        continue
                    S = kvals[g] + R
                    if S == 0:
                        if trivial:
                            resonant = True
                        continue
                    if not trivial and not abs(S) > c_reg * M:
                        continue
                    W[S + off] += a0 * w / (1j * S)
        # next nondecreasing tuple
        j = r - 1
        while j >= 0 and idx[j] == G - 1:
            j -= 1
        if j < 0:
            break
        idx[j] += 1
        for q in range(j + 1, r):
            idx[q] = idx[j]

    if dense:
        for g in range(G - 2, -1, -1):
            rest[:, g, :] += rest[:, g + 1, :]
        for g in range(G):
            a0 = amp[0, g]
            if a0 == 0:
                continue
            k0 = kvals[g]
            for Ri in range(nR):
                S = k0 + Ri - roff
                for M in range(1, K + 1):
                    w = rest[Ri, g, M]
                    if w == 0:
                        continue
                    if S == 0:
                        if trivial:
                            resonant = True
                        continue
                    if not trivial and not abs(S) > c_reg * M:
                        continue
                    W[S + off] += a0 * w / (1j * S)
    return W, off, resonant
