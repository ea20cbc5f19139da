"""Compiled inner loops.

Everything here is a plain numba ``njit`` function working on primitive
arrays, so the hot paths (drawing permutations of size up to ~1e7 and
counting their inversions/descents) run at native speed.  The Fenwick tree
over value occupancy gives O(log n) selection of the k-th smallest unused
value and O(log n) removal, hence O(n log n) per permutation overall.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def fenwick_decode_batch(ranks, flip):
    """Decode rank vectors into one-line permutations.

    ``ranks[r, i]`` is 1-based: position i receives the ranks[r, i]-th
    smallest value not yet used in draw r.  With ``flip`` the finished row
    is reversed in place.  Returns an int32 matrix of one-line words.
    """
    reps, n = ranks.shape
    out = np.empty((reps, n), np.int32)
    tree = np.empty(n + 1, np.int64)
    top = 1
    while top * 2 <= n:
        top *= 2
    for r in range(reps):
        # Fenwick tree over 1..n, all frequencies 1: node v covers a block
        # of size v & (-v), so the initial content is just that block size.
        for v in range(1, n + 1):
            tree[v] = v & (-v)
        for i in range(n):
            rem = ranks[r, i]
            pos = 0
            j = top
            while j > 0:
                nxt = pos + j
                if nxt <= n and tree[nxt] < rem:
                    rem -= tree[nxt]
                    pos = nxt
                j >>= 1
            val = pos + 1
            out[r, i] = val
            v = val
            while v <= n:
                tree[v] -= 1
                v += v & (-v)
        if flip:
            for i in range(n // 2):
                tmp = out[r, i]
                out[r, i] = out[r, n - 1 - i]
                out[r, n - 1 - i] = tmp
    return out


@njit(cache=True, nogil=True)
def two_sided_batch(ranks, flip):
    """Decode rank vectors and return descent counts of each draw and its inverse.

    Avoids materialising the full draw matrix; only one row buffer and one
    inverse buffer are kept.  Returns (des, ides) int64 vectors.
    """
    reps, n = ranks.shape
    des_out = np.empty(reps, np.int64)
    ides_out = np.empty(reps, np.int64)
    tree = np.empty(n + 1, np.int64)
    w = np.empty(n, np.int32)
    inv = np.empty(n, np.int32)
    top = 1
    while top * 2 <= n:
        top *= 2
    for r in range(reps):
        for v in range(1, n + 1):
            tree[v] = v & (-v)
        for i in range(n):
            rem = ranks[r, i]
            pos = 0
            j = top
            while j > 0:
                nxt = pos + j
                if nxt <= n and tree[nxt] < rem:
                    rem -= tree[nxt]
                    pos = nxt
                j >>= 1
            val = pos + 1
            w[i] = val
            v = val
            while v <= n:
                tree[v] -= 1
                v += v & (-v)
        if flip:
            for i in range(n // 2):
                tmp = w[i]
                w[i] = w[n - 1 - i]
                w[n - 1 - i] = tmp
        d = 0
        for i in range(n - 1):
            if w[i] > w[i + 1]:
                d += 1
        des_out[r] = d
        for i in range(n):
            inv[w[i] - 1] = i + 1
        d = 0
        for i in range(n - 1):
            if inv[i] > inv[i + 1]:
                d += 1
        ides_out[r] = d
    return des_out, ides_out


@njit(cache=True, nogil=True)
def count_inversions(values):
    """Number of pairs i < j with values[i] > values[j], in O(n log n).

    ``values`` must be a permutation of 1..n (int32 or int64).
    Scans right to left, counting previously seen values smaller than the
    current one with a Fenwick tree over value space.
    """
    n = values.shape[0]
    tree = np.zeros(n + 1, np.int64)
    total = 0
    for i in range(n - 1, -1, -1):
        k = values[i] - 1
        while k > 0:
            total += tree[k]
            k -= k & (-k)
        k = values[i]
        while k <= n:
            tree[k] += 1
            k += k & (-k)
    return total
