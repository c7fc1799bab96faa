"""Compiled inner loops (numba) for the elder-rule sweep and cancellation.

These are straight ports of the pure-Python loops they replace; the tests
pin their outputs against the boundary-matrix oracle, so any drift between
this module and the reference semantics shows up as a failure.  Kept
separate so importing the package stays cheap until a sweep runs.

The sorts are stable LSD radix passes with narrow digits (256/1024
buckets), all bucket histograms taken in one priming scan.  Keys move
together with their payload instead of being argsorted, so every pass
streams memory rather than gathering through a permutation.  The sweep
itself runs in filtration-position space (see elder_sweep), which is what
keeps its union-find accesses mostly cache-resident on large grids.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def pair_argsort(keys, order, maxbits):
    """Stable LSD radix argsort of uint64 `keys` by moving (key, index)
    pairs; keys[i] belongs to element order[i], and ties keep that order.
    Passes whose digit is constant are skipped."""
    m = keys.shape[0]
    k = keys.copy()
    o = order.copy()
    tk = np.empty(m, dtype=np.uint64)
    to = np.empty(m, dtype=np.int64)
    npass = (maxbits + 7) // 8
    if npass == 0 or m == 0:
        return o
    hist = np.zeros((npass, 257), dtype=np.int64)
    for i in range(m):
        v = k[i]
        for b in range(npass):
            d = np.int64((v >> (8 * b)) & np.uint64(255))
            hist[b, d + 1] += 1
    for b in range(npass):
        skip = False
        for d in range(256):
            if hist[b, d + 1] == m:
                skip = True
        counts = hist[b]
        for d in range(1, 257):
            counts[d] += counts[d - 1]
        if skip:
            continue
        shift = 8 * b
        for i in range(m):
            v = k[i]
            d = np.int64((v >> shift) & np.uint64(255))
            p = counts[d]
            tk[p] = v
            to[p] = o[i]
            counts[d] = p + 1
        k, tk = tk, k
        o, to = to, o
    return o


@njit(cache=True)
def vertex_ranks(keys):
    """Sort vertices by uint64 key with flat index as tie-break.

    Returns (vorder, vkey, ndense, skeys): the sorted vertex ids, a
    packed per-vertex word dense_key_rank << 32 | sort_position (so
    comparing words compares filtration order), the number of distinct
    keys, and the keys themselves in sorted order.
    """
    n = keys.shape[0]
    vals = keys.copy()
    idx = np.arange(n, dtype=np.int32)
    tv = np.empty(n, dtype=np.uint64)
    ti = np.empty(n, dtype=np.int32)
    hist = np.zeros((8, 257), dtype=np.int64)
    for i in range(n):
        v = vals[i]
        for b in range(8):
            d = np.int64((v >> (8 * b)) & np.uint64(255))
            hist[b, d + 1] += 1
    for b in range(8):
        skip = False
        for d in range(256):
            if hist[b, d + 1] == n:
                skip = True
        counts = hist[b]
        for d in range(1, 257):
            counts[d] += counts[d - 1]
        if skip:
            continue
        shift = 8 * b
        for i in range(n):
            v = vals[i]
            d = np.int64((v >> shift) & np.uint64(255))
            p = counts[d]
            tv[p] = v
            ti[p] = idx[i]
            counts[d] = p + 1
        vals, tv = tv, vals
        idx, ti = ti, idx
    vkey = np.empty(n, dtype=np.int64)
    ndense = 0
    prev = np.uint64(0)
    for i in range(n):
        if i == 0 or vals[i] != prev:
            ndense += 1
            prev = vals[i]
        vkey[idx[i]] = (np.int64(ndense - 1) << 32) | np.int64(i)
    return idx, vkey, ndense, vals


@njit(cache=True)
def build_edge_keys(vkey, tails, heads, packed_ta):
    """Edge sort keys in one pass over the cached lex-ordered tables.

    `rank` is the dense value rank of each edge's younger endpoint (its
    radix sort key); `aux` packs what the sweep needs alongside it, in
    filtration-position space: tail pos << 33 | head pos << 2 | axis.
    `tkey` (rank << 33 | lex position) is the edge's full filtration
    order, comparable as a plain integer."""
    m = tails.shape[0]
    mask32 = np.int64(0xFFFFFFFF)
    rank = np.empty(m, dtype=np.uint32)
    aux = np.empty(m, dtype=np.uint64)
    tkey = np.empty(m, dtype=np.uint64)
    for i in range(m):
        kt = vkey[tails[i]]
        kh = vkey[heads[i]]
        r = kt if kt >= kh else kh
        rank[i] = np.uint32(r >> 32)
        aux[i] = ((np.uint64(kt & mask32) << 33)
                  | (np.uint64(kh & mask32) << 2)
                  | (packed_ta[i] & np.uint64(3)))
        tkey[i] = (np.uint64(r >> 32) << 33) | np.uint64(i)
    return rank, aux, tkey


@njit(cache=True)
def cycle_edge_mask(tkey, squares):
    """Mark the filtration-last edge of every unit square.

    By the time such an edge enters, the square's other three edges have
    already linked its endpoints (or refused to, which any later merge of
    the same components then also does), so the sweep can drop it without
    changing a single pairing, label, or root.
    """
    drop = np.zeros(tkey.shape[0], dtype=np.bool_)
    for i in range(squares.shape[0]):
        best = squares[i, 0]
        kb = tkey[best]
        for j in range(1, 4):
            e = squares[i, j]
            if tkey[e] > kb:
                best = e
                kb = tkey[e]
        drop[best] = True
    return drop


@njit(cache=True)
def sort_edges(rank, aux, rank_bits):
    """Stable LSD radix sort of edges by dense value rank; ties keep
    input (doubled-lex) order.

    Carries the packed endpoint word `aux` along and returns it sorted,
    so the sweep that follows reads its edges sequentially.
    """
    m = rank.shape[0]
    p = rank.copy()
    w = aux.copy()
    tp = np.empty(m, dtype=np.uint32)
    tw = np.empty(m, dtype=np.uint64)
    npass = (rank_bits + 9) // 10
    if npass == 0 or m == 0:
        return w
    hist = np.zeros((npass, 1025), dtype=np.int64)
    for i in range(m):
        v = p[i]
        for b in range(npass):
            d = np.int64((v >> (10 * b)) & np.uint32(1023))
            hist[b, d + 1] += 1
    for b in range(npass):
        skip = False
        for d in range(1024):
            if hist[b, d + 1] == m:
                skip = True
        counts = hist[b]
        for d in range(1, 1025):
            counts[d] += counts[d - 1]
        if skip:
            continue
        shift = 10 * b
        for i in range(m):
            v = p[i]
            d = np.int64((v >> shift) & np.uint32(1023))
            pos = counts[d]
            tp[pos] = v
            tw[pos] = w[i]
            counts[d] = pos + 1
        p, tp = tp, p
        w, tw = tw, w
    return w


@njit(cache=True)
def elder_sweep(aux, val_by_pos, use_gate, gate_eps, want_pairs, want_labels):
    """Union-find pass over edges pre-sorted in filtration order.

    Everything happens in filtration-position space: vkey's rank half
    never decreases along the sorted vertex order, so bare positions
    compare exactly like full vkeys, the entry value of anything is one
    lookup in `val_by_pos`, and roots double as births when every merge
    hangs the younger root under the elder one.  The caller maps
    positions back to vertex ids afterwards.

    Position space is also what keeps the forest cache-resident: edges
    arrive sorted by value, so their younger endpoints walk the parent
    array almost monotonically, while elder roots pile up at the low end
    where repeated merges keep them hot.

    Each `aux` word holds tail pos << 33 | head pos << 2 | axis.  Merges
    resolve by the elder rule; with use_gate, merges whose dying side
    has persistence >= gate_eps are refused.  Returns (pair_birth,
    pair_tail, pair_axis, pair_pers, root_mask, labels), all in position
    space; labels is empty unless requested.
    """
    n = val_by_pos.shape[0]
    m = aux.shape[0]
    pos_mask = np.uint64(0x7FFFFFFF)
    parent = np.empty(n, dtype=np.int32)
    for v in range(n):
        parent[v] = v
    cap = n if want_pairs else 0
    pair_birth = np.empty(cap, dtype=np.int64)
    pair_tail = np.empty(cap, dtype=np.int64)
    pair_axis = np.empty(cap, dtype=np.int64)
    pair_pers = np.empty(cap, dtype=np.float64)
    k = 0
    for i in range(m):
        av = aux[i]
        t = np.int64(av >> 33)
        h = np.int64((av >> 2) & pos_mask)
        # Read both endpoints up front so the two loads overlap instead
        # of serialising.  If the t-side find rewrites parent[h] it can
        # only swap h's parent for a grandparent in the same tree, so
        # the stale value still leads to the right root.
        pt = np.int64(parent[t])
        ph = np.int64(parent[h])
        x = t
        p = pt
        while p != x:
            g = np.int64(parent[p])
            parent[x] = g
            x = g
            p = np.int64(parent[x])
        a = x
        x = h
        p = ph
        while p != x:
            g = np.int64(parent[p])
            parent[x] = g
            x = g
            p = np.int64(parent[x])
        b = x
        if a == b:
            continue
        if a <= b:
            elder, young = a, b
        else:
            elder, young = b, a
        py = t if t >= h else h
        pers = val_by_pos[py] - val_by_pos[young]
        if use_gate and pers >= gate_eps:
            continue
        if want_pairs:
            pair_birth[k] = young
            pair_tail[k] = t
            pair_axis[k] = np.int64(av & np.uint64(3))
            pair_pers[k] = pers
            k += 1
        parent[young] = elder
    root_mask = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if parent[v] == v:
            root_mask[v] = True
    labels = np.empty(n if want_labels else 0, dtype=np.int64)
    if want_labels:
        for v in range(n):
            x = v
            p = np.int64(parent[x])
            while p != x:
                g = np.int64(parent[p])
                parent[x] = g
                x = g
                p = np.int64(parent[x])
            labels[v] = x
    return (pair_birth[:k], pair_tail[:k], pair_axis[:k],
            pair_pers[:k], root_mask, labels)


@njit(cache=True)
def _walk(vmatch, strides, n, start, out):
    """V-path chase from a vertex into `out`; returns its length, or -1 on
    a cycle (which a valid gradient never has)."""
    out[0] = start
    length = 1
    u = start
    while True:
        code = vmatch[u]
        if code < 0:
            return length
        axis = code // n
        tail = code - axis * n
        u = tail + strides[axis] if u == tail else tail
        out[length] = u
        length += 1
        if length > n + 1:
            return -1


@njit(cache=True)
def cancel_pairs(vmatch, births, codes, strides, n):
    """Cancel the given (vertex, edge) pairs, already sorted by
    (persistence, edge, birth); mutates vmatch.  Returns (cancelled,
    skipped), or (-1, -1) if a chase found a cycle."""
    cancelled = 0
    skipped = 0
    path_t = np.empty(n + 2, dtype=np.int64)
    path_h = np.empty(n + 2, dtype=np.int64)
    for i in range(births.shape[0]):
        v = births[i]
        code = codes[i]
        axis = code // n
        tail = code - axis * n
        head = tail + strides[axis]
        if vmatch[v] >= 0 or vmatch[tail] == code or vmatch[head] == code:
            skipped += 1
            continue
        lt = _walk(vmatch, strides, n, tail, path_t)
        lh = _walk(vmatch, strides, n, head, path_h)
        if lt < 0 or lh < 0:
            return -1, -1
        hit_t = path_t[lt - 1] == v
        if hit_t == (path_h[lh - 1] == v):
            skipped += 1  # no unique V-path from the edge to the vertex
            continue
        prev = code
        if hit_t:
            for j in range(lt):
                u = path_t[j]
                cur = vmatch[u]
                vmatch[u] = prev
                prev = cur
        else:
            for j in range(lh):
                u = path_h[j]
                cur = vmatch[u]
                vmatch[u] = prev
                prev = cur
        cancelled += 1
    return cancelled, skipped


@njit(cache=True)
def trace_bits(vmatch, strides, n, codes):
    """Rasterise the V-paths of the given saddle edges into a flat
    boolean mask; returns (bits, ok) with ok False on a cycle."""
    bits = np.zeros(n, dtype=np.bool_)
    scratch = np.empty(n + 2, dtype=np.int64)
    for i in range(codes.shape[0]):
        code = codes[i]
        axis = code // n
        tail = code - axis * n
        head = tail + strides[axis]
        lt = _walk(vmatch, strides, n, tail, scratch)
        if lt < 0:
            return bits, False
        for j in range(lt):
            bits[scratch[j]] = True
        lh = _walk(vmatch, strides, n, head, scratch)
        if lh < 0:
            return bits, False
        for j in range(lh):
            bits[scratch[j]] = True
    return bits, True
