"""Approximate minimum degree ordering.

Quotient-graph elimination with approximate external degrees, element
absorption (including aggressive absorption) and supervariable detection.
Dense-row postponement and mass elimination are not implemented; the
local matrices this package orders are small and regular enough that they
do not pay off.
"""
import numpy as np

from .._jit import njit
from .matrix import INDEX, CompressedSparseMatrix, Permutation

LIVE, ELEMENT, ABSORBED, MERGED = 0, 1, 2, 3


def symmetric_pattern(A: CompressedSparseMatrix):
    """Off-diagonal pattern of ``A + A^T`` as (indptr, indices)."""
    rows = A.row_indices()
    cols = A.col_indices
    off = rows != cols
    r = np.concatenate([rows[off], cols[off]])
    c = np.concatenate([cols[off], rows[off]])
    S = CompressedSparseMatrix.from_coo(A.nrows, A.ncols, r, c, np.ones(r.size))
    return S.row_offsets, S.col_indices


@njit
def _bucket_insert(i, d, head, nxt, prv):
    h = head[d]
    nxt[i] = h
    prv[i] = -1
    if h != -1:
        prv[h] = i
    head[d] = i


@njit
def _bucket_remove(i, d, head, nxt, prv):
    if prv[i] != -1:
        nxt[prv[i]] = nxt[i]
    else:
        head[d] = nxt[i]
    if nxt[i] != -1:
        prv[nxt[i]] = prv[i]
    nxt[i] = -1
    prv[i] = -1


@njit
def _amd_kernel(n, ap, ai):
    nnz = ap[n]
    cap = 2 * nnz + 4 * n + 16
    pool = np.empty(cap, dtype=np.int64)
    pool[:nnz] = ai
    top = nnz

    start = ap[:n].copy()
    llen = np.empty(n, dtype=np.int64)   # list length (elements + variables)
    elen = np.zeros(n, dtype=np.int64)   # leading element entries in a variable's list
    for i in range(n):
        llen[i] = ap[i + 1] - ap[i]
    status = np.zeros(n, dtype=np.int64)
    nv = np.ones(n, dtype=np.int64)
    deg = llen.copy()

    head = np.full(n + 1, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    prv = np.full(n, -1, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        _bucket_insert(i, deg[i], head, nxt, prv)
    mindeg = 0

    mark = np.zeros(n, dtype=np.int64)
    wstep = np.full(n, -1, dtype=np.int64)
    w = np.zeros(n, dtype=np.int64)
    tag = 0
    member_next = np.full(n, -1, dtype=np.int64)
    member_tail = np.arange(n)
    scratch = np.empty(n + 1, dtype=np.int64)
    lp = np.empty(n, dtype=np.int64)
    hashes = np.empty(n, dtype=np.int64)

    pivots = np.empty(n, dtype=np.int64)
    npiv = 0
    live_weight = n
    step = 0

    while live_weight > 0:
        while head[mindeg] == -1:
            mindeg += 1
        p = head[mindeg]
        _bucket_remove(p, mindeg, head, nxt, prv)
        pivots[npiv] = p
        npiv += 1
        step += 1

        # grow the pool so the new element list fits at the top
        bound = llen[p]
        for q in range(start[p], start[p] + elen[p]):
            e = pool[q]
            if status[e] == ELEMENT:
                bound += llen[e]
        if top + bound > cap:
            newcap = max(2 * cap, top + bound + n)
            grown = np.empty(newcap, dtype=np.int64)
            grown[:top] = pool[:top]
            pool = grown
            cap = newcap

        # Lp = (A_p U union of L_e over e in E_p) minus p, live variables only
        tag += 1
        mark[p] = tag
        lstart = top
        lpw = 0
        nlp = 0
        for q in range(start[p], start[p] + llen[p]):
            x = pool[q]
            if q < start[p] + elen[p]:
                if status[x] != ELEMENT:
                    continue
                for r in range(start[x], start[x] + llen[x]):
                    v = pool[r]
                    if status[v] == LIVE and mark[v] != tag:
                        mark[v] = tag
                        pool[top] = v
                        top += 1
                        lp[nlp] = v
                        nlp += 1
                        lpw += nv[v]
                status[x] = ABSORBED
            else:
                v = x
                if status[v] == LIVE and mark[v] != tag:
                    mark[v] = tag
                    pool[top] = v
                    top += 1
                    lp[nlp] = v
                    nlp += 1
                    lpw += nv[v]
        status[p] = ELEMENT
        start[p] = lstart
        llen[p] = top - lstart
        elen[p] = 0
        live_weight -= nv[p]

        for t in range(nlp):
            i = lp[t]
            _bucket_remove(i, deg[i], head, nxt, prv)

        # w[e] = weight of L_e outside Lp, for elements adjacent to Lp
        for t in range(nlp):
            i = lp[t]
            for q in range(start[i], start[i] + elen[i]):
                e = pool[q]
                if status[e] != ELEMENT or e == p:
                    continue
                if wstep[e] != step:
                    wstep[e] = step
                    # compact L_e while measuring it
                    s = start[e]
                    wr = s
                    tot = 0
                    for r in range(s, s + llen[e]):
                        v = pool[r]
                        if status[v] == LIVE:
                            pool[wr] = v
                            wr += 1
                            tot += nv[v]
                    llen[e] = wr - s
                    w[e] = tot
                w[e] -= nv[i]

        # rewrite each variable's list and bound its external degree
        for t in range(nlp):
            i = lp[t]
            s = start[i]
            ln = llen[i]
            for q in range(ln):
                scratch[q] = pool[s + q]
            ne = elen[i]
            wr = s
            dext = 0
            h = 0
            for q in range(ne):
                e = scratch[q]
                if status[e] != ELEMENT or e == p:
                    continue
                if w[e] <= 0:
                    status[e] = ABSORBED
                    continue
                pool[wr] = e
                wr += 1
                dext += w[e]
                h += e
            pool[wr] = p
            wr += 1
            h += p
            new_elen = wr - s
            for q in range(ne, ln):
                v = scratch[q]
                if status[v] == LIVE and mark[v] != tag:
                    pool[wr] = v
                    wr += 1
                    dext += nv[v]
                    h += v
            elen[i] = new_elen
            llen[i] = wr - s
            ext = lpw - nv[i]
            d = deg[i] + ext
            if dext + ext < d:
                d = dext + ext
            if live_weight - nv[i] < d:
                d = live_weight - nv[i]
            if d < 0:
                d = 0
            deg[i] = d
            hashes[t] = h % (n + 1)

        # supervariables: identical quotient-graph adjacency within Lp
        if nlp > 1:
            order = np.argsort(hashes[:nlp], kind="mergesort")
            a = 0
            while a < nlp:
                b = a
                while b + 1 < nlp and hashes[order[b + 1]] == hashes[order[a]]:
                    b += 1
                for x in range(a, b + 1):
                    i = lp[order[x]]
                    if status[i] != LIVE:
                        continue
                    tag += 1
                    for q in range(start[i], start[i] + llen[i]):
                        mark[pool[q]] = tag
                    for y in range(x + 1, b + 1):
                        j = lp[order[y]]
                        if status[j] != LIVE or llen[j] != llen[i] or elen[j] != elen[i]:
                            continue
                        same = True
                        for q in range(start[j], start[j] + llen[j]):
                            if mark[pool[q]] != tag:
                                same = False
                                break
                        if same:
                            nv[i] += nv[j]
                            deg[i] -= nv[j]
                            if deg[i] < 0:
                                deg[i] = 0
                            nv[j] = 0
                            status[j] = MERGED
                            member_next[member_tail[i]] = j
                            member_tail[i] = member_tail[j]
                a = b + 1
            # restore Lp marks for later membership tests of this step
            tag += 1

        for t in range(nlp):
            i = lp[t]
            if status[i] == LIVE:
                d = deg[i]
                _bucket_insert(i, d, head, nxt, prv)
                if d < mindeg:
                    mindeg = d

    out = np.empty(n, dtype=np.int64)
    k = 0
    for t in range(npiv):
        v = pivots[t]
        while v != -1:
            out[k] = v
            k += 1
            v = member_next[v]
    return out


def amd_order(pattern: CompressedSparseMatrix) -> Permutation:
    """Fill-reducing elimination order of the pattern of ``A + A^T``.

    ``forward[k]`` is the index eliminated at step k.
    """
    if pattern.nrows != pattern.ncols:
        raise ValueError(f"amd_order needs a square matrix, got {pattern.shape}")
    n = pattern.nrows
    if n == 0:
        return Permutation.from_forward(np.zeros(0, dtype=INDEX))
    ap, ai = symmetric_pattern(pattern)
    return Permutation.from_forward(_amd_kernel(n, ap, ai))
