"""Pure-Python combinatorial kernels.

Fallback backend used when the compiled extension is unavailable (or forced
via GCNWIS_PURE_PYTHON=1). The compiled kernels in ``_speedups.pyx`` mirror
this module operation for operation, so both backends explore identical
search trees and return identical results.

All kernels take CSR adjacency arrays (``indptr``, ``indices``) over nodes
0..n-1. The branch-and-bound kernel additionally assumes its vertices are
already relabeled in branching-priority order (vertex 0 is branched first).
"""

from __future__ import annotations

import sys
import time

import numpy as np

_TIME_CHECK_MASK = 1023  # check the deadline every 1024 explored nodes


def greedy_sweep(indptr, indices, order):
    """Sequential greedy: take each vertex of ``order`` unless removed,
    removing its neighbors. Returns a uint8 membership mask."""
    n = len(indptr) - 1
    member = np.zeros(n, dtype=np.uint8)
    removed = np.zeros(n, dtype=bool)
    for v in order:
        if removed[v]:
            continue
        member[v] = 1
        removed[indices[indptr[v] : indptr[v + 1]]] = True
    return member


def local_greedy_rounds(indptr, indices, w, single_round=False):
    """Round-based distributed greedy with ID tie-breaking.

    Per decision round, every undecided node joins iff it beats all its
    undecided neighbors under the strict order (weight, then smaller ID
    wins); joiners' neighbors drop out. Returns (member mask, per-round
    decided counts).
    """
    n = len(indptr) - 1
    w = np.asarray(w, dtype=np.float64)
    # Scalar rank encoding the lexicographic order (w, -id): v beats u
    # exactly when rank[v] > rank[u].
    rank = np.empty(n, dtype=np.int64)
    rank[np.lexsort((-np.arange(n), w))] = np.arange(n)
    src = np.repeat(np.arange(n), np.diff(indptr))

    state = np.zeros(n, dtype=np.int8)  # 0 undecided, 1 member, 2 out
    counts = []
    undecided = n
    while undecided > 0:
        und = state == 0
        nbr_rank = np.where(und[indices], rank[indices], -1)
        best_nbr = np.full(n, -1, dtype=np.int64)
        np.maximum.at(best_nbr, src, nbr_rank)
        join = und & (rank > best_nbr)
        state[join] = 1
        knocked = np.zeros(n, dtype=bool)
        knocked[indices[join[src]]] = True
        out = und & ~join & knocked
        state[out] = 2
        decided = int(join.sum() + out.sum())
        counts.append(decided)
        undecided -= decided
        if single_round:
            break
    return (state == 1).astype(np.uint8), np.asarray(counts, dtype=np.int64)


def _adj_bitsets(indptr, indices):
    n = len(indptr) - 1
    adj = [0] * n
    for v in range(n):
        mask = 0
        for u in indices[indptr[v] : indptr[v + 1]]:
            mask |= 1 << int(u)
        adj[v] = mask
    return adj


class _Exhausted(Exception):
    pass


def branch_and_bound(indptr, indices, w, init_members, init_value, max_nodes, time_limit):
    """Exact MWIS search over positively-weighted vertices.

    Vertices must be pre-ordered by branching priority. Branches on the
    first candidate vertex, prunes with a greedy clique-cover bound, and
    keeps the incumbent passed in (a greedy warm start). Returns
    (member mask, best value, explored node count, certified, root bound).
    """
    n = len(indptr) - 1
    w = np.asarray(w, dtype=np.float64)
    wl = w.tolist()
    adj = _adj_bitsets(indptr, indices)
    full = (1 << n) - 1

    best_val = float(init_value)
    best_mask = 0
    for v in range(n):
        if init_members[v]:
            best_mask |= 1 << v

    def clique_bound(cand, need):
        """Greedy clique-cover bound of the candidate set.

        Returns the bound, or -1.0 as soon as the partial bound exceeds
        ``need`` (no prune possible, so stop paying for precision).
        """
        clique_masks = []
        clique_max = []
        total = 0.0
        m = cand
        while m:
            b = m & -m
            v = b.bit_length() - 1
            m ^= b
            av = adj[v]
            wv = wl[v]
            for i, cm in enumerate(clique_masks):
                if cm & ~av == 0:  # v is adjacent to every clique member
                    clique_masks[i] = cm | b
                    if wv > clique_max[i]:
                        total += wv - clique_max[i]
                        clique_max[i] = wv
                    break
            else:
                clique_masks.append(b)
                clique_max.append(wv)
                total += wv
            if need is not None and total > need:
                return -1.0
        return total

    root_bound = clique_bound(full, None) if n else 0.0

    state = {"explored": 0, "deadline": None}
    if time_limit is not None and time_limit > 0:
        state["deadline"] = time.monotonic() + time_limit
    budget = max_nodes if max_nodes is not None else float("inf")

    cur_set: list[int] = []

    def dfs(cand, cur_val):
        nonlocal best_val, best_mask
        state["explored"] += 1
        if state["explored"] > budget:
            raise _Exhausted
        if state["deadline"] is not None and state["explored"] & _TIME_CHECK_MASK == 0:
            if time.monotonic() > state["deadline"]:
                raise _Exhausted
        if cand == 0:
            if cur_val > best_val:
                best_val = cur_val
                best_mask = 0
                for v in cur_set:
                    best_mask |= 1 << v
            return
        bound = clique_bound(cand, best_val - cur_val)
        if bound >= 0.0 and cur_val + bound <= best_val:
            return
        b = cand & -cand
        v = b.bit_length() - 1
        cur_set.append(v)
        dfs(cand & ~adj[v] & ~b, cur_val + wl[v])
        cur_set.pop()
        dfs(cand & ~b, cur_val)

    certified = True
    if n:
        # DFS depth is bounded by n; leave headroom for the caller's stack.
        limit = sys.getrecursionlimit()
        if limit < 2 * n + 200:
            sys.setrecursionlimit(2 * n + 200)
        try:
            dfs(full, 0.0)
        except _Exhausted:
            certified = False
        finally:
            sys.setrecursionlimit(limit)

    member = np.zeros(n, dtype=np.uint8)
    for v in range(n):
        if best_mask >> v & 1:
            member[v] = 1
    return member, best_val, state["explored"], certified, root_bound
