# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled combinatorial kernels (greedy sweep, local greedy rounds,
branch-and-bound MWIS search).

Mirrors ``_pykernels`` operation for operation: identical branching order,
identical clique-cover bound with the same early-abort rule, identical
budget accounting. Keep the two in lockstep when changing either.
"""

from libc.stdlib cimport calloc, free, malloc
from libc.string cimport memcpy, memset

from posix.time cimport CLOCK_MONOTONIC, clock_gettime, timespec

import numpy as np

ctypedef unsigned long long u64
ctypedef long long i64

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


cdef inline double _monotonic() nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return ts.tv_sec + ts.tv_nsec * 1e-9


def greedy_sweep(const i64[::1] indptr, const i64[::1] indices, const i64[::1] order):
    """Sequential greedy sweep over a precomputed priority order."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    member_arr = np.zeros(n, dtype=np.uint8)
    removed_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] member = member_arr
    cdef unsigned char[::1] removed = removed_arr
    cdef Py_ssize_t t, v, e
    for t in range(n):
        v = order[t]
        if removed[v]:
            continue
        member[v] = 1
        for e in range(indptr[v], indptr[v + 1]):
            removed[indices[e]] = 1
    return member_arr


def local_greedy_rounds(const i64[::1] indptr, const i64[::1] indices,
                        const double[::1] w, bint single_round=False):
    """Round-based distributed greedy with smaller-ID tie-breaking."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    state_arr = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] state = state_arr
    cdef i64* joiners = <i64*> malloc(n * sizeof(i64) if n else sizeof(i64))
    if joiners == NULL:
        raise MemoryError
    counts = []
    cdef Py_ssize_t undecided = n
    cdef Py_ssize_t v, u, e, j, njoin, decided
    cdef double wv
    cdef bint win
    try:
        while undecided > 0:
            njoin = 0
            for v in range(n):
                if state[v]:
                    continue
                wv = w[v]
                win = True
                for e in range(indptr[v], indptr[v + 1]):
                    u = indices[e]
                    if state[u]:
                        continue
                    if w[u] > wv or (w[u] == wv and u < v):
                        win = False
                        break
                if win:
                    joiners[njoin] = v
                    njoin += 1
            decided = 0
            for j in range(njoin):
                v = joiners[j]
                state[v] = 1
                decided += 1
                for e in range(indptr[v], indptr[v + 1]):
                    u = indices[e]
                    if state[u] == 0:
                        state[u] = 2
                        decided += 1
            counts.append(decided)
            undecided -= decided
            if single_round:
                break
    finally:
        free(joiners)
    return (state_arr == 1).astype(np.uint8), np.asarray(counts, dtype=np.int64)


cdef struct BnbCtx:
    Py_ssize_t n
    Py_ssize_t words
    u64* adj          # n * words bit rows
    u64* arena        # (n + 2) * words candidate masks, one per depth
    u64* cliques      # n * words scratch for the bound
    double* cmax      # per-clique max weight scratch
    double* w
    i64* cur_set
    i64* best_set
    Py_ssize_t best_len
    double best_val
    i64 explored
    i64 max_nodes
    double deadline
    bint has_deadline


cdef double _clique_bound(BnbCtx* c, u64* cand, double need, bint use_need) noexcept nogil:
    """Greedy clique-cover bound; -1.0 signals early abort (no prune possible)."""
    cdef Py_ssize_t ncl = 0
    cdef double total = 0.0
    cdef Py_ssize_t k, i, kk, v
    cdef u64 m, b
    cdef u64* av
    cdef u64* cm
    cdef double wv
    cdef bint ok, placed
    for k in range(c.words):
        m = cand[k]
        while m:
            b = m & (~m + 1)
            v = (k << 6) + __builtin_ctzll(b)
            m ^= b
            av = c.adj + v * c.words
            wv = c.w[v]
            placed = False
            for i in range(ncl):
                cm = c.cliques + i * c.words
                ok = True
                for kk in range(c.words):
                    if cm[kk] & ~av[kk]:
                        ok = False
                        break
                if ok:
                    cm[k] |= b
                    if wv > c.cmax[i]:
                        total += wv - c.cmax[i]
                        c.cmax[i] = wv
                    placed = True
                    break
            if not placed:
                cm = c.cliques + ncl * c.words
                for kk in range(c.words):
                    cm[kk] = 0
                cm[k] = b
                c.cmax[ncl] = wv
                total += wv
                ncl += 1
            if use_need and total > need:
                return -1.0
    return total


cdef int _dfs(BnbCtx* c, u64* cand, double cur_val, Py_ssize_t depth,
              Py_ssize_t set_len) noexcept nogil:
    """Returns 0 when the subtree is fully explored, 1 on budget exhaustion."""
    cdef Py_ssize_t k, v
    cdef u64 b
    cdef u64* adjrow
    cdef u64* child
    cdef bint empty
    cdef double bound

    c.explored += 1
    if c.explored > c.max_nodes:
        return 1
    if c.has_deadline and (c.explored & 1023) == 0:
        if _monotonic() > c.deadline:
            return 1

    empty = True
    for k in range(c.words):
        if cand[k]:
            empty = False
            break
    if empty:
        if cur_val > c.best_val:
            c.best_val = cur_val
            c.best_len = set_len
            memcpy(c.best_set, c.cur_set, set_len * sizeof(i64))
        return 0

    bound = _clique_bound(c, cand, c.best_val - cur_val, True)
    if bound >= 0.0 and cur_val + bound <= c.best_val:
        return 0

    for k in range(c.words):
        if cand[k]:
            break
    b = cand[k] & (~cand[k] + 1)
    v = (k << 6) + __builtin_ctzll(b)

    child = c.arena + (depth + 1) * c.words
    adjrow = c.adj + v * c.words
    for k in range(c.words):
        child[k] = cand[k] & ~adjrow[k]
    child[v >> 6] &= ~b
    c.cur_set[set_len] = v
    if _dfs(c, child, cur_val + c.w[v], depth + 1, set_len + 1):
        return 1

    child = c.arena + (depth + 1) * c.words
    for k in range(c.words):
        child[k] = cand[k]
    child[v >> 6] &= ~b
    return _dfs(c, child, cur_val, depth + 1, set_len)


def branch_and_bound(const i64[::1] indptr, const i64[::1] indices,
                     const double[::1] w, const unsigned char[::1] init_members,
                     double init_value, max_nodes, time_limit):
    """Exact MWIS over positively-weighted, priority-ordered vertices.

    Returns (member mask, best value, explored node count, certified,
    root clique-cover bound). Matches the pure-Python kernel exactly.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t words = (n + 63) >> 6 if n else 1
    cdef BnbCtx c
    cdef Py_ssize_t v, e, k
    cdef int status = 0
    cdef double root_bound = 0.0
    cdef u64* root

    member_arr = np.zeros(n, dtype=np.uint8)
    if n == 0:
        return member_arr, float(init_value), 0, True, 0.0

    c.n = n
    c.words = words
    c.adj = <u64*> calloc(n * words, sizeof(u64))
    c.arena = <u64*> calloc((n + 2) * words, sizeof(u64))
    c.cliques = <u64*> malloc(n * words * sizeof(u64))
    c.cmax = <double*> malloc(n * sizeof(double))
    c.w = <double*> malloc(n * sizeof(double))
    c.cur_set = <i64*> malloc(n * sizeof(i64))
    c.best_set = <i64*> malloc(n * sizeof(i64))
    if (c.adj == NULL or c.arena == NULL or c.cliques == NULL or c.cmax == NULL
            or c.w == NULL or c.cur_set == NULL or c.best_set == NULL):
        free(c.adj); free(c.arena); free(c.cliques); free(c.cmax)
        free(c.w); free(c.cur_set); free(c.best_set)
        raise MemoryError

    try:
        for v in range(n):
            c.w[v] = w[v]
            for e in range(indptr[v], indptr[v + 1]):
                c.adj[v * words + (indices[e] >> 6)] |= <u64>1 << (indices[e] & 63)

        c.best_val = init_value
        c.best_len = 0
        for v in range(n):
            if init_members[v]:
                c.best_set[c.best_len] = v
                c.best_len += 1
        c.explored = 0
        c.max_nodes = <i64> max_nodes if max_nodes is not None else (<i64>1) << 62
        if time_limit is not None and time_limit > 0:
            c.deadline = _monotonic() + <double> time_limit
            c.has_deadline = True
        else:
            c.deadline = 0.0
            c.has_deadline = False

        root = c.arena  # depth-0 slot
        for v in range(n):
            root[v >> 6] |= <u64>1 << (v & 63)
        root_bound = _clique_bound(&c, root, 0.0, False)

        status = _dfs(&c, root, 0.0, 0, 0)

        cdef_members = member_arr
        for k in range(c.best_len):
            cdef_members[c.best_set[k]] = 1
        return (member_arr, c.best_val, int(c.explored), status == 0,
                float(root_bound))
    finally:
        free(c.adj); free(c.arena); free(c.cliques); free(c.cmax)
        free(c.w); free(c.cur_set); free(c.best_set)
