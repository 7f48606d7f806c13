"""MWIS solvers over conflict graphs.

Three routes to a solution:

* ``exact_mwis``    -- certified optimum via branch-and-bound (budgeted),
* ``greedy_mwis``   -- centralized sequential greedy,
* ``local_greedy``  -- round-based distributed greedy with ID tie-breaking,
                       which returns the same member set as the centralized
                       greedy plus a communication-round trace.

Plus ``validate_set`` (independence / maximality / utility recomputation)
and ``approximation_ratio``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    BudgetExhaustedError,
    NotIndependentError,
    ParameterError,
    RatioError,
)
from .graph import Graph, check_utilities

__all__ = [
    "IndependentSet",
    "SolverBudget",
    "RoundTrace",
    "exact_mwis",
    "greedy_mwis",
    "local_greedy",
    "validate_set",
    "approximation_ratio",
]

_RATIO_SLACK = 1e-9


@dataclass(frozen=True)
class IndependentSet:
    """A validated solution: sorted members, their total weight, maximality."""

    members: tuple[int, ...]
    total_utility: float
    is_maximal: bool

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class SolverBudget:
    """Limits for the exact solver; at least one of the two must be finite."""

    max_branch_nodes: int | None = 10_000_000
    time_limit: float | None = 60.0

    def __post_init__(self):
        if self.max_branch_nodes is None and self.time_limit is None:
            raise ParameterError("at least one budget limit must be finite")
        if self.max_branch_nodes is not None and self.max_branch_nodes <= 0:
            raise ParameterError("max_branch_nodes must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ParameterError("time_limit must be positive")


@dataclass(frozen=True)
class RoundTrace:
    """Communication-round accounting for a distributed solve.

    ``weight_exchange_rounds`` counts rounds spent broadcasting numeric
    values (the utility/weight exchange, plus one round per GCN layer when
    traced through the embedding pipeline). ``state_exchange_rounds`` counts
    the rounds spent broadcasting join/out decisions between decision
    rounds. ``decided_per_round`` has one entry per decision round; for a
    run to completion the entries sum to num_nodes.
    """

    weight_exchange_rounds: int
    state_exchange_rounds: int
    decided_per_round: tuple[int, ...] = field(default_factory=tuple)

    @property
    def decision_rounds(self) -> int:
        return len(self.decided_per_round)

    @property
    def total_exchange_rounds(self) -> int:
        return self.weight_exchange_rounds + self.state_exchange_rounds


def _as_weights(g: Graph, values) -> np.ndarray:
    w = np.asarray(values, dtype=np.float64)
    if w.shape != (g.num_nodes,):
        raise ParameterError(
            f"weights shape {w.shape} does not match graph size {g.num_nodes}"
        )
    if w.size and not np.all(np.isfinite(w)):
        raise ParameterError("weights must be finite")
    return w


def _set_total(w: np.ndarray, members) -> float:
    # fsum: exactly-rounded and order-independent, so equal member sets give
    # bit-identical totals regardless of solver route.
    return math.fsum(float(w[v]) for v in members)


def validate_set(g: Graph, s, u) -> IndependentSet:
    """Check independence of ``s``, recompute its utility, flag maximality."""
    u = _as_weights(g, u)
    members = sorted(int(v) for v in s)
    seen = set()
    for v in members:
        if not 0 <= v < g.num_nodes:
            raise ParameterError(f"node {v} out of range")
        if v in seen:
            raise ParameterError(f"duplicate node {v}")
        seen.add(v)
    for v in members:
        hits = np.intersect1d(g.neighbors(v), members, assume_unique=False)
        if hits.size:
            raise NotIndependentError((v, int(hits[0])))
    in_set = np.zeros(g.num_nodes, dtype=bool)
    in_set[members] = True
    maximal = True
    for v in range(g.num_nodes):
        if not in_set[v] and not in_set[g.neighbors(v)].any():
            maximal = False
            break
    return IndependentSet(tuple(members), _set_total(u, members), maximal)


def greedy_mwis(g: Graph, w) -> IndependentSet:
    """Sequential greedy: repeatedly take the heaviest undecided node
    (ties to the smaller ID) and drop its neighbors. Always maximal."""
    w = _as_weights(g, w)
    order = np.lexsort((np.arange(g.num_nodes), -w))
    member = kernels.greedy_sweep(g.indptr, g.indices, order)
    members = tuple(int(v) for v in np.flatnonzero(member))
    return IndependentSet(members, _set_total(w, members), True)


def local_greedy(g: Graph, w, single_round: bool = False) -> tuple[IndependentSet, RoundTrace]:
    """Distributed greedy simulated in synchronous rounds.

    Round 1 exchanges weights; in each decision round an undecided node
    joins iff it beats every undecided neighbor under (weight, smaller ID
    wins), and joiners' neighbors drop out. Iterates to maximality unless
    ``single_round`` is set (ablation mode, not guaranteed maximal).
    """
    w = _as_weights(g, w)
    member, counts = kernels.local_greedy_rounds(g.indptr, g.indices, w, single_round)
    members = tuple(int(v) for v in np.flatnonzero(member))
    if single_round:
        result = validate_set(g, members, w)
    else:
        result = IndependentSet(members, _set_total(w, members), True)
    n = g.num_nodes
    trace = RoundTrace(
        weight_exchange_rounds=1 if n else 0,
        state_exchange_rounds=max(len(counts) - 1, 0),
        decided_per_round=tuple(int(c) for c in counts),
    )
    return result, trace


def _components(g: Graph, keep: np.ndarray) -> list[list[int]]:
    """Connected components of the subgraph induced by the ``keep`` mask."""
    seen = np.zeros(g.num_nodes, dtype=bool)
    comps = []
    for start in range(g.num_nodes):
        if not keep[start] or seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in g.neighbors(v):
                if keep[u] and not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        comps.append(sorted(comp))
    return comps


def _induced_csr(g: Graph, nodes: list[int], order: np.ndarray):
    """CSR of the induced subgraph with vertices relabeled along ``order``."""
    k = len(nodes)
    pos_of_orig = {v: i for i, v in enumerate(nodes)}
    new_of_pos = np.empty(k, dtype=np.int64)
    new_of_pos[order] = np.arange(k)
    adj = [[] for _ in range(k)]
    for i, v in enumerate(nodes):
        vi = new_of_pos[i]
        for u in g.neighbors(v):
            j = pos_of_orig.get(int(u))
            if j is not None:
                adj[vi].append(int(new_of_pos[j]))
    indptr = np.zeros(k + 1, dtype=np.int64)
    flat = []
    for vi in range(k):
        adj[vi].sort()
        flat.extend(adj[vi])
        indptr[vi + 1] = indptr[vi] + len(adj[vi])
    return indptr, np.asarray(flat, dtype=np.int64)


def _clique_cover_bound(indptr, indices, w) -> float:
    """First-fit clique-cover upper bound, used only for gap reporting."""
    k = len(indptr) - 1
    cliques: list[set[int]] = []
    cmax: list[float] = []
    total = 0.0
    for v in range(k):
        nbrs = set(int(u) for u in indices[indptr[v] : indptr[v + 1]])
        for i, members in enumerate(cliques):
            if members <= nbrs:
                members.add(v)
                if w[v] > cmax[i]:
                    total += w[v] - cmax[i]
                    cmax[i] = w[v]
                break
        else:
            cliques.append({v})
            cmax.append(float(w[v]))
            total += w[v]
    return total


def exact_mwis(g: Graph, u, budget: SolverBudget | None = None) -> IndependentSet:
    """Certified maximum-weight independent set via branch-and-bound.

    Zero-weight vertices cannot change the optimum and are excluded from the
    search; each connected component is solved separately with vertices
    ordered by descending weight/degree ratio and a greedy warm start.
    Raises BudgetExhaustedError (carrying the incumbent and the remaining
    bound gap) when the budget runs out before certification.
    """
    u = check_utilities(g, u)
    budget = budget or SolverBudget()
    deadline = None
    if budget.time_limit is not None:
        deadline = time.monotonic() + budget.time_limit
    nodes_left = budget.max_branch_nodes

    positive = u > 0
    comps = _components(g, positive)
    members: list[int] = []
    gap = 0.0  # sum over uncertified components of (root bound - incumbent)
    exhausted = False

    for ci, comp in enumerate(comps):
        k = len(comp)
        w_comp = u[comp]
        deg = np.array(
            [int(positive[g.neighbors(v)].sum()) for v in comp], dtype=np.float64
        )
        order = np.lexsort((np.asarray(comp), -(w_comp / (deg + 1.0))))
        indptr, indices = _induced_csr(g, comp, order)
        w_local = w_comp[order]

        greedy_order = np.lexsort((np.arange(k), -w_local))
        init = kernels.greedy_sweep(indptr, indices, greedy_order)
        init_value = _set_total(w_local, np.flatnonzero(init))

        time_left = None
        if deadline is not None:
            time_left = deadline - time.monotonic()
        if exhausted or (time_left is not None and time_left <= 0):
            # Untouched component: keep the greedy incumbent, bound the loss.
            exhausted = True
            mask, value, certified = init, init_value, False
        else:
            mask, value, explored, certified, _ = kernels.branch_and_bound(
                indptr, indices, w_local, init, init_value, nodes_left, time_left
            )
            if nodes_left is not None:
                nodes_left = max(nodes_left - explored, 1)
        if not certified:
            exhausted = True
            gap += _clique_cover_bound(indptr, indices, w_local) - value
        orig = np.asarray(comp)[order]
        members.extend(int(orig[v]) for v in np.flatnonzero(mask))

    result = validate_set(g, members, u)
    if exhausted:
        raise BudgetExhaustedError(result, max(gap, 0.0))
    return result


def approximation_ratio(candidate: IndependentSet, optimal: IndependentSet) -> float:
    """candidate utility / optimal utility, clamped into (0, 1]."""
    if optimal.total_utility <= 0:
        raise RatioError("optimal utility is zero; ratio undefined")
    ratio = candidate.total_utility / optimal.total_utility
    if ratio > 1.0 + _RATIO_SLACK:
        raise RatioError(
            f"candidate ({candidate.total_utility!r}) exceeds the certified "
            f"optimum ({optimal.total_utility!r}); oracle bug"
        )
    return min(ratio, 1.0)
