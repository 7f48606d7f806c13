"""Held-out evaluation against the exact oracle."""

from __future__ import annotations

from .errors import BudgetExhaustedError, RatioError
from .gcn import GcnParams, gcn_schedule
from .reports import EvalRecord, EvalReport
from .solvers import SolverBudget, approximation_ratio, exact_mwis, local_greedy
from .training import GraphInstance

__all__ = ["evaluate"]


def evaluate(
    params: GcnParams,
    testset: list[GraphInstance],
    oracle_budget: SolverBudget | None = None,
    normalize: bool = True,
) -> EvalReport:
    """Approximation ratios of the local greedy and the embedding pipeline.

    Instances on which the oracle exhausts its budget (or the optimum is
    zero) are excluded and counted, the run continues.
    """
    report = EvalReport()
    for inst in testset:
        try:
            opt = exact_mwis(inst.graph, inst.utilities, oracle_budget)
        except BudgetExhaustedError:
            report.excluded += 1
            continue
        if opt.total_utility <= 0:
            report.excluded += 1
            continue
        greedy_set, greedy_trace = local_greedy(inst.graph, inst.utilities)
        gcn_set, _, gcn_trace = gcn_schedule(
            params, inst.graph, inst.utilities, normalize=normalize
        )
        gid = f"g{inst.index:05d}"
        for solver, sol, trace in (
            ("greedy", greedy_set, greedy_trace),
            ("gcn", gcn_set, gcn_trace),
        ):
            report.records.append(
                EvalRecord(
                    graph_id=gid,
                    label=inst.label,
                    num_nodes=inst.graph.num_nodes,
                    avg_degree=inst.avg_degree,
                    solver=solver,
                    ratio=approximation_ratio(sol, opt),
                    rounds=trace.total_exchange_rounds,
                )
            )
    return report
