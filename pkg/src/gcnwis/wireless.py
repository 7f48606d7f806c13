"""Queue-driven wireless link-scheduling simulator.

Nodes are scattered uniformly in a square; links form below a distance
threshold and interfere when any pair of their endpoints is closer than the
interference radius. The conflict graph has one vertex per link, and each
slot schedules an independent set in it. Per-slot utilities are
u = min(queue, rate): the packets a link could actually move.

All randomness (rates, arrivals) is drawn from a stream derived only from
(seed, slot structure), never from scheduling outcomes, so competing
schedulers face identical traffic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GraphFormatError, ParameterError
from .gcn import GcnParams, gcn_schedule
from .graph import Graph
from .reports import EvalRecord, EvalReport
from .rng import substream
from .solvers import (
    IndependentSet,
    SolverBudget,
    exact_mwis,
    local_greedy,
    validate_set,
)

__all__ = [
    "WirelessNetwork",
    "SlotResult",
    "ScheduleTrace",
    "gen_network",
    "sim_step",
    "run_instance",
    "compare_schedulers",
    "greedy_scheduler",
    "exact_scheduler",
    "gcn_scheduler",
    "save_network",
    "load_network",
]

MAX_RATE = 100  # packets/slot; rates are uniform on {0, ..., MAX_RATE}


@dataclass(frozen=True)
class WirelessNetwork:
    """Node geometry, the links it induces, and their conflict graph.

    ``sources[k]`` records which endpoint of link k originates its 1-hop
    flow; with per-link queues and single-hop delivery this is metadata
    only and does not affect the dynamics.
    """

    positions: np.ndarray  # (num_nodes, 2)
    links: tuple[tuple[int, int], ...]  # i < j node pairs
    sources: tuple[int, ...]
    conflict_graph: Graph
    area: float
    link_radius: float
    interference_radius: float

    @property
    def num_links(self) -> int:
        return len(self.links)


@dataclass(frozen=True)
class SlotResult:
    scheduled: IndependentSet
    rates: np.ndarray
    utilities: np.ndarray
    delivered: np.ndarray
    arrivals: np.ndarray
    rounds: int = 0


@dataclass(frozen=True)
class ScheduleTrace:
    slots: tuple[SlotResult, ...]
    total_delivered: int
    final_queues: np.ndarray


def _conflict_edges(positions: np.ndarray, links, interference_radius: float):
    """Link pairs whose closest endpoint pair is within the interference
    radius; links sharing a node conflict automatically (distance 0)."""
    ends = np.asarray(links, dtype=np.int64)
    edges = []
    for a in range(len(links)):
        pa = positions[ends[a]]  # (2, 2)
        for b in range(a + 1, len(links)):
            pb = positions[ends[b]]
            d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
            if d2.min() < interference_radius**2:
                edges.append((a, b))
    return edges


def gen_network(
    n: int,
    area: float,
    link_radius: float,
    interference_radius: float,
    seed: int,
) -> WirelessNetwork:
    """Uniform node placement in a sqrt(area) x sqrt(area) square."""
    if n < 1 or area <= 0 or link_radius <= 0 or interference_radius <= 0:
        raise ParameterError("network parameters must be positive")
    rng = substream(seed, "network")
    side = math.sqrt(area)
    positions = rng.random((n, 2)) * side
    links = []
    for i in range(n):
        d2 = ((positions[i + 1 :] - positions[i]) ** 2).sum(axis=1)
        for off in np.flatnonzero(d2 < link_radius**2):
            links.append((i, i + 1 + int(off)))
    sources = tuple(
        int(links[k][int(rng.integers(0, 2))]) for k in range(len(links))
    )
    conflict = Graph.from_edges(
        len(links), _conflict_edges(positions, links, interference_radius)
    )
    return WirelessNetwork(
        positions=positions,
        links=tuple(links),
        sources=sources,
        conflict_graph=conflict,
        area=float(area),
        link_radius=float(link_radius),
        interference_radius=float(interference_radius),
    )


# ---------------------------------------------------------------------------
# Schedulers: callables (conflict graph, utilities) -> (IndependentSet,
# exchange rounds used). The centralized exact reference reports 0 rounds.
# ---------------------------------------------------------------------------


def greedy_scheduler(g: Graph, u):
    selected, trace = local_greedy(g, u)
    return selected, trace.total_exchange_rounds


def exact_scheduler(budget: SolverBudget | None = None):
    def schedule(g: Graph, u):
        return exact_mwis(g, u, budget), 0

    return schedule


def gcn_scheduler(params: GcnParams, normalize: bool = True):
    def schedule(g: Graph, u):
        selected, _, trace = gcn_schedule(params, g, u, normalize=normalize)
        return selected, trace.total_exchange_rounds

    return schedule


# ---------------------------------------------------------------------------
# Slot dynamics
# ---------------------------------------------------------------------------


def _apply_slot(net, queues, scheduler, rates, arrivals):
    utilities = np.minimum(queues, rates).astype(np.float64)
    selected, rounds = scheduler(net.conflict_graph, utilities)
    validate_set(net.conflict_graph, selected.members, utilities)  # hard protocol check
    delivered = np.zeros(net.num_links, dtype=np.int64)
    members = list(selected.members)
    delivered[members] = utilities[members].astype(np.int64)
    assert np.all(delivered <= queues), "delivered packets exceed backlog"
    new_queues = queues - delivered + arrivals
    result = SlotResult(
        scheduled=selected,
        rates=rates.copy(),
        utilities=utilities,
        delivered=delivered,
        arrivals=arrivals.copy(),
        rounds=int(rounds),
    )
    return result, new_queues


def sim_step(net: WirelessNetwork, queues, scheduler, arrival_rate: float, rng):
    """One slot: draw rates and arrivals from ``rng``, schedule, deliver.

    Returns (SlotResult, new queue vector). Queues never go negative and a
    scheduler returning a non-independent set is a hard error.
    """
    queues = np.asarray(queues, dtype=np.int64)
    if queues.shape != (net.num_links,):
        raise ParameterError("queue state does not match link count")
    if np.any(queues < 0):
        raise ParameterError("queues must be non-negative")
    rates = rng.integers(0, MAX_RATE + 1, size=net.num_links)
    arrivals = rng.poisson(arrival_rate, size=net.num_links)
    return _apply_slot(net, queues, scheduler, rates, arrivals)


def run_instance(
    net: WirelessNetwork,
    scheduler,
    num_slots: int,
    arrival_rate: float,
    seed: int,
) -> ScheduleTrace:
    """Run ``num_slots`` slots from empty queues.

    Rates and arrivals for the whole horizon are drawn up front from a
    stream derived only from the seed, so every scheduler given the same
    (network, seed) sees identical traffic.
    """
    if num_slots < 1:
        raise ParameterError("num_slots must be >= 1")
    rng = substream(seed, "traffic")
    rates = rng.integers(0, MAX_RATE + 1, size=(num_slots, net.num_links))
    arrivals = rng.poisson(arrival_rate, size=(num_slots, net.num_links))
    queues = np.zeros(net.num_links, dtype=np.int64)
    slots = []
    total = 0
    for t in range(num_slots):
        result, queues = _apply_slot(net, queues, scheduler, rates[t], arrivals[t])
        slots.append(result)
        total += int(result.delivered.sum())
    return ScheduleTrace(tuple(slots), total, queues)


def _delivered_after(trace: ScheduleTrace, warmup: int) -> int:
    if warmup <= 0:
        return trace.total_delivered
    return int(sum(int(s.delivered.sum()) for s in trace.slots[warmup:]))


def compare_schedulers(
    networks: list[WirelessNetwork],
    schedulers: dict,
    num_slots: int,
    instances: int,
    arrival_rate: float,
    seed: int,
    reference: str = "exact",
    warmup: int = 0,
    network_ids: list[int] | None = None,
) -> EvalReport:
    """Cumulative-throughput ratios of each scheduler vs the reference.

    ``schedulers`` maps name -> scheduler and must contain ``reference``.
    Instance (network i, repetition j) uses the traffic stream derived from
    (seed, i, j) for every scheduler. ``warmup`` slots are excluded from
    the throughput accounting (not from the dynamics). ``network_ids``
    pins the ids used for stream derivation and record naming, so sharded
    parallel runs aggregate to the same report as a serial run.
    """
    if reference not in schedulers:
        raise ParameterError(f"schedulers must include the reference {reference!r}")
    if warmup >= num_slots:
        raise ParameterError("warmup must leave at least one counted slot")
    if network_ids is None:
        network_ids = list(range(len(networks)))
    if len(network_ids) != len(networks):
        raise ParameterError("network_ids must match networks")
    report = EvalReport()
    for i, net in zip(network_ids, networks):
        mean_degree = (
            2.0 * net.conflict_graph.num_edges / net.num_links if net.num_links else 0.0
        )
        for j in range(instances):
            inst_seed = int(substream(seed, "instance", i, j).integers(0, 2**63 - 1))
            ref_trace = run_instance(
                net, schedulers[reference], num_slots, arrival_rate, inst_seed
            )
            ref_delivered = _delivered_after(ref_trace, warmup)
            if ref_delivered == 0:
                report.excluded += 1
                continue
            for name, scheduler in schedulers.items():
                if name == reference:
                    continue
                trace = run_instance(net, scheduler, num_slots, arrival_rate, inst_seed)
                # The per-slot optimum is myopic, so the cumulative ratio is
                # a measurement, not bounded by 1; report it unclamped.
                ratio = _delivered_after(trace, warmup) / ref_delivered
                report.records.append(
                    EvalRecord(
                        graph_id=f"net{i:03d}.{j}",
                        label=f"geometric:links={net.num_links}",
                        num_nodes=net.num_links,
                        avg_degree=mean_degree,
                        solver=name,
                        ratio=ratio,
                        rounds=_mean_rounds(trace),
                    )
                )
    return report


def _mean_rounds(trace: ScheduleTrace) -> float:
    return float(np.mean([s.rounds for s in trace.slots])) if trace.slots else 0.0


# ---------------------------------------------------------------------------
# Network files: the graph format plus "pos" (coordinates), "src" (flow
# origin), and "meta" (geometry parameter) lines.
# ---------------------------------------------------------------------------


def save_network(net: WirelessNetwork, path) -> None:
    lines = [f"n {len(net.positions)}"]
    lines.append(f"meta area {net.area!r}")
    lines.append(f"meta link_radius {net.link_radius!r}")
    lines.append(f"meta interference_radius {net.interference_radius!r}")
    for i, (x, y) in enumerate(net.positions):
        lines.append(f"pos {i} {float(x)!r} {float(y)!r}")
    for i, j in net.links:
        lines.append(f"e {i} {j}")
    for k, s in enumerate(net.sources):
        lines.append(f"src {k} {s}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_network(path) -> WirelessNetwork:
    num_nodes = None
    meta: dict[str, float] = {}
    positions = {}
    links = []
    sources = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                tag = parts[0]
                if tag == "n":
                    num_nodes = int(parts[1])
                elif tag == "meta":
                    meta[parts[1]] = float(parts[2])
                elif tag == "pos":
                    positions[int(parts[1])] = (float(parts[2]), float(parts[3]))
                elif tag == "e":
                    i, j = int(parts[1]), int(parts[2])
                    if not 0 <= i < j:
                        raise ValueError(f"bad link ({i},{j})")
                    links.append((i, j))
                elif tag == "src":
                    sources[int(parts[1])] = int(parts[2])
                else:
                    raise ValueError(f"unknown directive {tag!r}")
            except (IndexError, ValueError) as exc:
                raise GraphFormatError(f"{path}:{lineno}: {exc}") from None
    if num_nodes is None:
        raise GraphFormatError(f"{path}: missing 'n' header line")
    required = {"area", "link_radius", "interference_radius"}
    if not required <= set(meta):
        raise GraphFormatError(f"{path}: missing meta lines {sorted(required - set(meta))}")
    if set(positions) != set(range(num_nodes)):
        raise GraphFormatError(f"{path}: positions must cover all {num_nodes} nodes")
    if any(j >= num_nodes for _, j in links):
        raise GraphFormatError(f"{path}: link endpoint out of range")
    pos = np.array([positions[i] for i in range(num_nodes)])
    src = tuple(sources.get(k, links[k][0]) for k in range(len(links)))
    conflict = Graph.from_edges(
        len(links), _conflict_edges(pos, links, meta["interference_radius"])
    )
    return WirelessNetwork(
        positions=pos,
        links=tuple(links),
        sources=src,
        conflict_graph=conflict,
        area=meta["area"],
        link_radius=meta["link_radius"],
        interference_radius=meta["interference_radius"],
    )
