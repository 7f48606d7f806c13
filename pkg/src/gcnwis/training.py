"""Unsupervised training of the embedding model.

No exact solutions are involved anywhere in training: the reward for each
node compares the pipeline's solution against the plain greedy baseline on
the same instance, and a root-mean-square loss regresses the embedding
toward those rewards. Batches are drawn from an experience-replay buffer
that is refilled with fresh rollouts every epoch; the optimizer is Adam
with an exponentially decaying learning rate and periodic state resets.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import ParameterError, RewardError, TrainingDivergedError
from .gcn import GcnGrads, GcnParams, gcn_backward, gcn_forward, gcn_schedule
from .graph import Graph, gen_ba, gen_er
from .rng import substream
from .solvers import IndependentSet, greedy_mwis

__all__ = [
    "REWARD_MODES",
    "UTILITY_DISTRIBUTIONS",
    "TrainConfig",
    "TrainSample",
    "ReplayBuffer",
    "DatasetEntry",
    "DatasetSpec",
    "GraphInstance",
    "generate_training_set",
    "compute_rewards",
    "rms_loss",
    "Adam",
    "train",
    "TrainHistory",
    "EpochStats",
]

REWARD_MODES = ("baseline_fill", "selected_only")
UTILITY_DISTRIBUTIONS = ("uniform01", "uniform-int-0-100")


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetEntry:
    """One mixture row: a graph model swept over sizes and densities.

    Density is given either as expected average degree (``avg_degrees``,
    where p = deg/n for ER and m = round(deg) for BA) or directly as edge
    probability (``edge_probs``, with m = round(p * n) for BA).
    """

    model: str  # "er" | "ba"
    sizes: tuple[int, ...]
    count: int
    avg_degrees: tuple[float, ...] = ()
    edge_probs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.model not in ("er", "ba"):
            raise ParameterError(f"unknown graph model {self.model!r}")
        if self.count < 0:
            raise ParameterError("count must be non-negative")
        if bool(self.avg_degrees) == bool(self.edge_probs):
            raise ParameterError("give exactly one of avg_degrees or edge_probs")
        if not self.sizes:
            raise ParameterError("sizes must be non-empty")


@dataclass(frozen=True)
class DatasetSpec:
    entries: tuple[DatasetEntry, ...]
    utilities: str = "uniform01"

    def __post_init__(self):
        if self.utilities not in UTILITY_DISTRIBUTIONS:
            raise ParameterError(
                f"utility distribution must be one of {UTILITY_DISTRIBUTIONS}"
            )

    @property
    def total_count(self) -> int:
        return sum(e.count for e in self.entries)


@dataclass(frozen=True)
class GraphInstance:
    graph: Graph
    utilities: np.ndarray | None
    label: str
    index: int

    @property
    def avg_degree(self) -> float:
        n = self.graph.num_nodes
        return 2.0 * self.graph.num_edges / n if n else 0.0


def full_scale_spec(utilities: str = "uniform01") -> DatasetSpec:
    """The full-scale training mixture: 5000 degree-swept graphs plus 800
    probability-swept graphs (5800 total)."""
    return DatasetSpec(
        (
            DatasetEntry(
                "er",
                sizes=(100, 150, 200, 250, 300),
                avg_degrees=(2.0, 5.0, 7.5, 10.0, 12.5),
                count=5000,
            ),
            DatasetEntry(
                "er",
                sizes=(30, 100),
                edge_probs=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
                count=800,
            ),
        ),
        utilities=utilities,
    )


def desk_scale_spec(count: int = 500, utilities: str = "uniform01") -> DatasetSpec:
    """A shrunken mixture that trains in minutes on a laptop."""
    return DatasetSpec(
        (
            DatasetEntry(
                "er",
                sizes=(30, 60),
                avg_degrees=(2.0, 5.0, 7.5, 10.0, 12.5),
                count=count,
            ),
        ),
        utilities=utilities,
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _draw_utilities(rng: np.random.Generator, n: int, distribution: str) -> np.ndarray:
    if distribution == "uniform01":
        return rng.random(n)
    if distribution == "uniform-int-0-100":
        return rng.integers(0, 101, size=n).astype(np.float64)
    raise ParameterError(f"unknown utility distribution {distribution!r}")


def _entry_combos(entry: DatasetEntry) -> list[tuple[int, float, str]]:
    """(n, density value, density kind) combinations; validated."""
    combos = []
    if entry.avg_degrees:
        sweep = [(d, "deg") for d in entry.avg_degrees]
    else:
        sweep = [(p, "p") for p in entry.edge_probs]
    for n, (value, kind) in product(entry.sizes, sweep):
        if kind == "deg" and value > n:
            raise ParameterError(
                f"average degree {value} infeasible for n={n} (needs deg <= n)"
            )
        if kind == "p" and not 0.0 <= value <= 1.0:
            raise ParameterError(f"edge probability {value} outside [0, 1]")
        combos.append((n, value, kind))
    return combos


def _build_instance(entry: DatasetEntry, n: int, value: float, kind: str, seed,
                    rng_util, distribution: str, index: int) -> GraphInstance:
    if entry.model == "er":
        p = value / n if kind == "deg" else value
        g = gen_er(n, p, seed)
        label = f"er:n={n},{'np' if kind == 'deg' else 'p'}={value:g}"
    else:
        m = _round_half_up(value if kind == "deg" else value * n)
        m = min(max(m, 1), n - 1)
        g = gen_ba(n, m, seed)
        label = f"ba:n={n},{'np' if kind == 'deg' else 'p'}={value:g}"
    u = _draw_utilities(rng_util, n, distribution)
    return GraphInstance(g, u, label, index)


def generate_training_set(spec: DatasetSpec, seed: int) -> list[GraphInstance]:
    """Instantiate the mixture, cycling uniformly through each entry's
    (size, density) combinations. Deterministic per seed."""
    out: list[GraphInstance] = []
    index = 0
    for ei, entry in enumerate(spec.entries):
        combos = _entry_combos(entry)
        for i in range(entry.count):
            n, value, kind = combos[i % len(combos)]
            sub = substream(seed, "dataset", ei, i)
            graph_seed = int(sub.integers(0, 2**63 - 1))
            inst = _build_instance(
                entry, n, value, kind, graph_seed, sub, spec.utilities, index
            )
            out.append(inst)
            index += 1
    return out


# ---------------------------------------------------------------------------
# Rewards and loss
# ---------------------------------------------------------------------------


def compute_rewards(
    g: Graph,
    u,
    v_gcn: IndependentSet,
    v_gr: IndependentSet,
    mode: str = "baseline_fill",
) -> tuple[np.ndarray, np.ndarray]:
    """Per-node regression targets from the two solutions.

    Selected nodes get (total_gcn + u(v)) / total_greedy. Unselected nodes
    either get the plain quality ratio total_gcn / total_greedy
    (``baseline_fill``) or are masked out of the loss (``selected_only``).
    Returns (targets, active mask).
    """
    if mode not in REWARD_MODES:
        raise ParameterError(f"reward mode must be one of {REWARD_MODES}")
    u = np.asarray(u, dtype=np.float64)
    if v_gr.total_utility <= 0:
        raise RewardError("greedy baseline utility is zero; reward undefined")
    base = v_gcn.total_utility / v_gr.total_utility
    members = list(v_gcn.members)
    if mode == "baseline_fill":
        rho = np.full(g.num_nodes, base)
        mask = np.ones(g.num_nodes, dtype=bool)
    else:
        rho = np.zeros(g.num_nodes)
        mask = np.zeros(g.num_nodes, dtype=bool)
        mask[members] = True
    rho[members] = (v_gcn.total_utility + u[members]) / v_gr.total_utility
    return rho, mask


def rms_loss(z, rho, mask=None) -> tuple[float, np.ndarray]:
    """Root-mean-square loss over active nodes and its gradient wrt z.

    loss = sqrt(sum (z - rho)^2 / count); at loss 0 the gradient is 0.
    """
    z = np.asarray(z, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if z.shape != rho.shape:
        raise ParameterError("z and rho must have equal length")
    if mask is None:
        mask = np.ones(z.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != z.shape:
            raise ParameterError("mask length must match z")
    count = int(mask.sum())
    if count == 0:
        raise ParameterError("loss needs at least one active node")
    diff = np.where(mask, z - rho, 0.0)
    loss = math.sqrt(float(diff @ diff) / count)
    grad = np.zeros_like(z)
    if loss > 0:
        grad = diff / (count * loss)
    return loss, grad


# ---------------------------------------------------------------------------
# Replay buffer and optimizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainSample:
    graph: Graph
    utilities: np.ndarray
    rewards: np.ndarray
    mask: np.ndarray
    gcn_utility: float
    greedy_utility: float


class ReplayBuffer:
    """Bounded FIFO of samples with uniform without-replacement draws."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ParameterError("capacity must be positive")
        self.capacity = capacity
        self._items: deque[TrainSample] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, sample: TrainSample) -> None:
        self._items.append(sample)

    def sample(self, rng: np.random.Generator, k: int) -> list[TrainSample]:
        k = min(k, len(self._items))
        idx = rng.choice(len(self._items), size=k, replace=False)
        return [self._items[i] for i in idx]


class Adam:
    """Standard Adam over the two matrix lists of a GcnParams."""

    def __init__(self, params: GcnParams, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.reset()

    def reset(self) -> None:
        self.t = 0
        self.m = GcnGrads.zeros_like(self.params)
        self.v = GcnGrads.zeros_like(self.params)

    def step(self, grads: GcnGrads, lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for mats, gs, ms, vs in (
            (self.params.theta0, grads.theta0, self.m.theta0, self.v.theta0),
            (self.params.theta1, grads.theta1, self.m.theta1, self.v.theta1),
        ):
            for p, g_, m, v in zip(mats, gs, ms, vs):
                m *= b1
                m += (1 - b1) * g_
                v *= b2
                v += (1 - b2) * g_ * g_
                m_hat = m / (1 - b1**self.t)
                v_hat = v / (1 - b2**self.t)
                p -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 200
    epochs: int = 25
    lr0: float = 1e-3
    lr_decay: float = 0.9
    reset_period: int = 5  # epochs between optimizer-state resets; 0 = never
    reward_mode: str = "baseline_fill"
    buffer_capacity: int = 5000
    normalize_inputs: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError("batch_size must be positive")
        if self.epochs < 0:
            raise ParameterError("epochs must be non-negative")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ParameterError("lr_decay must be in (0, 1]")
        if self.lr0 < 0:
            raise ParameterError("lr0 must be non-negative")
        if self.reset_period < 0:
            raise ParameterError("reset_period must be non-negative")
        if self.reward_mode not in REWARD_MODES:
            raise ParameterError(f"reward mode must be one of {REWARD_MODES}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    mean_ratio_vs_greedy: float
    lr: float


@dataclass
class TrainHistory:
    reward_mode: str
    epochs: list[EpochStats] = field(default_factory=list)


def _normalized_input(u: np.ndarray, normalize: bool) -> np.ndarray:
    if normalize and u.size:
        peak = u.max()
        if peak > 0:
            return u / peak
    return u


def _sample_gradient(params: GcnParams, sample: TrainSample, normalize: bool):
    x0 = _normalized_input(sample.utilities, normalize)
    z, cache = gcn_forward(params, sample.graph, x0)
    loss, grad_z = rms_loss(z, sample.rewards, sample.mask)
    return loss, gcn_backward(params, cache, grad_z)


def train(
    config: TrainConfig,
    dataset: list[GraphInstance],
    init: GcnParams,
    epoch_callback=None,
) -> tuple[GcnParams, TrainHistory]:
    """Batch training per the replay scheme described in the module docstring.

    Deterministic for a fixed (config, dataset, init). ``epoch_callback``,
    when given, is invoked as callback(epoch, params, stats) after each
    epoch (the CLI uses it to write checkpoints). Raises
    TrainingDivergedError carrying the last finite checkpoint if the loss
    leaves the reals.
    """
    if not dataset:
        raise ParameterError("dataset must be non-empty")
    params = init.copy()
    optimizer = Adam(params)
    buffer = ReplayBuffer(config.buffer_capacity)
    history = TrainHistory(reward_mode=config.reward_mode)
    checkpoint = params.copy()

    for epoch in range(config.epochs):
        lr = config.lr0 * config.lr_decay**epoch
        ratios = []
        for inst in dataset:
            v_gcn, _, _ = gcn_schedule(
                params, inst.graph, inst.utilities, normalize=config.normalize_inputs
            )
            v_gr = greedy_mwis(inst.graph, inst.utilities)
            if v_gr.total_utility <= 0:
                continue  # degenerate all-zero-utility instance; nothing to learn
            rho, mask = compute_rewards(
                inst.graph, inst.utilities, v_gcn, v_gr, config.reward_mode
            )
            buffer.push(
                TrainSample(
                    inst.graph,
                    inst.utilities,
                    rho,
                    mask,
                    v_gcn.total_utility,
                    v_gr.total_utility,
                )
            )
            ratios.append(v_gcn.total_utility / v_gr.total_utility)

        batch_rng = substream(config.seed, "batches", epoch)
        losses = []
        # One pass over the replay buffer per epoch; early epochs take fewer
        # steps while the buffer is still filling.
        batches_per_epoch = max(1, math.ceil(len(buffer) / config.batch_size))
        for _ in range(batches_per_epoch):
            batch = buffer.sample(batch_rng, config.batch_size)
            if not batch:
                continue
            total = GcnGrads.zeros_like(params)
            batch_loss = 0.0
            for sample in batch:
                loss, grads = _sample_gradient(params, sample, config.normalize_inputs)
                batch_loss += loss
                total.add_(grads)
            batch_loss /= len(batch)
            if not math.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}", checkpoint, history
                )
            total.scale(1.0 / len(batch))
            optimizer.step(total, lr)
            losses.append(batch_loss)

        stats = EpochStats(
            epoch=epoch,
            mean_loss=float(np.mean(losses)) if losses else float("nan"),
            mean_ratio_vs_greedy=float(np.mean(ratios)) if ratios else float("nan"),
            lr=lr,
        )
        history.epochs.append(stats)
        checkpoint = params.copy()
        if epoch_callback is not None:
            epoch_callback(epoch, params, stats)
        if config.reset_period and (epoch + 1) % config.reset_period == 0:
            optimizer.reset()

    return params, history
