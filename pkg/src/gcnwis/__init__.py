"""Topology-aware distributed MWIS scheduling.

A trainable graph-convolutional embedding rescales per-link utilities
before a round-based distributed greedy solver; an exact branch-and-bound
oracle, random graph generators, a training loop, and a queue-driven
wireless simulator round out the benchmark pipeline.
"""

from .errors import (
    BudgetExhaustedError,
    DimensionError,
    GcnWisError,
    GraphFormatError,
    ModelFormatError,
    NotIndependentError,
    NumericError,
    ParameterError,
    RatioError,
    RewardError,
    TrainingDivergedError,
)
from .evaluation import evaluate
from .gcn import (
    ForwardCache,
    GcnGrads,
    GcnParams,
    gcn_backward,
    gcn_forward,
    gcn_forward_1layer,
    gcn_schedule,
    glorot_init,
    load_model,
    save_model,
)
from .graph import (
    GeneratorSpec,
    Graph,
    check_utilities,
    gen_ba,
    gen_er,
    laplacian_apply,
    load_graph,
    parse_generator_spec,
    save_graph,
)
from .kernels import BACKEND
from .reports import EvalRecord, EvalReport, RunManifest
from .rng import rng_from_seed, substream
from .solvers import (
    IndependentSet,
    RoundTrace,
    SolverBudget,
    approximation_ratio,
    exact_mwis,
    greedy_mwis,
    local_greedy,
    validate_set,
)
from .training import (
    Adam,
    DatasetEntry,
    DatasetSpec,
    GraphInstance,
    ReplayBuffer,
    TrainConfig,
    TrainHistory,
    TrainSample,
    compute_rewards,
    generate_training_set,
    rms_loss,
    train,
)
from .wireless import (
    ScheduleTrace,
    SlotResult,
    WirelessNetwork,
    compare_schedulers,
    exact_scheduler,
    gcn_scheduler,
    gen_network,
    greedy_scheduler,
    load_network,
    run_instance,
    save_network,
    sim_step,
)

__version__ = "0.1.0"
