"""Command-line benchmark harness.

Subcommands: ``generate`` (datasets to disk), ``train`` (fit a model),
``eval`` (approximation ratios vs the exact oracle), ``simulate`` (wireless
throughput comparison), and ``report`` (re-aggregate a records CSV).

Every command writes a ``manifest.json`` with the resolved configuration;
re-running the stored argv reproduces all artifacts byte-identically.
Exit codes: 0 success, 2 usage, 3 I/O or file-format, 4 numeric, 5 budget
exhaustion.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import (
    BudgetExhaustedError,
    GraphFormatError,
    ModelFormatError,
    NumericError,
    ParameterError,
)
from .evaluation import evaluate
from .gcn import GcnParams, glorot_init, load_model, save_model
from .graph import build_graph, format_graph, load_graph, parse_generator_spec
from .reports import (
    EvalReport,
    RunManifest,
    aggregates_json,
    atomic_write,
    histogram_csv,
    history_csv,
    parse_records_csv,
    records_csv,
    write_manifest,
    write_report_files,
)
from .rng import substream
from .solvers import SolverBudget
from .training import (
    GraphInstance,
    TrainConfig,
    TrainHistory,
    desk_scale_spec,
    full_scale_spec,
    generate_training_set,
    train,
)
from .wireless import (
    compare_schedulers,
    exact_scheduler,
    gcn_scheduler,
    gen_network,
    greedy_scheduler,
    save_network,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_BUDGET = 5

PRESETS = {"desk-train": desk_scale_spec, "full-train": full_scale_spec}


def _default_out() -> str:
    return os.environ.get("GCNWIS_OUT_DIR", ".")


# ---------------------------------------------------------------------------
# Dataset helpers
# ---------------------------------------------------------------------------


def _instances_from_specs(spec_texts, utilities: str, seed: int) -> list[GraphInstance]:
    """Materialize er/ba CLI spec strings into labeled instances."""
    instances = []
    index = 0
    for si, text in enumerate(spec_texts):
        spec = parse_generator_spec(text)
        if spec.model == "geometric":
            raise ParameterError(
                "geometric specs describe networks; use the simulate command"
            )
        density = "p" if spec.model == "er" else "m"
        label = f"{spec.model}:n={spec.params['n']},{density}={spec.params[density]:g}"
        for i in range(spec.count):
            sub = substream(seed, "cli-spec", si, i)
            graph_seed = int(sub.integers(0, 2**63 - 1))
            g = build_graph(spec, seed=graph_seed)
            if utilities == "none":
                u = None
            elif utilities == "uniform01":
                u = sub.random(g.num_nodes)
            elif utilities == "uniform-int-0-100":
                u = sub.integers(0, 101, size=g.num_nodes).astype(np.float64)
            else:
                raise ParameterError(f"unknown utility distribution {utilities!r}")
            instances.append(GraphInstance(g, u, label, index))
            index += 1
    return instances


def _dataset_instances(args, seed: int) -> list[GraphInstance]:
    if getattr(args, "preset", None):
        return generate_training_set(PRESETS[args.preset](), seed)
    if getattr(args, "spec", None):
        return _instances_from_specs(args.spec, args.utilities, seed)
    if getattr(args, "dataset", None):
        return load_dataset_dir(args.dataset)
    raise ParameterError("give --dataset, --spec, or --preset")


def load_dataset_dir(directory) -> list[GraphInstance]:
    """Load every *.graph file (sorted) with its optional label comment."""
    paths = sorted(glob.glob(os.path.join(directory, "*.graph")))
    if not paths:
        raise ParameterError(f"no *.graph files found in {directory}")
    instances = []
    for index, path in enumerate(paths):
        g, weights = load_graph(path)
        label = os.path.splitext(os.path.basename(path))[0]
        with open(path) as fh:
            first = fh.readline().strip()
        if first.startswith("# label "):
            label = first[len("# label ") :]
        u = weights if weights is not None else np.zeros(g.num_nodes)
        instances.append(GraphInstance(g, u, label, index))
    return instances


def _write_instances(instances, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for inst in instances:
        path = os.path.join(out_dir, f"g{inst.index:05d}.graph")
        body = f"# label {inst.label}\n" + format_graph(inst.graph, inst.utilities)
        atomic_write(path, body)
        paths.append(path)
    return paths


def _budget(args) -> SolverBudget:
    return SolverBudget(
        max_branch_nodes=args.budget_nodes, time_limit=args.budget_seconds
    )


# ---------------------------------------------------------------------------
# Subcommand implementations; each returns a list of artifact paths.
# ---------------------------------------------------------------------------


def cmd_generate(args) -> list[str]:
    geo = []
    flat = []
    for text in args.spec or []:
        spec = parse_generator_spec(text)
        (geo if spec.model == "geometric" else flat).append((text, spec))
    artifacts = []
    if args.preset or flat:
        sub_args = argparse.Namespace(
            preset=args.preset, spec=[t for t, _ in flat] or None, dataset=None,
            utilities=args.utilities,
        )
        instances = _dataset_instances(sub_args, args.seed)
        artifacts += _write_instances(instances, args.out)
    for text, spec in geo:
        for i in range(spec.count):
            net_seed = int(substream(args.seed, "network", i).integers(0, 2**63 - 1))
            net = gen_network(
                spec.params["n"],
                spec.params["area"],
                spec.params["link_radius"],
                spec.params["interference_radius"],
                net_seed,
            )
            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, f"net{i:03d}.net")
            save_network(net, path)
            artifacts.append(path)
    if not artifacts:
        raise ParameterError("nothing to generate: give --spec or --preset")
    return artifacts


def _model_dims(layers: int, hidden: int) -> tuple[int, ...]:
    if layers < 1:
        raise ParameterError("layers must be >= 1")
    return (1,) + (hidden,) * (layers - 1) + (1,)


def _train_config(args) -> TrainConfig:
    """Resolve defaults < config file < explicit flags."""
    fields: dict = {}
    if args.config:
        with open(args.config) as fh:
            file_fields = json.load(fh)
        unknown = set(file_fields) - set(TrainConfig.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        fields.update(file_fields)
    overrides = dict(
        batch_size=args.batch_size,
        epochs=args.epochs,
        lr0=args.lr0,
        lr_decay=args.lr_decay,
        reset_period=args.reset_period,
        reward_mode=args.reward_mode,
    )
    fields.update({k: v for k, v in overrides.items() if v is not None})
    fields["seed"] = args.seed
    return TrainConfig(**fields)


def cmd_train(args) -> list[str]:
    config = _train_config(args)
    dataset = _dataset_instances(args, config.seed)
    init = glorot_init(
        _model_dims(args.layers, args.hidden), args.leaky_slope, seed=config.seed
    )
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    history_path = os.path.join(args.out, "history.csv")
    if args.dry_run:
        save_model(init, model_path)
        atomic_write(history_path, history_csv(TrainHistory(config.reward_mode)))
        return [model_path, history_path]

    ckpt_dir = os.path.join(args.out, "checkpoints")
    os.makedirs(ckpt_dir, exist_ok=True)
    ckpts = []

    def checkpoint(epoch, params, stats):
        path = os.path.join(ckpt_dir, f"model.epoch{epoch:02d}.json")
        save_model(params, path)
        ckpts.append(path)

    params, history = train(config, dataset, init, epoch_callback=checkpoint)
    save_model(params, model_path)
    atomic_write(history_path, history_csv(history))
    return [model_path, history_path] + ckpts


def _eval_chunk(payload):
    params_doc, instances, budget_args, normalize = payload
    params = _params_from_doc(params_doc)
    budget = SolverBudget(*budget_args)
    return evaluate(params, instances, budget, normalize=normalize)


def _params_from_doc(doc) -> GcnParams:
    return GcnParams(
        tuple(doc["dims"]),
        [np.asarray(m) for m in doc["theta0"]],
        [np.asarray(m) for m in doc["theta1"]],
        doc["leaky_slope"],
    )


def _params_to_doc(params: GcnParams) -> dict:
    return {
        "dims": list(params.dims),
        "theta0": [m.tolist() for m in params.theta0],
        "theta1": [m.tolist() for m in params.theta1],
        "leaky_slope": params.leaky_slope,
    }


def cmd_eval(args) -> list[str]:
    params = load_model(args.model)
    testset = _dataset_instances(args, args.seed)
    budget = _budget(args)
    if args.jobs > 1:
        chunks = [testset[i :: args.jobs] for i in range(args.jobs)]
        doc = _params_to_doc(params)
        payloads = [
            (doc, chunk, (budget.max_branch_nodes, budget.time_limit), not args.no_normalize)
            for chunk in chunks
            if chunk
        ]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            parts = list(pool.map(_eval_chunk, payloads))
        report = EvalReport()
        for part in parts:
            report.records.extend(part.records)
            report.excluded += part.excluded
        report.records.sort(key=lambda r: (r.graph_id, r.solver))
    else:
        report = evaluate(params, testset, budget, normalize=not args.no_normalize)
    return write_report_files(report, args.out, "eval")


def _sim_networks(args) -> list:
    nets = []
    for i in range(args.networks):
        net_seed = int(substream(args.seed, "network", i).integers(0, 2**63 - 1))
        nets.append(
            gen_network(
                args.nodes,
                args.area,
                args.link_radius,
                args.interference_radius,
                net_seed,
            )
        )
    return nets


def _sim_chunk(payload):
    (params_doc, net_args, net_index, instances, slots, rate, seed, budget_args,
     warmup) = payload
    params = _params_from_doc(params_doc)
    net_seed = int(substream(seed, "network", net_index).integers(0, 2**63 - 1))
    net = gen_network(*net_args, net_seed)
    schedulers = {
        "exact": exact_scheduler(SolverBudget(*budget_args)),
        "greedy": greedy_scheduler,
        "gcn": gcn_scheduler(params),
    }
    return compare_schedulers(
        [net], schedulers, slots, instances, rate, seed, warmup=warmup,
        network_ids=[net_index],
    )


def cmd_simulate(args) -> list[str]:
    params = load_model(args.model)
    budget = _budget(args)
    if args.jobs > 1:
        net_args = (args.nodes, args.area, args.link_radius, args.interference_radius)
        doc = _params_to_doc(params)
        payloads = [
            (doc, net_args, i, args.instances, args.slots, args.arrival_rate,
             args.seed, (budget.max_branch_nodes, budget.time_limit), args.warmup)
            for i in range(args.networks)
        ]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            parts = list(pool.map(_sim_chunk, payloads))
        report = EvalReport()
        for part in parts:
            report.records.extend(part.records)
            report.excluded += part.excluded
        report.records.sort(key=lambda r: (r.graph_id, r.solver))
    else:
        networks = _sim_networks(args)
        schedulers = {
            "exact": exact_scheduler(budget),
            "greedy": greedy_scheduler,
            "gcn": gcn_scheduler(params),
        }
        report = compare_schedulers(
            networks,
            schedulers,
            args.slots,
            args.instances,
            args.arrival_rate,
            args.seed,
            warmup=args.warmup,
        )
    return write_report_files(report, args.out, "sim")


def cmd_report(args) -> list[str]:
    try:
        with open(args.records) as fh:
            report = parse_records_csv(fh.read())
    except ValueError as exc:
        raise GraphFormatError(f"{args.records}: {exc}") from None
    os.makedirs(args.out, exist_ok=True)
    agg_path = os.path.join(args.out, "report_aggregates.json")
    hist_path = os.path.join(args.out, "report_histogram.csv")
    atomic_write(agg_path, aggregates_json(report))
    atomic_write(hist_path, histogram_csv(report))
    return [agg_path, hist_path]


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------


def _add_common_out(p):
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=0)


def _add_budget(p):
    p.add_argument("--budget-nodes", type=int, default=10_000_000,
                   help="exact-solver branch-node limit per instance")
    p.add_argument("--budget-seconds", type=float, default=60.0,
                   help="exact-solver time limit per instance")


def _add_testset_sources(p):
    p.add_argument("--dataset", help="directory of *.graph files")
    p.add_argument("--spec", action="append",
                   help="generator spec, e.g. er:n=50,p=0.1,count=20 (repeatable)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--utilities", default="uniform01",
                   choices=["uniform01", "uniform-int-0-100", "none"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcnwis",
        description="Benchmark harness for topology-aware distributed MWIS scheduling.",
    )
    parser.add_argument("--version", action="version", version=f"gcnwis {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="materialize graph/network datasets")
    _add_testset_sources(p)
    _add_common_out(p)

    p = sub.add_parser("train", help="train an embedding model")
    _add_testset_sources(p)
    _add_common_out(p)
    p.add_argument("--config", help="JSON file with training fields")
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--leaky-slope", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr0", type=float, default=None)
    p.add_argument("--lr-decay", type=float, default=None)
    p.add_argument("--reset-period", type=int, default=None)
    p.add_argument("--reward-mode", choices=["baseline_fill", "selected_only"],
                   default=None)
    p.add_argument("--dry-run", action="store_true",
                   help="validate config and write the initial model only")

    p = sub.add_parser("eval", help="approximation ratios vs the exact oracle")
    p.add_argument("--model", required=True)
    _add_testset_sources(p)
    _add_common_out(p)
    _add_budget(p)
    p.add_argument("--no-normalize", action="store_true",
                   help="disable input rescaling in the pipeline")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("simulate", help="wireless scheduling throughput comparison")
    p.add_argument("--model", required=True)
    _add_common_out(p)
    _add_budget(p)
    p.add_argument("--networks", type=int, default=25)
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--area", type=float, default=250.0)
    p.add_argument("--link-radius", type=float, default=1.0)
    p.add_argument("--interference-radius", type=float, default=4.0)
    p.add_argument("--slots", type=int, default=200)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--arrival-rate", type=float, default=60.0,
                   help="Poisson packet arrivals per link-source per slot")
    p.add_argument("--warmup", type=int, default=0,
                   help="slots excluded from throughput accounting")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("report", help="re-aggregate a records CSV")
    p.add_argument("--records", required=True)
    _add_common_out(p)

    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.out is None:
        args.out = _default_out()
    start = time.monotonic()
    try:
        artifacts = _COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"gcnwis {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphFormatError, ModelFormatError, OSError) as exc:
        print(f"gcnwis {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"gcnwis {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BudgetExhaustedError as exc:
        print(f"gcnwis {args.command}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    manifest = RunManifest(
        command=args.command,
        argv=argv,
        config={k: v for k, v in sorted(vars(args).items()) if k != "command"},
        seed=getattr(args, "seed", 0),
        artifacts=[os.path.relpath(a, args.out) for a in artifacts],
        tool_version=__version__,
        duration_s=round(time.monotonic() - start, 3),
    )
    write_manifest(manifest, args.out)
    for a in artifacts:
        print(a)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
