"""Result containers and file emission.

Everything written here is plot-tool-neutral data: per-instance CSV records,
aggregate JSON, and 0.01-wide histogram CSVs. Files are written atomically
(temp + rename) and contain no timestamps, so identical runs produce
byte-identical artifacts.
"""

from __future__ import annotations

import json
import os
import statistics
from dataclasses import asdict, dataclass, field

import numpy as np

HISTOGRAM_BINS = 100  # ratios in [0, 1], bin width 0.01


def atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass(frozen=True)
class EvalRecord:
    """One (instance, solver) measurement."""

    graph_id: str
    label: str
    num_nodes: int
    avg_degree: float
    solver: str
    ratio: float
    rounds: float


@dataclass(frozen=True)
class BucketStats:
    mean: float
    median: float
    std: float
    count: int


@dataclass
class EvalReport:
    """Per-instance approximation ratios plus aggregate views."""

    records: list[EvalRecord] = field(default_factory=list)
    excluded: int = 0  # instances dropped (oracle budget / zero reference)

    def solvers(self) -> list[str]:
        return sorted({r.solver for r in self.records})

    def ratios(self, solver: str) -> list[float]:
        return [r.ratio for r in self.records if r.solver == solver]

    def mean_ratio(self, solver: str) -> float:
        values = self.ratios(solver)
        if not values:
            raise ValueError(f"no records for solver {solver!r}")
        return statistics.fmean(values)

    def aggregates(self) -> dict:
        """mean/median/std/count per solver, overall and per label bucket."""
        out: dict = {}
        for solver in self.solvers():
            buckets: dict[str, list[float]] = {}
            for r in self.records:
                if r.solver == solver:
                    buckets.setdefault(r.label, []).append(r.ratio)
            overall = [v for vs in buckets.values() for v in vs]
            out[solver] = {
                "overall": asdict(_stats(overall)),
                "buckets": {
                    label: asdict(_stats(vs)) for label, vs in sorted(buckets.items())
                },
            }
        return out

    def histogram(self, solver: str) -> np.ndarray:
        counts = np.zeros(HISTOGRAM_BINS, dtype=np.int64)
        for ratio in self.ratios(solver):
            counts[min(int(ratio * HISTOGRAM_BINS), HISTOGRAM_BINS - 1)] += 1
        return counts


def _stats(values: list[float]) -> BucketStats:
    return BucketStats(
        mean=statistics.fmean(values),
        median=statistics.median(values),
        std=statistics.stdev(values) if len(values) > 1 else 0.0,
        count=len(values),
    )


# ---------------------------------------------------------------------------
# CSV / JSON emission
# ---------------------------------------------------------------------------

RECORDS_HEADER = "graph_id,label,num_nodes,avg_degree,solver,ratio,rounds"


def records_csv(report: EvalReport) -> str:
    lines = [RECORDS_HEADER]
    for r in report.records:
        lines.append(
            f"{r.graph_id},{r.label},{r.num_nodes},{r.avg_degree!r},"
            f"{r.solver},{r.ratio!r},{r.rounds!r}"
        )
    return "\n".join(lines) + "\n"


def parse_records_csv(text: str) -> EvalReport:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != RECORDS_HEADER:
        raise ValueError("not a records CSV (bad header)")
    records = []
    for ln in lines[1:]:
        gid, label, n, deg, solver, ratio, rounds = ln.split(",")
        records.append(
            EvalRecord(gid, label, int(n), float(deg), solver, float(ratio), float(rounds))
        )
    return EvalReport(records=records)


def aggregates_json(report: EvalReport) -> str:
    doc = {
        "excluded_instances": report.excluded,
        "solvers": report.aggregates(),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def histogram_csv(report: EvalReport) -> str:
    solvers = report.solvers()
    lines = ["bin_low,bin_high," + ",".join(solvers)]
    hists = {s: report.histogram(s) for s in solvers}
    for b in range(HISTOGRAM_BINS):
        low, high = b / HISTOGRAM_BINS, (b + 1) / HISTOGRAM_BINS
        counts = ",".join(str(int(hists[s][b])) for s in solvers)
        lines.append(f"{low:.2f},{high:.2f},{counts}")
    return "\n".join(lines) + "\n"


def write_report_files(report: EvalReport, out_dir, stem: str) -> list[str]:
    """Write records CSV + aggregate JSON + histogram CSV; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in (
        (f"{stem}_records.csv", records_csv(report)),
        (f"{stem}_aggregates.json", aggregates_json(report)),
        (f"{stem}_histogram.csv", histogram_csv(report)),
    ):
        path = os.path.join(out_dir, name)
        atomic_write(path, text)
        paths.append(path)
    return paths


def history_csv(history) -> str:
    lines = ["epoch,mean_loss,mean_ratio_vs_greedy,lr"]
    for s in history.epochs:
        lines.append(f"{s.epoch},{s.mean_loss!r},{s.mean_ratio_vs_greedy!r},{s.lr!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Run manifests
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    """Everything needed to reproduce a CLI run bit-exactly."""

    command: str
    argv: list[str]
    config: dict
    seed: int
    artifacts: list[str]
    tool_version: str
    duration_s: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunManifest:
        return cls(**json.loads(text))


def write_manifest(manifest: RunManifest, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "manifest.json")
    atomic_write(path, manifest.to_json())
    return path
