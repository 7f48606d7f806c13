"""Conflict-graph container, normalized-Laplacian operator, random graph
generators (Erdos-Renyi, Barabasi-Albert), and the line-oriented graph file
format.

Node IDs are contiguous integers 0..num_nodes-1 and double as the
tie-breaking identification numbers used by the distributed solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DimensionError, GraphFormatError, ParameterError
from .rng import substream

__all__ = [
    "Graph",
    "GeneratorSpec",
    "gen_er",
    "gen_ba",
    "build_graph",
    "laplacian_apply",
    "parse_generator_spec",
    "format_graph",
    "parse_graph",
    "save_graph",
    "load_graph",
    "check_utilities",
]


class Graph:
    """Immutable undirected graph stored as a symmetric CSR adjacency.

    ``indptr``/``indices`` follow the usual CSR convention; each neighbor
    list is strictly increasing and self-loops are rejected at construction.
    Instances are safe to share across threads.
    """

    __slots__ = ("num_nodes", "indptr", "indices", "_norm_adj")

    def __init__(self, num_nodes: int, indptr: np.ndarray, indices: np.ndarray):
        self.num_nodes = int(num_nodes)
        self.indptr = indptr
        self.indices = indices
        self._norm_adj = None

    @classmethod
    def empty(cls, num_nodes: int) -> Graph:
        if num_nodes < 0:
            raise ParameterError("num_nodes must be non-negative")
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        return cls(num_nodes, indptr, np.zeros(0, dtype=np.int64))

    @classmethod
    def from_edges(cls, num_nodes: int, edges) -> Graph:
        """Build from an iterable of (i, j) pairs; duplicates are merged."""
        if num_nodes < 0:
            raise ParameterError("num_nodes must be non-negative")
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            if pairs.min() < 0 or pairs.max() >= num_nodes:
                raise ParameterError("edge endpoint out of range")
            if np.any(pairs[:, 0] == pairs[:, 1]):
                raise ParameterError("self-loops are not allowed")
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        und = np.unique(np.stack([lo, hi], axis=1), axis=0) if pairs.size else pairs
        src = np.concatenate([und[:, 0], und[:, 1]])
        dst = np.concatenate([und[:, 1], und[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        g = cls(num_nodes, indptr, dst.astype(np.int64))
        g.indptr.setflags(write=False)
        g.indices.setflags(write=False)
        return g

    # ---- basic accessors ------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self.indices.size // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def adjacency(self) -> list[list[int]]:
        """Per-node sorted neighbor lists (a copy)."""
        return [self.neighbors(v).tolist() for v in range(self.num_nodes)]

    def edge_list(self) -> list[tuple[int, int]]:
        """Sorted (i, j) pairs with i < j."""
        out = []
        for v in range(self.num_nodes):
            for u in self.neighbors(v):
                if v < u:
                    out.append((v, int(u)))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.num_nodes, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.num_nodes}, m={self.num_edges})"

    # ---- spectral operator ----------------------------------------------

    def normalized_adjacency(self) -> sparse.csr_matrix:
        """D^(-1/2) A D^(-1/2) as a cached sparse matrix; isolated rows are zero."""
        if self._norm_adj is None:
            n = self.num_nodes
            deg = self.degrees.astype(np.float64)
            inv_sqrt = np.zeros(n)
            nz = deg > 0
            inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
            data = inv_sqrt[np.repeat(np.arange(n), deg.astype(np.int64))] * inv_sqrt[self.indices]
            self._norm_adj = sparse.csr_matrix((data, self.indices, self.indptr), shape=(n, n))
        return self._norm_adj


def laplacian_apply(g: Graph, X) -> np.ndarray:
    """Apply the symmetric normalized Laplacian I - D^(-1/2) A D^(-1/2).

    Row v of the result is X[v] minus the degree-scaled sum over the
    neighbors of v; isolated nodes keep their input row unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != g.num_nodes:
        raise DimensionError(
            f"feature rows ({X.shape[0]}) must match num_nodes ({g.num_nodes})"
        )
    if g.num_nodes == 0:
        return X.copy()
    return X - g.normalized_adjacency() @ X


def check_utilities(g: Graph, values) -> np.ndarray:
    """Validate a per-node utility vector: right length, finite, non-negative."""
    u = np.asarray(values, dtype=np.float64)
    if u.shape != (g.num_nodes,):
        raise DimensionError(
            f"utilities shape {u.shape} does not match graph size {g.num_nodes}"
        )
    if u.size and not np.all(np.isfinite(u)):
        raise ParameterError("utilities must be finite")
    if u.size and u.min() < 0:
        raise ParameterError("utilities must be non-negative")
    return u


# ---------------------------------------------------------------------------
# Random graph generators
# ---------------------------------------------------------------------------


def gen_er(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p): each unordered pair is an edge with probability p.

    Deterministic for a fixed seed. Pair sampling is dense, which is fine for
    the graph sizes used here (up to a few thousand nodes).
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"edge probability must be in [0, 1], got {p}")
    rng = substream(seed, "er")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


def gen_ba(n: int, m: int, seed: int) -> Graph:
    """Barabasi-Albert preferential attachment with m edges per new node.

    Convention: m isolated seed nodes; the first attached node connects to
    all of them; each later node attaches to m distinct existing nodes
    sampled without replacement with probability proportional to degree + 1,
    so zero-degree nodes stay reachable. Edge count is exactly m * (n - m).
    """
    if m < 1 or m >= n:
        raise ParameterError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = substream(seed, "ba")
    edges = [(j, m) for j in range(m)]
    # targets holds each node once per incident edge; sampling an index in
    # [0, len(targets) + k) realizes P(node) proportional to degree + 1.
    targets = []
    for j in range(m):
        targets += [j, m]
    for k in range(m + 1, n):
        chosen = set()
        while len(chosen) < m:
            t = int(rng.integers(0, len(targets) + k))
            chosen.add(targets[t] if t < len(targets) else t - len(targets))
        for u in sorted(chosen):
            edges.append((u, k))
            targets += [u, k]
    return Graph.from_edges(n, edges)


@dataclass(frozen=True)
class GeneratorSpec:
    """Parsed generator description, e.g. from ``er:n=100,p=0.05,seed=7``."""

    model: str  # "er" | "ba" | "geometric"
    params: dict
    seed: int = 0
    count: int = 1


_SPEC_FIELDS = {
    "er": {"n": int, "p": float},
    "ba": {"n": int, "m": int},
    "geometric": {
        "n": int,
        "area": float,
        "link_radius": float,
        "interference_radius": float,
    },
}


def parse_generator_spec(text: str) -> GeneratorSpec:
    """Parse a CLI generator string like ``er:n=100,p=0.05,count=10,seed=7``."""
    model, _, rest = text.partition(":")
    model = model.strip().lower()
    if model not in _SPEC_FIELDS:
        raise ParameterError(f"unknown graph model {model!r} in spec {text!r}")
    fields = _SPEC_FIELDS[model]
    params, seed, count = {}, 0, 1
    for token in filter(None, (t.strip() for t in rest.split(","))):
        key, eq, value = token.partition("=")
        if not eq:
            raise ParameterError(f"bad token {token!r} in spec {text!r}")
        key = key.strip()
        if key == "seed":
            seed = int(value)
        elif key == "count":
            count = int(value)
        elif key in fields:
            params[key] = fields[key](value)
        else:
            raise ParameterError(f"unknown field {key!r} for model {model!r}")
    missing = set(fields) - set(params)
    if missing:
        raise ParameterError(f"spec {text!r} is missing fields: {sorted(missing)}")
    if count < 0:
        raise ParameterError("count must be non-negative")
    return GeneratorSpec(model, params, seed, count)


def build_graph(spec: GeneratorSpec, seed: int | None = None) -> Graph:
    """Instantiate an er/ba spec (geometric specs belong to the simulator)."""
    s = spec.seed if seed is None else seed
    if spec.model == "er":
        return gen_er(spec.params["n"], spec.params["p"], s)
    if spec.model == "ba":
        return gen_ba(spec.params["n"], spec.params["m"], s)
    raise ParameterError(f"cannot build a plain graph from model {spec.model!r}")


# ---------------------------------------------------------------------------
# Graph file format
# ---------------------------------------------------------------------------
#
#   n <num_nodes>
#   e <i> <j>        one line per edge, i < j
#   w <i> <value>    optional per-node weights
#
# Line-oriented and diff-friendly; parsed strictly with line diagnostics.


def format_graph(g: Graph, weights=None) -> str:
    lines = [f"n {g.num_nodes}"]
    for i, j in g.edge_list():
        lines.append(f"e {i} {j}")
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (g.num_nodes,):
            raise DimensionError("weights length must match num_nodes")
        for i, value in enumerate(w):
            lines.append(f"w {i} {float(value)!r}")
    return "\n".join(lines) + "\n"


def save_graph(g: Graph, path, weights=None) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g, weights))


def parse_graph(text: str, source: str = "<string>") -> tuple[Graph, np.ndarray | None]:
    num_nodes = None
    edges = []
    weights = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "n":
                if num_nodes is not None:
                    raise ValueError("duplicate 'n' line")
                num_nodes = int(parts[1])
                if num_nodes < 0:
                    raise ValueError("negative node count")
            elif tag == "e":
                i, j = int(parts[1]), int(parts[2])
                if num_nodes is None:
                    raise ValueError("'e' before 'n'")
                if not (0 <= i < j < num_nodes):
                    raise ValueError(f"edge ({i},{j}) needs 0 <= i < j < {num_nodes}")
                edges.append((i, j))
            elif tag == "w":
                if num_nodes is None:
                    raise ValueError("'w' before 'n'")
                i, value = int(parts[1]), float(parts[2])
                if not 0 <= i < num_nodes:
                    raise ValueError(f"weight index {i} out of range")
                if weights is None:
                    weights = np.zeros(num_nodes)
                weights[i] = value
            else:
                raise ValueError(f"unknown directive {tag!r}")
        except (IndexError, ValueError) as exc:
            raise GraphFormatError(f"{source}:{lineno}: {exc}") from None
    if num_nodes is None:
        raise GraphFormatError(f"{source}: missing 'n' header line")
    return Graph.from_edges(num_nodes, edges), weights


def load_graph(path) -> tuple[Graph, np.ndarray | None]:
    with open(path) as fh:
        return parse_graph(fh.read(), source=str(path))
