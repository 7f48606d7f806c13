"""Graph convolutional embedding: X^{l+1} = act(X^l T0 + L X^l T1) with the
normalized Laplacian L as the graph shift, leaky-ReLU on all but the last
layer, and a linear output layer. Output embeddings rescale per-node
utilities before the distributed greedy solver.

The backward pass is analytic (reverse-mode through the layer recurrence,
using the symmetry of L); no autograd framework is involved.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ModelFormatError, NumericError, ParameterError
from .graph import Graph, check_utilities, laplacian_apply
from .rng import substream
from .solvers import IndependentSet, RoundTrace, local_greedy, validate_set

__all__ = [
    "MODEL_FORMAT_VERSION",
    "GcnParams",
    "ForwardCache",
    "GcnGrads",
    "glorot_init",
    "gcn_forward",
    "gcn_forward_1layer",
    "gcn_backward",
    "gcn_schedule",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = "1"


@dataclass
class GcnParams:
    """Layer dimensions plus the two trainable matrices per layer.

    ``dims`` is [g0, ..., gL] with g0 = gL = 1 (scalar in, scalar out);
    layer l maps features of width dims[l] to dims[l+1].
    """

    dims: tuple[int, ...]
    theta0: list[np.ndarray]
    theta1: list[np.ndarray]
    leaky_slope: float = 0.01
    version: str = MODEL_FORMAT_VERSION

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) < 2:
            raise ParameterError("dims must list at least [g0, g1]")
        if self.dims[0] != 1 or self.dims[-1] != 1:
            raise ParameterError("input and output widths must both be 1")
        if any(d < 1 for d in self.dims):
            raise ParameterError("layer widths must be positive")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ParameterError("leaky_slope must lie in (0, 1)")
        if len(self.theta0) != self.num_layers or len(self.theta1) != self.num_layers:
            raise ParameterError("need one theta0/theta1 matrix per layer")
        for l in range(self.num_layers):
            expect = (self.dims[l], self.dims[l + 1])
            for name, mats in (("theta0", self.theta0), ("theta1", self.theta1)):
                m = np.asarray(mats[l], dtype=np.float64)
                if m.shape != expect:
                    raise ParameterError(
                        f"{name}[{l}] has shape {m.shape}, expected {expect}"
                    )
                if not np.all(np.isfinite(m)):
                    raise ParameterError(f"{name}[{l}] has non-finite entries")
                mats[l] = m

    @property
    def num_layers(self) -> int:
        return len(self.dims) - 1

    def copy(self) -> GcnParams:
        return GcnParams(
            self.dims,
            [m.copy() for m in self.theta0],
            [m.copy() for m in self.theta1],
            self.leaky_slope,
            self.version,
        )


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, consumed by gcn_backward."""

    graph: Graph
    x: list[np.ndarray]  # activations X^0 .. X^L
    lx: list[np.ndarray]  # L X^l for l = 0 .. L-1
    pre: list[np.ndarray]  # pre-activations S^0 .. S^{L-1}


@dataclass
class GcnGrads:
    theta0: list[np.ndarray]
    theta1: list[np.ndarray]

    def scale(self, c: float) -> None:
        for m in self.theta0:
            m *= c
        for m in self.theta1:
            m *= c

    def add_(self, other: GcnGrads) -> None:
        for a, b in zip(self.theta0, other.theta0):
            a += b
        for a, b in zip(self.theta1, other.theta1):
            a += b

    @classmethod
    def zeros_like(cls, params: GcnParams) -> GcnGrads:
        return cls(
            [np.zeros_like(m) for m in params.theta0],
            [np.zeros_like(m) for m in params.theta1],
        )


def glorot_init(dims, leaky_slope: float = 0.01, seed: int = 0) -> GcnParams:
    """Uniform(+-sqrt(6 / (fan_in + fan_out))) for every matrix; seeded."""
    dims = tuple(int(d) for d in dims)
    rng = substream(seed, "glorot")
    theta0, theta1 = [], []
    for l in range(len(dims) - 1):
        limit = math.sqrt(6.0 / (dims[l] + dims[l + 1]))
        theta0.append(rng.uniform(-limit, limit, size=(dims[l], dims[l + 1])))
        theta1.append(rng.uniform(-limit, limit, size=(dims[l], dims[l + 1])))
    return GcnParams(dims, theta0, theta1, leaky_slope)


def _leaky(s: np.ndarray, slope: float) -> np.ndarray:
    return np.where(s > 0, s, slope * s)


def _leaky_grad(s: np.ndarray, slope: float) -> np.ndarray:
    return np.where(s > 0, 1.0, slope)


def gcn_forward(params: GcnParams, g: Graph, x0) -> tuple[np.ndarray, ForwardCache]:
    """Full layered forward pass; returns the embedding z and the cache."""
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (g.num_nodes,):
        raise DimensionError(
            f"input shape {x0.shape} does not match graph size {g.num_nodes}"
        )
    if x0.size and not np.all(np.isfinite(x0)):
        raise NumericError("non-finite input features")
    L = params.num_layers
    x = [x0.reshape(g.num_nodes, 1)]
    lx, pre = [], []
    for l in range(L):
        lxl = laplacian_apply(g, x[l])
        s = x[l] @ params.theta0[l] + lxl @ params.theta1[l]
        if s.size and not np.all(np.isfinite(s)):
            raise NumericError(f"non-finite activations at layer {l}")
        lx.append(lxl)
        pre.append(s)
        x.append(_leaky(s, params.leaky_slope) if l < L - 1 else s)
    z = x[-1][:, 0].copy()
    return z, ForwardCache(g, x, lx, pre)


def gcn_forward_1layer(theta0: float, theta1: float, g: Graph, u) -> np.ndarray:
    """Single-layer closed form, computed node by node from neighbor data.

    z(v) = u(v) * theta0 + (u(v) - sum over neighbors vi of
    u(vi) / sqrt(d_v * d_vi)) * theta1. This is the distributed route; it
    must agree with gcn_forward on 1x1 parameters.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (g.num_nodes,):
        raise DimensionError("input length must match graph size")
    deg = g.degrees
    z = np.empty(g.num_nodes)
    for v in range(g.num_nodes):
        acc = 0.0
        if deg[v] > 0:
            dv = math.sqrt(float(deg[v]))
            for vi in g.neighbors(v):
                acc += u[vi] / (dv * math.sqrt(float(deg[vi])))
        z[v] = u[v] * theta0 + (u[v] - acc) * theta1
    return z


def gcn_backward(params: GcnParams, cache: ForwardCache, grad_z) -> GcnGrads:
    """Reverse-mode gradients of a scalar loss wrt every parameter matrix.

    ``grad_z`` is d loss / d z. Uses L^T = L to push gradients through the
    graph shift.
    """
    L = params.num_layers
    if len(cache.x) != L + 1 or any(
        cache.x[l].shape[1] != params.dims[l] for l in range(L + 1)
    ):
        raise ParameterError("cache does not match params (layer shapes differ)")
    n = cache.graph.num_nodes
    grad_z = np.asarray(grad_z, dtype=np.float64)
    if grad_z.shape != (n,):
        raise DimensionError("grad_z length must match graph size")

    g_next = grad_z.reshape(n, 1)
    d0 = [None] * L
    d1 = [None] * L
    for l in range(L - 1, -1, -1):
        ds = g_next if l == L - 1 else g_next * _leaky_grad(cache.pre[l], params.leaky_slope)
        d0[l] = cache.x[l].T @ ds
        d1[l] = cache.lx[l].T @ ds
        if l > 0:
            g_next = ds @ params.theta0[l].T + laplacian_apply(
                cache.graph, ds @ params.theta1[l].T
            )
    return GcnGrads(d0, d1)


def gcn_schedule(
    params: GcnParams,
    g: Graph,
    u,
    normalize: bool = True,
    single_round: bool = False,
) -> tuple[IndependentSet, np.ndarray, RoundTrace]:
    """Full pipeline: embed, rescale utilities, run the local greedy.

    With ``normalize`` the GCN input is u / max(u) so deployment utility
    scales (e.g. packet counts up to 100) match the unit-scale training
    inputs; the element-wise product always uses the original u, and the
    returned set is valued in original-utility units. The trace folds the L
    embedding exchanges into the weight-exchange count.
    """
    u = check_utilities(g, u)
    x0 = u
    if normalize and u.size:
        peak = u.max()
        if peak > 0:
            x0 = u / peak
    z, _ = gcn_forward(params, g, x0)
    w = z * u
    sel, trace = local_greedy(g, w, single_round=single_round)
    result = validate_set(g, sel.members, u)
    traced = RoundTrace(
        weight_exchange_rounds=trace.weight_exchange_rounds + params.num_layers,
        state_exchange_rounds=trace.state_exchange_rounds,
        decided_per_round=trace.decided_per_round,
    )
    return result, z, traced


# ---------------------------------------------------------------------------
# Model persistence: a self-describing JSON document. Floats are written via
# repr and round-trip exactly.
# ---------------------------------------------------------------------------


def save_model(params: GcnParams, path) -> None:
    doc = {
        "format_version": params.version,
        "dims": list(params.dims),
        "leaky_slope": params.leaky_slope,
        "layers": [
            {
                "theta0": params.theta0[l].tolist(),
                "theta1": params.theta1[l].tolist(),
            }
            for l in range(params.num_layers)
        ],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path) -> GcnParams:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model file ({exc})") from None
    try:
        version = str(doc["format_version"])
        if version != MODEL_FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: format version {version!r} unsupported "
                f"(expected {MODEL_FORMAT_VERSION!r})"
            )
        dims = tuple(int(d) for d in doc["dims"])
        layers = doc["layers"]
        theta0 = [np.asarray(layer["theta0"], dtype=np.float64) for layer in layers]
        theta1 = [np.asarray(layer["theta1"], dtype=np.float64) for layer in layers]
        return GcnParams(dims, theta0, theta1, float(doc["leaky_slope"]), version)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, ParameterError) as exc:
        raise ModelFormatError(f"{path}: inconsistent model file ({exc})") from None
