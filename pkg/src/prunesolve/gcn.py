"""Graph convolutional scorer with hand-written reverse-mode gradients.

The model is a stack of layers ``h_next = relu(h @ w_self + (A @ h) @ w_neigh)``
with a linear final layer, no biases, and sum aggregation over the raw
adjacency matrix. Forward passes in training mode keep every intermediate
needed by :func:`backward`; the optimizer mutates parameters in place and
bumps a version counter so stale caches are rejected instead of silently
producing wrong gradients.

Losses are sums (not means) over the nodes they are evaluated on, and each
loss returns its gradient with respect to the logits so callers can combine
them linearly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .graph import Graph, make_rng

LOG_EPS = 1e-12


@dataclass
class GcnParams:
    """Per-layer self and neighbor weight matrices."""

    w_self: list[np.ndarray]
    w_neigh: list[np.ndarray]
    version: int = 0

    def __post_init__(self):
        if len(self.w_self) != len(self.w_neigh) or not self.w_self:
            raise ValueError("w_self and w_neigh must be equal-length, non-empty")
        for ws, wn in zip(self.w_self, self.w_neigh):
            if ws.shape != wn.shape:
                raise ValueError("self and neighbor weights must match in shape")
        for a, b in zip(self.w_self, self.w_self[1:]):
            if a.shape[1] != b.shape[0]:
                raise ValueError("consecutive layer shapes do not chain")

    @property
    def dims(self) -> list[int]:
        return [self.w_self[0].shape[0]] + [w.shape[1] for w in self.w_self]

    @property
    def n_layers(self) -> int:
        return len(self.w_self)

    def param_count(self) -> int:
        return sum(w.size for w in self.w_self) + sum(w.size for w in self.w_neigh)

    def copy(self) -> "GcnParams":
        return GcnParams(
            [w.copy() for w in self.w_self],
            [w.copy() for w in self.w_neigh],
            self.version,
        )


def init_params(dims, seed: int) -> GcnParams:
    """Glorot-uniform initialization, self weights drawn before neighbor
    weights at each layer so a seed pins the full draw order."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise ValueError(f"need at least two positive layer sizes, got {dims}")
    rng = make_rng(seed)
    w_self, w_neigh = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w_self.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        w_neigh.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    return GcnParams(w_self, w_neigh)


@dataclass
class ForwardCache:
    """Intermediates of one training-mode forward pass."""

    inputs: list[np.ndarray]  # layer inputs h_k, post-dropout
    aggs: list[np.ndarray]  # A @ h_k per layer
    prez: list[np.ndarray]  # pre-activations z_k
    drop_scale: list[np.ndarray | None]  # inverted-dropout factors per hidden layer
    version: int


def _run_forward(g: Graph, params: GcnParams, x: np.ndarray,
                 dropout_rate: float, rng) -> tuple[np.ndarray, ForwardCache]:
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ValueError(f"features must be (n, d), got {x.shape} for n={g.n}")
    if x.shape[1] != params.dims[0]:
        raise ValueError(
            f"feature width {x.shape[1]} does not match input layer {params.dims[0]}"
        )
    if not 0.0 <= dropout_rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    adj = g.adjacency_csr()
    h = np.asarray(x, dtype=np.float64)
    inputs, aggs, prez, scales = [], [], [], []
    last = params.n_layers - 1
    for k in range(params.n_layers):
        agg = adj @ h
        z = h @ params.w_self[k] + agg @ params.w_neigh[k]
        inputs.append(h)
        aggs.append(agg)
        prez.append(z)
        if k == last:
            h = z
        else:
            a = np.maximum(z, 0.0)
            if dropout_rate > 0.0:
                keep = rng.random(a.shape) >= dropout_rate
                scale = keep / (1.0 - dropout_rate)
                scales.append(scale)
                h = a * scale
            else:
                scales.append(None)
                h = a
    return h, ForwardCache(inputs, aggs, prez, scales, params.version)


def forward(g: Graph, params: GcnParams, x: np.ndarray) -> np.ndarray:
    """Evaluation-mode logits (no dropout)."""
    logits, _ = _run_forward(g, params, x, 0.0, None)
    return logits


def forward_train(g: Graph, params: GcnParams, x: np.ndarray,
                  dropout_rate: float = 0.0,
                  rng=None) -> tuple[np.ndarray, ForwardCache]:
    """Training-mode forward pass; keeps intermediates for :func:`backward`.

    Dropout is the inverted kind, applied after each hidden relu only, so
    evaluation needs no rescaling. ``rng`` is required when dropout_rate > 0.
    """
    if dropout_rate > 0.0 and rng is None:
        raise ValueError("dropout needs an rng")
    return _run_forward(g, params, x, dropout_rate, rng)


@dataclass
class Grads:
    w_self: list[np.ndarray]
    w_neigh: list[np.ndarray]

    def scaled(self, factor: float) -> "Grads":
        return Grads(
            [g * factor for g in self.w_self],
            [g * factor for g in self.w_neigh],
        )

    def add(self, other: "Grads") -> "Grads":
        return Grads(
            [a + b for a, b in zip(self.w_self, other.w_self)],
            [a + b for a, b in zip(self.w_neigh, other.w_neigh)],
        )


def backward(g: Graph, params: GcnParams, cache: ForwardCache,
             grad_logits: np.ndarray) -> Grads:
    """Gradients of a scalar loss with respect to every weight matrix.

    ``grad_logits`` is the loss gradient at the final pre-activations.
    Aggregation backpropagates through the adjacency as A itself because the
    graph is undirected, so A is symmetric.
    """
    if cache.version != params.version:
        raise RuntimeError(
            "forward cache is stale: parameters were updated after the pass"
        )
    adj = g.adjacency_csr()
    g_self = [None] * params.n_layers
    g_neigh = [None] * params.n_layers
    grad_z = np.asarray(grad_logits, dtype=np.float64)
    for k in range(params.n_layers - 1, -1, -1):
        h = cache.inputs[k]
        g_self[k] = h.T @ grad_z
        g_neigh[k] = cache.aggs[k].T @ grad_z
        if k == 0:
            break
        grad_agg = grad_z @ params.w_neigh[k].T
        grad_h = grad_z @ params.w_self[k].T + adj @ grad_agg
        scale = cache.drop_scale[k - 1]
        if scale is not None:
            grad_h = grad_h * scale
        grad_z = grad_h * (cache.prez[k - 1] > 0.0)
    return Grads(g_self, g_neigh)


# ---------------------------------------------------------------------------
# Losses


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def supervised_loss(logits: np.ndarray, labels: np.ndarray, node_ids: np.ndarray,
                    weights: np.ndarray | None = None
                    ) -> tuple[float, np.ndarray]:
    """Weighted cross entropy summed over ``node_ids``.

    Returns the loss and its gradient with respect to the full logits array
    (zero outside ``node_ids``). ``weights`` defaults to all ones and is
    indexed positionally alongside ``node_ids``.
    """
    node_ids = np.asarray(node_ids, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)[node_ids]
    if weights is None:
        w = np.ones(len(node_ids), dtype=np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(node_ids),):
            raise ValueError("weights must align with node_ids")
    probs = softmax(logits[node_ids])
    picked = probs[np.arange(len(node_ids)), y]
    loss = float(-(w * np.log(np.maximum(picked, LOG_EPS))).sum())
    grad_rows = probs.copy()
    grad_rows[np.arange(len(node_ids)), y] -= 1.0
    grad_rows *= w[:, None]
    grad = np.zeros_like(np.asarray(logits, dtype=np.float64))
    grad[node_ids] = grad_rows
    return loss, grad


def kd_loss(student_logits: np.ndarray, teacher_logits: np.ndarray,
            node_ids: np.ndarray, temperature: float = 1.0
            ) -> tuple[float, np.ndarray]:
    """Distillation cross entropy against softened teacher outputs, summed
    over ``node_ids``; gradient is (student - teacher softened probs) / T."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    node_ids = np.asarray(node_ids, dtype=np.int64)
    pt = softmax(np.asarray(teacher_logits)[node_ids] / temperature)
    ps = softmax(np.asarray(student_logits)[node_ids] / temperature)
    loss = float(-(pt * np.log(np.maximum(ps, LOG_EPS))).sum())
    grad = np.zeros_like(np.asarray(student_logits, dtype=np.float64))
    grad[node_ids] = (ps - pt) / temperature
    return loss, grad


# ---------------------------------------------------------------------------
# Optimizer


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per weight matrix."""

    m_self: list[np.ndarray]
    v_self: list[np.ndarray]
    m_neigh: list[np.ndarray]
    v_neigh: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: GcnParams, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(
        [np.zeros_like(w) for w in params.w_self],
        [np.zeros_like(w) for w in params.w_self],
        [np.zeros_like(w) for w in params.w_neigh],
        [np.zeros_like(w) for w in params.w_neigh],
        0, beta1, beta2, eps,
    )


def adam_step(params: GcnParams, grads: Grads, state: AdamState,
              lr: float) -> None:
    """One Adam update, in place; invalidates outstanding forward caches."""
    state.step += 1
    t = state.step
    b1, b2, eps = state.beta1, state.beta2, state.eps
    groups = (
        (params.w_self, grads.w_self, state.m_self, state.v_self),
        (params.w_neigh, grads.w_neigh, state.m_neigh, state.v_neigh),
    )
    for ws, gs, ms, vs in groups:
        for w, gr, m, v in zip(ws, gs, ms, vs):
            m *= b1
            m += (1 - b1) * gr
            v *= b2
            v += (1 - b2) * gr * gr
            m_hat = m / (1 - b1 ** t)
            v_hat = v / (1 - b2 ** t)
            w -= lr * m_hat / (np.sqrt(v_hat) + eps)
    params.version += 1


# ---------------------------------------------------------------------------
# Persistence


def save_params(params: GcnParams, path, seed: int | None = None) -> None:
    """Write weights to an ``.npz`` archive.

    The archive is self-describing: layer dims, the init seed when known,
    and the float64 matrices round-trip exactly.
    """
    arrays = {}
    for k, (ws, wn) in enumerate(zip(params.w_self, params.w_neigh)):
        arrays[f"w_self_{k}"] = ws
        arrays[f"w_neigh_{k}"] = wn
    arrays["dims"] = np.asarray(params.dims, dtype=np.int64)
    arrays["seed"] = np.array(-1 if seed is None else int(seed), dtype=np.int64)
    np.savez(path, **arrays)


def load_params(path) -> GcnParams:
    with np.load(path) as data:
        dims = data["dims"]
        n_layers = len(dims) - 1
        w_self = [data[f"w_self_{k}"].astype(np.float64) for k in range(n_layers)]
        w_neigh = [data[f"w_neigh_{k}"].astype(np.float64) for k in range(n_layers)]
    params = GcnParams(w_self, w_neigh)
    if params.dims != [int(d) for d in dims]:
        raise ValueError(f"stored dims {list(dims)} do not match matrix shapes")
    return params


def predict_probs(g: Graph, params: GcnParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities from an evaluation-mode pass."""
    return softmax(forward(g, params, x))


def time_inference(g: Graph, params: GcnParams, x: np.ndarray,
                   repeats: int = 3) -> float:
    """Median wall time of an evaluation forward pass, in milliseconds."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        forward(g, params, x)
        times.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(times))
