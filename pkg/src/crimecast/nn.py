"""LSTM -> GRU -> dropout -> dense regressor with hand-derived backpropagation through time.

Every forward function accepts a single sequence ``(T, input_size)`` or a batch
``(B, T, input_size)``; backward functions return gradients summed over the batch.
All arithmetic is float64.

Gate order is ``i, f, g, o`` for the LSTM and ``z, r, n`` for the GRU. The GRU
applies the reset gate to the recurrent product, ``n = tanh(W x + r * (U h) + b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np
from scipy.special import expit

from .exceptions import InvalidArgument, InvalidRate, ShapeMismatch

LSTM_GATES = ("input", "forget", "cell", "output")
GRU_GATES = ("update", "reset", "candidate")
FORGET = LSTM_GATES.index("forget")


sigmoid = expit


@dataclass
class LstmParams:
    input_weights: np.ndarray  # (4, hidden, input)
    recurrent_weights: np.ndarray  # (4, hidden, hidden)
    biases: np.ndarray  # (4, hidden)

    @property
    def hidden_size(self) -> int:
        return self.biases.shape[1]

    @property
    def input_size(self) -> int:
        return self.input_weights.shape[2]


@dataclass
class GruParams:
    input_weights: np.ndarray  # (3, hidden, input)
    recurrent_weights: np.ndarray  # (3, hidden, hidden)
    biases: np.ndarray  # (3, hidden)

    @property
    def hidden_size(self) -> int:
        return self.biases.shape[1]

    @property
    def input_size(self) -> int:
        return self.input_weights.shape[2]


@dataclass
class DenseParams:
    weights: np.ndarray  # (1, input)
    bias: np.ndarray  # (1,)


_LAYER_FIELDS = (
    ("lstm", "input_weights"),
    ("lstm", "recurrent_weights"),
    ("lstm", "biases"),
    ("gru", "input_weights"),
    ("gru", "recurrent_weights"),
    ("gru", "biases"),
    ("head", "weights"),
    ("head", "bias"),
)


class _ArrayTree:
    """Shared traversal for parameter-shaped containers."""

    lstm: LstmParams
    gru: GruParams
    head: DenseParams

    def named_arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        for layer, name in _LAYER_FIELDS:
            yield f"{layer}.{name}", getattr(getattr(self, layer), name)

    def map_arrays(self, fn: Callable[[str, np.ndarray], np.ndarray]):
        layers = {
            layer: replace(getattr(self, layer), **{
                name: fn(f"{layer}.{name}", getattr(getattr(self, layer), name))
                for l2, name in _LAYER_FIELDS if l2 == layer
            })
            for layer in ("lstm", "gru", "head")
        }
        return replace(self, **layers)

    def copy(self):
        return self.map_arrays(lambda _, a: a.copy())


@dataclass
class NetworkParams(_ArrayTree):
    lstm: LstmParams
    gru: GruParams
    head: DenseParams
    dropout_rate: float = 0.2
    seed: int | None = None

    def __post_init__(self):
        if self.gru.input_size != self.lstm.hidden_size:
            raise ShapeMismatch(
                f"GRU input {self.gru.input_size} != LSTM hidden {self.lstm.hidden_size}")
        if self.head.weights.shape != (1, self.gru.hidden_size):
            raise ShapeMismatch(f"head weights {self.head.weights.shape} do not match GRU hidden")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidRate(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (self.lstm.input_size, self.lstm.hidden_size, self.gru.hidden_size)


@dataclass
class NetworkGradients(_ArrayTree):
    lstm: LstmParams
    gru: GruParams
    head: DenseParams

    def scale(self, k: float) -> "NetworkGradients":
        return self.map_arrays(lambda _, a: a * k)


@dataclass(frozen=True)
class NetworkSpec:
    input_size: int = 10
    lstm_size: int = 64
    gru_size: int = 32
    dropout_rate: float = 0.2


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(seed: int, spec: NetworkSpec = NetworkSpec()) -> NetworkParams:
    """Glorot-uniform weights per gate matrix, zero biases, LSTM forget bias 1."""
    for name in ("input_size", "lstm_size", "gru_size"):
        if getattr(spec, name) < 1:
            raise InvalidArgument(f"{name} must be positive, got {getattr(spec, name)}")
    if not 0 <= spec.dropout_rate < 1:
        raise InvalidArgument(f"dropout_rate must be in [0, 1), got {spec.dropout_rate}")
    rng = np.random.default_rng(seed)
    i, h1, h2 = spec.input_size, spec.lstm_size, spec.gru_size

    lstm_bias = np.zeros((4, h1))
    lstm_bias[FORGET] = 1.0
    lstm = LstmParams(
        np.stack([_glorot(rng, (h1, i)) for _ in range(4)]),
        np.stack([_glorot(rng, (h1, h1)) for _ in range(4)]),
        lstm_bias,
    )
    gru = GruParams(
        np.stack([_glorot(rng, (h2, h1)) for _ in range(3)]),
        np.stack([_glorot(rng, (h2, h2)) for _ in range(3)]),
        np.zeros((3, h2)),
    )
    head = DenseParams(_glorot(rng, (1, h2)), np.zeros(1))
    return NetworkParams(lstm, gru, head, dropout_rate=spec.dropout_rate, seed=seed)


def zero_params(spec: NetworkSpec = NetworkSpec()) -> NetworkParams:
    i, h1, h2 = spec.input_size, spec.lstm_size, spec.gru_size
    return NetworkParams(
        LstmParams(np.zeros((4, h1, i)), np.zeros((4, h1, h1)), np.zeros((4, h1))),
        GruParams(np.zeros((3, h2, h1)), np.zeros((3, h2, h2)), np.zeros((3, h2))),
        DenseParams(np.zeros((1, h2)), np.zeros(1)),
        dropout_rate=spec.dropout_rate,
    )


def _as_batch(x: np.ndarray, input_size: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    batched = x.ndim == 3
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != input_size:
        raise ShapeMismatch(f"expected (T, {input_size}) or (B, T, {input_size}), got {x.shape}")
    return x, batched


def _initial_state(state, batch: int, hidden: int) -> np.ndarray:
    if state is None:
        return np.zeros((batch, hidden))
    state = np.asarray(state, dtype=float)
    if state.shape == (hidden,):
        return np.broadcast_to(state, (batch, hidden)).copy()
    if state.shape != (batch, hidden):
        raise ShapeMismatch(f"initial state shape {state.shape}, expected ({batch}, {hidden})")
    return state.copy()


def _check_upstream(d: np.ndarray, shape: tuple[int, ...], batched: bool) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if not batched:
        d = d[None]
    if d.shape != shape:
        raise ShapeMismatch(f"upstream gradient shape {d.shape}, expected {shape}")
    return d


@dataclass
class LstmCache:
    x: np.ndarray  # (B, T, I)
    h: np.ndarray  # (B, T+1, H); h[:, 0] is h0
    c: np.ndarray  # (B, T+1, H)
    gates: np.ndarray  # (B, T, 4, H) post-activation
    tanh_c: np.ndarray  # (B, T, H)
    batched: bool


def lstm_forward(params: LstmParams, sequence, h0=None, c0=None):
    """Run the LSTM; returns (hidden states per step, cache)."""
    hidden = params.hidden_size
    x, batched = _as_batch(sequence, params.input_size)
    B, T, _ = x.shape
    Wx = params.input_weights.reshape(4 * hidden, -1)
    Wh = params.recurrent_weights.reshape(4 * hidden, hidden)
    b = params.biases.reshape(-1)

    h = np.empty((B, T + 1, hidden))
    c = np.empty((B, T + 1, hidden))
    h[:, 0] = _initial_state(h0, B, hidden)
    c[:, 0] = _initial_state(c0, B, hidden)
    gates = np.empty((B, T, 4, hidden))
    tanh_c = np.empty((B, T, hidden))
    projected = x @ Wx.T + b  # (B, T, 4H)
    for t in range(T):
        a = (projected[:, t] + h[:, t] @ Wh.T).reshape(B, 4, hidden)
        ig, fg, og = sigmoid(a[:, 0]), sigmoid(a[:, 1]), sigmoid(a[:, 3])
        gg = np.tanh(a[:, 2])
        c[:, t + 1] = fg * c[:, t] + ig * gg
        tanh_c[:, t] = np.tanh(c[:, t + 1])
        h[:, t + 1] = og * tanh_c[:, t]
        gates[:, t, 0], gates[:, t, 1], gates[:, t, 2], gates[:, t, 3] = ig, fg, gg, og

    cache = LstmCache(x, h, c, gates, tanh_c, batched)
    out = h[:, 1:]
    return (out if batched else out[0]), cache


def lstm_backward(params: LstmParams, cache: LstmCache, d_hidden):
    """Gradients given dLoss/dh_t for every step; returns (LstmParams-shaped grads, d_input)."""
    hidden = params.hidden_size
    B, T, _ = cache.x.shape
    dH = _check_upstream(d_hidden, (B, T, hidden), cache.batched)
    Wx = params.input_weights.reshape(4 * hidden, -1)
    Wh = params.recurrent_weights.reshape(4 * hidden, hidden)

    d_pre = np.empty((B, T, 4, hidden))
    dh_next = np.zeros((B, hidden))
    dc_next = np.zeros((B, hidden))
    for t in reversed(range(T)):
        ig, fg, gg, og = (cache.gates[:, t, k] for k in range(4))
        tc = cache.tanh_c[:, t]
        dh = dH[:, t] + dh_next
        dc = dh * og * (1.0 - tc * tc) + dc_next
        d_pre[:, t, 0] = dc * gg * ig * (1.0 - ig)
        d_pre[:, t, 1] = dc * cache.c[:, t] * fg * (1.0 - fg)
        d_pre[:, t, 2] = dc * ig * (1.0 - gg * gg)
        d_pre[:, t, 3] = dh * tc * og * (1.0 - og)
        dc_next = dc * fg
        dh_next = d_pre[:, t].reshape(B, 4 * hidden) @ Wh

    flat = d_pre.reshape(B * T, 4 * hidden)
    grads = LstmParams(
        (flat.T @ cache.x.reshape(B * T, -1)).reshape(params.input_weights.shape),
        (flat.T @ cache.h[:, :-1].reshape(B * T, hidden)).reshape(params.recurrent_weights.shape),
        flat.sum(axis=0).reshape(params.biases.shape),
    )
    dx = d_pre.reshape(B, T, 4 * hidden) @ Wx
    return grads, (dx if cache.batched else dx[0])


@dataclass
class GruCache:
    x: np.ndarray  # (B, T, I)
    h: np.ndarray  # (B, T+1, H)
    gates: np.ndarray  # (B, T, 3, H): z, r, n post-activation
    recurrent_candidate: np.ndarray  # (B, T, H): U_n h_{t-1}
    batched: bool


def gru_forward(params: GruParams, sequence, h0=None):
    hidden = params.hidden_size
    x, batched = _as_batch(sequence, params.input_size)
    B, T, _ = x.shape
    Wx = params.input_weights.reshape(3 * hidden, -1)
    Wh = params.recurrent_weights.reshape(3 * hidden, hidden)
    b = params.biases.reshape(-1)

    h = np.empty((B, T + 1, hidden))
    h[:, 0] = _initial_state(h0, B, hidden)
    gates = np.empty((B, T, 3, hidden))
    rec_n = np.empty((B, T, hidden))
    projected = (x @ Wx.T + b).reshape(B, T, 3, hidden)
    for t in range(T):
        ah = (h[:, t] @ Wh.T).reshape(B, 3, hidden)
        z = sigmoid(projected[:, t, 0] + ah[:, 0])
        r = sigmoid(projected[:, t, 1] + ah[:, 1])
        n = np.tanh(projected[:, t, 2] + r * ah[:, 2])
        h[:, t + 1] = (1.0 - z) * n + z * h[:, t]
        gates[:, t, 0], gates[:, t, 1], gates[:, t, 2] = z, r, n
        rec_n[:, t] = ah[:, 2]

    cache = GruCache(x, h, gates, rec_n, batched)
    out = h[:, 1:]
    return (out if batched else out[0]), cache


def gru_backward(params: GruParams, cache: GruCache, d_hidden):
    hidden = params.hidden_size
    B, T, _ = cache.x.shape
    dH = _check_upstream(d_hidden, (B, T, hidden), cache.batched)
    Wx = params.input_weights.reshape(3 * hidden, -1)
    Wh = params.recurrent_weights.reshape(3 * hidden, hidden)

    d_in = np.empty((B, T, 3, hidden))  # w.r.t. input projections (and biases)
    d_rec = np.empty((B, T, 3, hidden))  # w.r.t. recurrent projections
    dh_next = np.zeros((B, hidden))
    for t in reversed(range(T)):
        z, r, n = (cache.gates[:, t, k] for k in range(3))
        h_prev = cache.h[:, t]
        dh = dH[:, t] + dh_next
        da_n = dh * (1.0 - z) * (1.0 - n * n)
        da_z = dh * (h_prev - n) * z * (1.0 - z)
        da_r = da_n * cache.recurrent_candidate[:, t] * r * (1.0 - r)
        d_in[:, t, 0], d_in[:, t, 1], d_in[:, t, 2] = da_z, da_r, da_n
        d_rec[:, t, 0], d_rec[:, t, 1], d_rec[:, t, 2] = da_z, da_r, da_n * r
        dh_next = dh * z + d_rec[:, t].reshape(B, 3 * hidden) @ Wh

    flat_in = d_in.reshape(B * T, 3 * hidden)
    flat_rec = d_rec.reshape(B * T, 3 * hidden)
    grads = GruParams(
        (flat_in.T @ cache.x.reshape(B * T, -1)).reshape(params.input_weights.shape),
        (flat_rec.T @ cache.h[:, :-1].reshape(B * T, hidden)).reshape(params.recurrent_weights.shape),
        flat_in.sum(axis=0).reshape(params.biases.shape),
    )
    dx = d_in.reshape(B, T, 3 * hidden) @ Wx
    return grads, (dx if cache.batched else dx[0])


def dropout_forward(x, rate: float, mode: str = "train", rng: np.random.Generator | None = None):
    """Inverted dropout. Returns (output, mask) with ``output == x * mask``."""
    if not 0 <= rate < 1:
        raise InvalidRate(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise InvalidArgument(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(x, dtype=float)
    if mode == "eval" or rate == 0:
        mask = np.ones_like(x)
        return x.copy(), mask
    if rng is None:
        raise InvalidArgument("train-mode dropout needs a random generator")
    keep = rng.random(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


@dataclass
class ForwardCache:
    lstm: LstmCache
    gru: GruCache
    features: np.ndarray  # (B, gru_hidden): final GRU state after dropout
    dropout_mask: np.ndarray
    prediction: np.ndarray = field(repr=False)  # (B,) head pre-activation
    batched: bool = False


def network_forward(
    params: NetworkParams, sequence, mode: str = "eval", rng: np.random.Generator | None = None
):
    """Scalar prediction per sequence; returns (prediction, cache)."""
    x, batched = _as_batch(sequence, params.lstm.input_size)
    h1, lstm_cache = lstm_forward(params.lstm, x)
    h2, gru_cache = gru_forward(params.gru, h1)
    features, mask = dropout_forward(h2[:, -1], params.dropout_rate, mode, rng)
    pred = features @ params.head.weights[0] + params.head.bias[0]
    cache = ForwardCache(lstm_cache, gru_cache, features, mask, pred, batched)
    return (pred if batched else float(pred[0])), cache


def network_backward(params: NetworkParams, cache: ForwardCache, d_prediction) -> NetworkGradients:
    d_pred = np.atleast_1d(np.asarray(d_prediction, dtype=float))
    B = cache.features.shape[0]
    if d_pred.shape != (B,):
        raise ShapeMismatch(f"d_prediction shape {d_pred.shape}, expected ({B},)")
    head = DenseParams(
        (d_pred @ cache.features)[None, :],
        np.array([d_pred.sum()]),
    )
    d_last = np.outer(d_pred, params.head.weights[0]) * cache.dropout_mask
    T = cache.gru.x.shape[1]
    d_h2 = np.zeros((B, T, params.gru.hidden_size))
    d_h2[:, -1] = d_last
    gru_grads, d_h1 = gru_backward(params.gru, cache.gru, d_h2)
    lstm_grads, _ = lstm_backward(params.lstm, cache.lstm, d_h1)
    return NetworkGradients(lstm_grads, gru_grads, head)


def _eval_pred(params: NetworkParams, sequence) -> float:
    return network_forward(params, sequence, mode="eval")[0]


def gradient_check(
    params: NetworkParams,
    sequence,
    target: float,
    epsilon: float = 1e-5,
    backward: Callable[[NetworkParams, ForwardCache, float], NetworkGradients] = network_backward,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The loss is the squared error of one sequence in eval mode. ``backward`` can
    be swapped to check a modified gradient routine.
    """
    pred, cache = network_forward(params, sequence, mode="eval")
    analytic = dict(backward(params, cache, 2.0 * (pred - target)).named_arrays())
    worst = 0.0
    for name, theta in params.copy().named_arrays():
        probe = params.copy()
        array = dict(probe.named_arrays())[name]
        grad = analytic[name]
        for idx in np.ndindex(theta.shape):
            original = array[idx]
            array[idx] = original + epsilon
            plus = _eval_pred(probe, sequence)
            array[idx] = original - epsilon
            minus = _eval_pred(probe, sequence)
            array[idx] = original
            # (p+ - t)^2 - (p- - t)^2 factored, so the squares never cancel
            numeric = (plus - minus) * (plus + minus - 2.0 * target) / (2.0 * epsilon)
            denom = max(abs(grad[idx]), abs(numeric), 1e-8)
            worst = max(worst, abs(grad[idx] - numeric) / denom)
    return worst
