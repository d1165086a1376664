"""Minimal dense feed-forward kernel in float64 numpy.

Provides exactly what the agents need and nothing more: forward evaluation,
exact reverse-mode gradients, bias-corrected Adam, global-norm gradient
clipping, Polyak mixing, and a bit-exact checkpoint format. Parameters are
handled as flat lists [W0, b0, W1, b1, ...] so the optimizer and the mixing
helpers stay shape-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("identity", "tanh")

_CHECKPOINT_VERSION = 1


def _apply(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def _grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    # a is the already-computed activation of z
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - a * a
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class Mlp:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def activation_for(self, layer: int) -> str:
        return self.output_activation if layer == len(self.weights) - 1 else self.hidden_activation


def create_mlp(
    layer_dims,
    rng: np.random.Generator,
    hidden_activation: str = "relu",
    output_activation: str = "identity",
) -> Mlp:
    """Build an MLP with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) parameters."""
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"invalid layer dims {dims}")
    if hidden_activation not in HIDDEN_ACTIVATIONS:
        raise ValueError(f"hidden activation must be one of {HIDDEN_ACTIVATIONS}")
    if output_activation not in OUTPUT_ACTIVATIONS:
        raise ValueError(f"output activation must be one of {OUTPUT_ACTIVATIONS}")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Mlp(dims, weights, biases, hidden_activation, output_activation)


def get_params(net: Mlp) -> list[np.ndarray]:
    out = []
    for w, b in zip(net.weights, net.biases):
        out.append(w)
        out.append(b)
    return out


def set_params(net: Mlp, params) -> None:
    expected = 2 * len(net.weights)
    if len(params) != expected:
        raise ValueError(f"expected {expected} parameter arrays, got {len(params)}")
    for i in range(len(net.weights)):
        w, b = params[2 * i], params[2 * i + 1]
        if w.shape != net.weights[i].shape or b.shape != net.biases[i].shape:
            raise ValueError(f"parameter shape mismatch at layer {i}")
        net.weights[i] = np.asarray(w, dtype=np.float64)
        net.biases[i] = np.asarray(b, dtype=np.float64)


def copy_params(params) -> list[np.ndarray]:
    return [np.array(p, dtype=np.float64) for p in params]


def clone(net: Mlp) -> Mlp:
    return Mlp(
        net.layer_dims,
        [w.copy() for w in net.weights],
        [b.copy() for b in net.biases],
        net.hidden_activation,
        net.output_activation,
    )


def _as_batch(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim == 2:
        return arr, False
    raise ValueError(f"input must be a vector or a batch of vectors, got ndim {arr.ndim}")


def make_dropout_masks(net: Mlp, rate: float, rng: np.random.Generator):
    """Inverted-dropout masks for the hidden layers; None means no dropout."""
    if rate == 0.0:
        return None
    if not 0.0 < rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    masks = []
    for dim in net.layer_dims[1:-1]:
        keep = (rng.random(dim) >= rate).astype(np.float64)
        masks.append(keep / (1.0 - rate))
    return masks


def _forward_pass(net: Mlp, x: np.ndarray, dropout_masks):
    """Returns (activations per layer incl. input, pre-activations per layer)."""
    acts = [x]
    pres = []
    a = x
    n_layers = len(net.weights)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        a = _apply(net.activation_for(i), z)
        if dropout_masks is not None and i < n_layers - 1:
            a = a * dropout_masks[i]
        pres.append(z)
        acts.append(a)
    return acts, pres


def forward(net: Mlp, x, dropout_masks=None) -> np.ndarray:
    """Evaluate the network; accepts a single vector or a (batch, dim) array."""
    batch, squeeze = _as_batch(x)
    if batch.shape[1] != net.in_dim:
        raise ValueError(f"input dim {batch.shape[1]} != network input {net.in_dim}")
    if not np.all(np.isfinite(batch)):
        raise ValueError("non-finite input")
    acts, _ = _forward_pass(net, batch, dropout_masks)
    out = acts[-1]
    return out[0] if squeeze else out


def backward(net: Mlp, x, upstream_grad, dropout_masks=None):
    """Exact gradients of sum(output * upstream_grad) w.r.t. params and input.

    Returns (param_grads, input_grad) with param_grads ordered like
    :func:`get_params`. For a batch, parameter gradients accumulate over rows;
    the caller folds any 1/N into ``upstream_grad``.
    """
    batch, squeeze = _as_batch(x)
    up, _ = _as_batch(upstream_grad)
    if batch.shape[1] != net.in_dim:
        raise ValueError(f"input dim {batch.shape[1]} != network input {net.in_dim}")
    if up.shape != (batch.shape[0], net.out_dim):
        raise ValueError(f"upstream grad shape {up.shape} != {(batch.shape[0], net.out_dim)}")

    acts, pres = _forward_pass(net, batch, dropout_masks)
    n_layers = len(net.weights)
    grads: list[np.ndarray | None] = [None] * (2 * n_layers)
    g = up
    for i in range(n_layers - 1, -1, -1):
        act_name = net.activation_for(i)
        local = _grad(act_name, pres[i], _apply(act_name, pres[i]))
        if dropout_masks is not None and i < n_layers - 1:
            local = local * dropout_masks[i]
        delta = g * local
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        g = delta @ net.weights[i].T
    input_grad = g[0] if squeeze else g
    return grads, input_grad


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one parameter list."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def create(cls, params, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        return cls(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            step=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(params, grads, opt: AdamState):
    """One Adam update. Returns (new_params, opt) with opt mutated in place."""
    if len(params) != len(grads) or len(params) != len(opt.m):
        raise ValueError("parameter/gradient/moment list lengths differ")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient")
    opt.step += 1
    t = opt.step
    bc1 = 1.0 - opt.beta1**t
    bc2 = 1.0 - opt.beta2**t
    new_params = []
    for i, (p, g) in enumerate(zip(params, grads)):
        opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g
        opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * (g * g)
        m_hat = opt.m[i] / bc1
        v_hat = opt.v[i] / bc2
        new_params.append(p - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps))
    return new_params, opt


def global_norm(grads) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_gradients(grads, max_norm: float):
    """Scale all gradients by max_norm/norm when the global L2 norm exceeds it."""
    if not max_norm > 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return list(grads)
    scale = max_norm / norm
    return [g * scale for g in grads]


def soft_update(target_params, source_params, tau: float):
    """Polyak mix: target <- tau * source + (1 - tau) * target, elementwise."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if len(target_params) != len(source_params):
        raise ValueError("parameter list lengths differ")
    out = []
    for tgt, src in zip(target_params, source_params):
        if tgt.shape != src.shape:
            raise ValueError(f"shape mismatch {tgt.shape} vs {src.shape}")
        out.append(tau * src + (1.0 - tau) * tgt)
    return out


def checkpoint_payload(net: Mlp, prefix: str = "") -> dict:
    """Flat array dict describing a network: dims, activations, parameters."""
    payload = {
        f"{prefix}layer_dims": np.array(net.layer_dims, dtype=np.int64),
        f"{prefix}hidden_activation": np.array(net.hidden_activation),
        f"{prefix}output_activation": np.array(net.output_activation),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        payload[f"{prefix}w{i}"] = w
        payload[f"{prefix}b{i}"] = b
    return payload


def net_from_payload(data, prefix: str = "") -> Mlp:
    dims = tuple(int(d) for d in data[f"{prefix}layer_dims"])
    return Mlp(
        layer_dims=dims,
        weights=[np.array(data[f"{prefix}w{i}"]) for i in range(len(dims) - 1)],
        biases=[np.array(data[f"{prefix}b{i}"]) for i in range(len(dims) - 1)],
        hidden_activation=str(data[f"{prefix}hidden_activation"]),
        output_activation=str(data[f"{prefix}output_activation"]),
    )


def save_checkpoint(net: Mlp, path, extras: dict | None = None) -> None:
    """Write a versioned, bit-exact dump of dims, activations, and parameters.

    ``extras`` entries (str, int, float, or arrays) are stored under an
    ``extra_`` prefix and round-trip through :func:`load_checkpoint`.
    """
    payload = {"version": np.array(_CHECKPOINT_VERSION)}
    payload.update(checkpoint_payload(net))
    for key, value in (extras or {}).items():
        payload[f"extra_{key}"] = np.asarray(value)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path) -> tuple[Mlp, dict]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        net = net_from_payload(data)
        extras = {}
        for key in data.files:
            if key.startswith("extra_"):
                value = data[key]
                extras[key[len("extra_") :]] = value.item() if value.ndim == 0 else value
    return net, extras
