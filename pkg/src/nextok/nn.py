"""Dense-tensor math for the completion networks.

Everything here is plain numpy: embedding lookup, a GRU recurrence unrolled
over the context window, position-wise batch normalization before and after
the recurrent layer, a bias-free linear projection, softmax and sigmoid
output heads, cross-entropy losses, Nesterov-momentum SGD with global
gradient-norm clipping, inverted dropout, finite-difference gradient
checking, and 8-bit post-training quantization.

Training and gradient checks run in 64-bit; inference may run in 32-bit.
Parameters are addressed by dotted names (e.g. "gru.w_r") so optimizers,
serialization, and the gradient checker share one flat view.

Conventions: activations are row vectors, so an input batch is (B, features)
and weight matrices are (in_features, out_features). The GRU follows

    r_t = sigmoid(x_t W_r + h_prev U_r + b_r)
    z_t = sigmoid(x_t W_z + h_prev U_z + b_z)
    c_t = tanh(x_t W_h + (r_t * h_prev) U_h + b_h)
    h_t = (1 - z_t) * h_prev + z_t * c_t
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

BN_EPS = 1e-5
BN_MOMENTUM = 0.99
DROPOUT_RATE = 0.5
INIT_SCALE = 0.05


class TrainingError(Exception):
    """Non-finite loss, activation, or gradient during training."""


def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.result_type(x.dtype, np.float64))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits, axis: int = -1):
    """Max-shifted softmax; output is positive and sums to 1 along axis."""
    logits = np.asarray(logits)
    shifted = logits - logits.max(axis=axis, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=axis, keepdims=True)


def log_softmax(logits, axis: int = -1):
    logits = np.asarray(logits)
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


@dataclass
class GruParams:
    """Gate parameters; w_* act on the input, u_* on the previous hidden state."""

    w_r: np.ndarray
    w_z: np.ndarray
    w_h: np.ndarray
    u_r: np.ndarray
    u_z: np.ndarray
    u_h: np.ndarray
    b_r: np.ndarray
    b_z: np.ndarray
    b_h: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.u_r.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_r.shape[0]


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray


@dataclass
class NetParams:
    """Full parameter set for one network; exactly one output head.

    head is "softmax" (token distribution) or "sigmoid" (scalar probability).
    The projection has no bias and no nonlinearity. Batch-norm blocks are
    optional and sit before and after the recurrent layer.
    """

    embedding: np.ndarray
    gru: GruParams
    projection: np.ndarray
    out_weight: np.ndarray
    out_bias: np.ndarray
    head: str
    bn_in: BatchNormParams | None = None
    bn_out: BatchNormParams | None = None

    def named_tensors(self, trainable_only: bool = True) -> Iterator[tuple[str, np.ndarray]]:
        yield "embedding", self.embedding
        for gate in ("w_r", "w_z", "w_h", "u_r", "u_z", "u_h", "b_r", "b_z", "b_h"):
            yield f"gru.{gate}", getattr(self.gru, gate)
        yield "projection", self.projection
        yield "out_weight", self.out_weight
        yield "out_bias", self.out_bias
        for prefix, bn in (("bn_in", self.bn_in), ("bn_out", self.bn_out)):
            if bn is not None:
                yield f"{prefix}.gamma", bn.gamma
                yield f"{prefix}.beta", bn.beta
                if not trainable_only:
                    yield f"{prefix}.running_mean", bn.running_mean
                    yield f"{prefix}.running_var", bn.running_var

    def tensor(self, name: str) -> np.ndarray:
        for tname, arr in self.named_tensors(trainable_only=False):
            if tname == name:
                return arr
        raise KeyError(name)

    def set_tensor(self, name: str, value: np.ndarray) -> None:
        if "." in name:
            owner_name, attr = name.split(".", 1)
            owner = getattr(self, owner_name)
            setattr(owner, attr, value)
        else:
            setattr(self, name, value)

    def param_count(self) -> int:
        return sum(arr.size for _, arr in self.named_tensors())

    def copy(self) -> "NetParams":
        tensors = {n: a.copy() for n, a in self.named_tensors(trainable_only=False)}
        return NetParams.from_tensor_dict(tensors, self.head)

    def astype(self, dtype) -> "NetParams":
        tensors = {
            n: a.astype(dtype) for n, a in self.named_tensors(trainable_only=False)
        }
        return NetParams.from_tensor_dict(tensors, self.head)

    @classmethod
    def from_tensor_dict(cls, tensors: dict[str, np.ndarray], head: str) -> "NetParams":
        gru = GruParams(**{k.split(".")[1]: v for k, v in tensors.items() if k.startswith("gru.")})
        bns: dict[str, BatchNormParams | None] = {}
        for prefix in ("bn_in", "bn_out"):
            fields = {k.split(".")[1]: v for k, v in tensors.items() if k.startswith(prefix + ".")}
            bns[prefix] = BatchNormParams(**fields) if fields else None
        return cls(
            embedding=tensors["embedding"],
            gru=gru,
            projection=tensors["projection"],
            out_weight=tensors["out_weight"],
            out_bias=tensors["out_bias"],
            head=head,
            bn_in=bns["bn_in"],
            bn_out=bns["bn_out"],
        )


def init_params(
    in_vocab_size: int,
    out_size: int,
    embed_dim: int,
    hidden_dim: int,
    proj_dim: int,
    head: str = "softmax",
    use_batch_norm: bool = True,
    seed: int = 0,
) -> NetParams:
    """Seeded uniform(-0.05, 0.05) weights; batch-norm at identity."""
    if head not in ("softmax", "sigmoid"):
        raise ValueError(f"unknown head: {head!r}")
    rng = np.random.default_rng(seed)

    def uni(*shape):
        return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)

    def bn(dim):
        return BatchNormParams(
            gamma=np.ones(dim), beta=np.zeros(dim),
            running_mean=np.zeros(dim), running_var=np.ones(dim),
        )

    out_dim = out_size if head == "softmax" else 1
    return NetParams(
        embedding=uni(in_vocab_size, embed_dim),
        gru=GruParams(
            w_r=uni(embed_dim, hidden_dim), w_z=uni(embed_dim, hidden_dim),
            w_h=uni(embed_dim, hidden_dim), u_r=uni(hidden_dim, hidden_dim),
            u_z=uni(hidden_dim, hidden_dim), u_h=uni(hidden_dim, hidden_dim),
            b_r=uni(hidden_dim), b_z=uni(hidden_dim), b_h=uni(hidden_dim),
        ),
        projection=uni(hidden_dim, proj_dim),
        out_weight=uni(proj_dim, out_dim),
        out_bias=uni(out_dim),
        head=head,
        bn_in=bn(embed_dim) if use_batch_norm else None,
        bn_out=bn(hidden_dim) if use_batch_norm else None,
    )


def gru_step(x_t: np.ndarray, h_prev: np.ndarray, p: GruParams) -> np.ndarray:
    """One recurrence step; accepts single vectors or (B, dim) batches."""
    r = sigmoid(x_t @ p.w_r + h_prev @ p.u_r + p.b_r)
    z = sigmoid(x_t @ p.w_z + h_prev @ p.u_z + p.b_z)
    c = np.tanh(x_t @ p.w_h + (r * h_prev) @ p.u_h + p.b_h)
    return (1.0 - z) * h_prev + z * c


def _bn_train(x: np.ndarray, bn: BatchNormParams) -> tuple[np.ndarray, dict]:
    mean = x.mean(axis=0)
    var = x.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean) * inv_std
    out = bn.gamma * xhat + bn.beta
    new_mean = BN_MOMENTUM * bn.running_mean + (1.0 - BN_MOMENTUM) * mean
    new_var = BN_MOMENTUM * bn.running_var + (1.0 - BN_MOMENTUM) * var
    cache = {"xhat": xhat, "inv_std": inv_std, "new_mean": new_mean, "new_var": new_var}
    return out, cache


def _bn_infer(x: np.ndarray, bn: BatchNormParams) -> np.ndarray:
    inv_std = 1.0 / np.sqrt(bn.running_var + BN_EPS)
    return bn.gamma * (x - bn.running_mean) * inv_std + bn.beta


def _bn_backward(dy: np.ndarray, cache: dict, gamma: np.ndarray):
    xhat, inv_std = cache["xhat"], cache["inv_std"]
    n = dy.shape[0]
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxhat = dy * gamma
    dx = (inv_std / n) * (
        n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
    )
    return dx, dgamma, dbeta


def forward(
    ids: np.ndarray,
    params: NetParams,
    train_mode: bool = False,
    dropout_seed: int = 0,
) -> tuple[np.ndarray, dict]:
    """Run the network over a (B, T) id batch.

    Returns (output, cache): output is (B, V) softmax probabilities or (B,)
    sigmoid probabilities. Padding ids are embedded like any other input.
    In train mode batch norm uses batch statistics (updated running stats are
    staged in the cache, never written in place) and dropout applies a
    seed-determined mask; inference is deterministic.
    """
    ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
    batch, steps = ids.shape
    emb = params.embedding[ids]  # (B, T, E)
    embed_dim = emb.shape[2]

    cache: dict = {"ids": ids, "params": params, "train_mode": train_mode}

    x = emb
    if params.bn_in is not None:
        flat = emb.reshape(batch * steps, embed_dim)
        if train_mode:
            flat_bn, bn_cache = _bn_train(flat, params.bn_in)
            cache["bn_in"] = bn_cache
        else:
            flat_bn = _bn_infer(flat, params.bn_in)
        x = flat_bn.reshape(batch, steps, embed_dim)
    cache["x"] = x

    g = params.gru
    hidden_dim = g.hidden_dim
    h = np.zeros((batch, hidden_dim), dtype=x.dtype)
    h_prevs = np.empty((steps, batch, hidden_dim), dtype=x.dtype)
    rs = np.empty_like(h_prevs)
    zs = np.empty_like(h_prevs)
    cs = np.empty_like(h_prevs)
    for t in range(steps):
        x_t = x[:, t, :]
        r = sigmoid(x_t @ g.w_r + h @ g.u_r + g.b_r)
        z = sigmoid(x_t @ g.w_z + h @ g.u_z + g.b_z)
        c = np.tanh(x_t @ g.w_h + (r * h) @ g.u_h + g.b_h)
        h_prevs[t], rs[t], zs[t], cs[t] = h, r, z, c
        h = (1.0 - z) * h + z * c
    cache.update(h_prevs=h_prevs, rs=rs, zs=zs, cs=cs, h_last=h)

    if params.bn_out is not None:
        if train_mode:
            h_bn, bn_cache = _bn_train(h, params.bn_out)
            cache["bn_out"] = bn_cache
        else:
            h_bn = _bn_infer(h, params.bn_out)
    else:
        h_bn = h
    cache["h_bn"] = h_bn

    proj = h_bn @ params.projection  # (B, P), bias-free linear
    cache["proj"] = proj

    if train_mode:
        rng = np.random.default_rng(dropout_seed)
        mask = (rng.random(proj.shape) >= DROPOUT_RATE) / (1.0 - DROPOUT_RATE)
        dropped = proj * mask
        cache["dropout_mask"] = mask
    else:
        dropped = proj
    cache["dropped"] = dropped

    logits = dropped @ params.out_weight + params.out_bias
    if not np.isfinite(logits).all():
        raise TrainingError("non-finite activation in output layer")
    cache["logits"] = logits

    if params.head == "softmax":
        out = softmax(logits, axis=1)
    else:
        out = sigmoid(logits[:, 0])
    cache["out"] = out
    return out, cache


def loss_value(cache: dict, labels: np.ndarray) -> float:
    """Mean cross-entropy (softmax head) or binary cross-entropy (sigmoid)."""
    logits = cache["logits"]
    labels = np.asarray(labels)
    if cache["params"].head == "softmax":
        logp = log_softmax(logits, axis=1)
        return float(-logp[np.arange(len(labels)), labels].mean())
    z = logits[:, 0]
    y = labels.astype(np.float64)
    # stable BCE from logits: max(z,0) - z*y + log(1 + exp(-|z|))
    return float((np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))).mean())


def backward(cache: dict, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean loss w.r.t. every trainable tensor."""
    params: NetParams = cache["params"]
    ids = cache["ids"]
    batch, steps = ids.shape
    labels = np.asarray(labels)

    logits = cache["logits"]
    if params.head == "softmax":
        dlogits = softmax(logits, axis=1)
        dlogits[np.arange(len(labels)), labels] -= 1.0
        dlogits /= len(labels)
    else:
        p = sigmoid(logits[:, 0])
        dlogits = ((p - labels.astype(np.float64)) / len(labels))[:, None]

    grads: dict[str, np.ndarray] = {}
    dropped = cache["dropped"]
    grads["out_weight"] = dropped.T @ dlogits
    grads["out_bias"] = dlogits.sum(axis=0)
    ddropped = dlogits @ params.out_weight.T

    dproj = ddropped * cache["dropout_mask"] if "dropout_mask" in cache else ddropped

    h_bn = cache["h_bn"]
    grads["projection"] = h_bn.T @ dproj
    dh_bn = dproj @ params.projection.T

    if params.bn_out is not None:
        dh, dgamma, dbeta = _bn_backward(dh_bn, cache["bn_out"], params.bn_out.gamma)
        grads["bn_out.gamma"] = dgamma
        grads["bn_out.beta"] = dbeta
    else:
        dh = dh_bn

    g = params.gru
    x = cache["x"]
    h_prevs, rs, zs, cs = cache["h_prevs"], cache["rs"], cache["zs"], cache["cs"]
    dw = {k: np.zeros_like(getattr(g, k)) for k in ("w_r", "w_z", "w_h", "u_r", "u_z", "u_h", "b_r", "b_z", "b_h")}
    dx = np.zeros_like(x)
    for t in range(steps - 1, -1, -1):
        h_prev, r, z, c = h_prevs[t], rs[t], zs[t], cs[t]
        x_t = x[:, t, :]
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)

        da_h = dc * (1.0 - c * c)
        dw["w_h"] += x_t.T @ da_h
        dw["u_h"] += (r * h_prev).T @ da_h
        dw["b_h"] += da_h.sum(axis=0)
        d_rh = da_h @ g.u_h.T
        dr = d_rh * h_prev
        dh_prev += d_rh * r

        da_r = dr * r * (1.0 - r)
        dw["w_r"] += x_t.T @ da_r
        dw["u_r"] += h_prev.T @ da_r
        dw["b_r"] += da_r.sum(axis=0)
        dh_prev += da_r @ g.u_r.T

        da_z = dz * z * (1.0 - z)
        dw["w_z"] += x_t.T @ da_z
        dw["u_z"] += h_prev.T @ da_z
        dw["b_z"] += da_z.sum(axis=0)
        dh_prev += da_z @ g.u_z.T

        dx[:, t, :] = da_r @ g.w_r.T + da_z @ g.w_z.T + da_h @ g.w_h.T
        dh = dh_prev
    for k, v in dw.items():
        grads[f"gru.{k}"] = v

    if params.bn_in is not None:
        embed_dim = x.shape[2]
        flat_dx = dx.reshape(batch * steps, embed_dim)
        demb_flat, dgamma, dbeta = _bn_backward(flat_dx, cache["bn_in"], params.bn_in.gamma)
        grads["bn_in.gamma"] = dgamma
        grads["bn_in.beta"] = dbeta
        demb = demb_flat.reshape(batch, steps, embed_dim)
    else:
        demb = dx

    grad_embedding = np.zeros_like(params.embedding)
    np.add.at(grad_embedding, ids.reshape(-1), demb.reshape(-1, demb.shape[2]))
    grads["embedding"] = grad_embedding
    return grads


def commit_running_stats(params: NetParams, cache: dict) -> None:
    """Apply the staged batch-norm running statistics after a training step."""
    for prefix, bn in (("bn_in", params.bn_in), ("bn_out", params.bn_out)):
        if bn is not None and prefix in cache:
            bn.running_mean = cache[prefix]["new_mean"]
            bn.running_var = cache[prefix]["new_var"]


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


class NesterovSgd:
    """SGD with Nesterov momentum and global gradient-norm clipping.

    Per step: clip the concatenated gradient to clip_norm, then
    v <- mu*v - lr*g and theta <- theta + mu*v - lr*g.
    """

    def __init__(self, lr: float, momentum: float = 0.9, clip_norm: float = 1.0):
        if lr <= 0:
            raise ValueError("lr must be positive")
        self.lr = lr
        self.momentum = momentum
        self.clip_norm = clip_norm
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: NetParams, grads: dict[str, np.ndarray]) -> None:
        norm = global_grad_norm(grads)
        if not np.isfinite(norm):
            raise TrainingError("non-finite gradient")
        scale = self.clip_norm / norm if norm > self.clip_norm else 1.0
        for name, arr in params.named_tensors():
            g = grads[name] * scale
            v = self.velocity.get(name)
            if v is None:
                v = np.zeros_like(arr)
            v = self.momentum * v - self.lr * g
            self.velocity[name] = v
            params.set_tensor(name, arr + self.momentum * v - self.lr * g)


def sgd_step(
    params: NetParams,
    grads: dict[str, np.ndarray],
    lr: float,
    momentum: float = 0.9,
    clip_norm: float = 1.0,
    state: NesterovSgd | None = None,
) -> NesterovSgd:
    """One optimizer step; returns the (possibly fresh) momentum state."""
    if state is None:
        state = NesterovSgd(lr, momentum, clip_norm)
    state.step(params, grads)
    return state


def grad_check(
    params: NetParams,
    ids: np.ndarray,
    labels: np.ndarray,
    h: float = 1e-5,
    sample_fraction: float = 0.01,
    min_coords: int = 200,
    dropout_seed: int = 0,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples a random subset of parameter coordinates (at least min_coords,
    at least sample_fraction of the total). The same dropout seed is used for
    every evaluation so the loss surface is identical across perturbations.
    """
    _, cache = forward(ids, params, train_mode=True, dropout_seed=dropout_seed)
    grads = backward(cache, labels)

    names_sizes = [(name, arr.size) for name, arr in params.named_tensors()]
    total = sum(size for _, size in names_sizes)
    n_coords = min(total, max(min_coords, int(sample_fraction * total)))
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=n_coords, replace=False)

    def loss_at() -> float:
        _, c = forward(ids, params, train_mode=True, dropout_seed=dropout_seed)
        return loss_value(c, labels)

    max_rel = 0.0
    bounds = np.cumsum([size for _, size in names_sizes])
    for flat in sorted(chosen):
        tensor_idx = int(np.searchsorted(bounds, flat, side="right"))
        name = names_sizes[tensor_idx][0]
        local = flat - (bounds[tensor_idx - 1] if tensor_idx else 0)
        arr = params.tensor(name)
        orig = arr.flat[local]
        arr.flat[local] = orig + h
        loss_plus = loss_at()
        arr.flat[local] = orig - h
        loss_minus = loss_at()
        arr.flat[local] = orig
        numeric = (loss_plus - loss_minus) / (2.0 * h)
        analytic = grads[name].flat[local]
        # guard the denominator: central differences at h=1e-5 in float64
        # carry ~1e-10 absolute noise, so coordinates below ~1e-5 gradient
        # magnitude are roundoff-dominated and compared absolutely
        rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-5)
        max_rel = max(max_rel, rel)
    return max_rel


@dataclass
class QuantizedTensor:
    """8-bit affine quantization: value = zero + scale * q.

    scale is (max - min) / 255 and zero is the tensor minimum, so a constant
    tensor (scale 0) round-trips exactly and every value lands within
    scale / 2 of its original.
    """

    q: np.ndarray  # uint8
    scale: float
    zero: float
    shape: tuple[int, ...]

    def dequantize(self) -> np.ndarray:
        return (self.zero + self.scale * self.q.astype(np.float32)).reshape(self.shape).astype(np.float32)

    @property
    def payload_bytes(self) -> int:
        return self.q.size


def quantize_tensor(arr: np.ndarray) -> QuantizedTensor:
    lo = float(arr.min())
    hi = float(arr.max())
    scale = (hi - lo) / 255.0
    if scale == 0.0:
        q = np.zeros(arr.size, dtype=np.uint8)
    else:
        q = np.clip(np.rint((arr.reshape(-1) - lo) / scale), 0, 255).astype(np.uint8)
    return QuantizedTensor(q=q, scale=scale, zero=lo, shape=arr.shape)


def quantize_params(params: NetParams) -> dict[str, QuantizedTensor | np.ndarray]:
    """Quantize every matrix-shaped tensor; vectors stay float32.

    Weight matrices dominate the payload, so this shrinks a serialized
    checkpoint well past the contracted factor while biases and norm
    statistics keep full precision.
    """
    out: dict[str, QuantizedTensor | np.ndarray] = {}
    for name, arr in params.named_tensors(trainable_only=False):
        if arr.ndim >= 2:
            out[name] = quantize_tensor(arr)
        else:
            out[name] = arr.astype(np.float32)
    return out


def dequantize_params(tensors: dict[str, QuantizedTensor | np.ndarray], head: str) -> NetParams:
    plain = {
        name: (t.dequantize() if isinstance(t, QuantizedTensor) else np.asarray(t))
        for name, t in tensors.items()
    }
    return NetParams.from_tensor_dict(plain, head)
