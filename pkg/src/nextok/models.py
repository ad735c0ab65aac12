"""Model definitions and training for the three networks.

Two language models share one architecture: a token-input LM and a
subtoken-input LM, both predicting whole tokens from the output vocabulary.
The repetition detector reuses the same architecture family at a quarter of
every width with a sigmoid head, keeping it well under a fifth of the
companion LM's parameter count. It trains on the repeats flag of the same
examples rather than sharing weights with the LM.

Full-scale hyperparameters are kept as a named preset; desk_scale presets
make training feasible on one CPU and are what the test suite runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import nn
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import Example
from .nn import NesterovSgd, NetParams, TrainingError


@dataclass
class ModelConfig:
    """Hyperparameters; full-scale defaults with a desk-scale preset.

    Full scale (embed 512, hidden 1024, proj 512, 100k vocabulary, window
    100, batch 32, 10 epochs) is compute-infeasible for a test run, so
    desk_scale swaps in embed 32, hidden 64, proj 32, vocabulary cap 2000,
    window 40.
    """

    mode: str = "token"  # "token" or "subtoken"
    embed_dim: int = 512
    hidden_dim: int = 1024
    proj_dim: int = 512
    output_vocab_cap: int = 100_000
    window_len: int = 100
    batch_size: int = 32
    epochs: int = 10
    lr: float = 0.1
    seed: int = 0
    use_batch_norm: bool = True
    desk_scale: bool = False

    def __post_init__(self) -> None:
        for name in ("embed_dim", "hidden_dim", "proj_dim", "window_len", "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def desk(cls, mode: str = "token", **overrides) -> "ModelConfig":
        base = dict(
            mode=mode, embed_dim=32, hidden_dim=64, proj_dim=32,
            output_vocab_cap=2000, window_len=40, batch_size=32,
            epochs=4, lr=0.1, seed=0, desk_scale=True,
        )
        base.update(overrides)
        return cls(**base)

    def repetition_variant(self) -> "ModelConfig":
        """Quarter-width companion config for the repetition detector."""
        return replace(
            self,
            embed_dim=max(4, self.embed_dim // 4),
            hidden_dim=max(4, self.hidden_dim // 4),
            proj_dim=max(4, self.proj_dim // 4),
        )

    def as_dict(self) -> dict[str, object]:
        return dict(vars(self))


@dataclass
class PredictionOutput:
    """Distribution over the output vocabulary plus a repetition probability."""

    dist: np.ndarray
    theta: float


@dataclass
class TrainedModel:
    params: NetParams
    config: ModelConfig
    in_vocab_size: int
    out_vocab_size: int
    log: list[tuple[int, float, float]] = field(default_factory=list)  # epoch, loss, secs

    def log_lines(self) -> list[str]:
        return [f"{epoch}\t{loss:.6f}\t{secs:.2f}" for epoch, loss, secs in self.log]


def _example_arrays(examples: list[Example], target: str) -> tuple[np.ndarray, np.ndarray]:
    ids = np.array([ex.window.ids for ex in examples], dtype=np.int64)
    if target == "label":
        labels = np.array([ex.label_id for ex in examples], dtype=np.int64)
    else:
        labels = np.array([float(ex.repeats) for ex in examples], dtype=np.float64)
    return ids, labels


def _run_training(
    ids: np.ndarray,
    labels: np.ndarray,
    config: ModelConfig,
    in_vocab_size: int,
    out_vocab_size: int,
    head: str,
) -> TrainedModel:
    params = nn.init_params(
        in_vocab_size=in_vocab_size,
        out_size=out_vocab_size,
        embed_dim=config.embed_dim,
        hidden_dim=config.hidden_dim,
        proj_dim=config.proj_dim,
        head=head,
        use_batch_norm=config.use_batch_norm,
        seed=config.seed,
    )
    optimizer = NesterovSgd(lr=config.lr)
    rng = np.random.default_rng(config.seed)
    n = len(ids)
    bs = config.batch_size
    n_batches = max(1, n // bs)
    model = TrainedModel(params, config, in_vocab_size, out_vocab_size)

    # epoch 0: training-mode loss of the untrained network, no updates;
    # the reference point for how much training reduced cross-entropy
    started = time.perf_counter()
    eval_count = min(n, 4096)
    losses0 = []
    for start in range(0, eval_count, bs):
        _, cache = nn.forward(
            ids[start : start + bs], params, train_mode=True, dropout_seed=config.seed
        )
        losses0.append(nn.loss_value(cache, labels[start : start + bs]))
    model.log.append((0, float(np.mean(losses0)), time.perf_counter() - started))

    step = 0
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(n)
        losses = []
        for b in range(n_batches):
            batch_idx = order[b * bs : (b + 1) * bs]
            dropout_seed = (config.seed * 1_000_003 + step) & 0x7FFFFFFF
            _, cache = nn.forward(
                ids[batch_idx], params, train_mode=True, dropout_seed=dropout_seed
            )
            loss = nn.loss_value(cache, labels[batch_idx])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} step {step}: {loss}"
                )
            grads = nn.backward(cache, labels[batch_idx])
            optimizer.step(params, grads)
            nn.commit_running_stats(params, cache)
            losses.append(loss)
            step += 1
        model.log.append((epoch, float(np.mean(losses)), time.perf_counter() - started))
    return model


def train_lm(
    examples: list[Example],
    config: ModelConfig,
    in_vocab_size: int,
    out_vocab_size: int,
) -> TrainedModel:
    """Train the next-token language model (softmax head, cross-entropy)."""
    ids, labels = _example_arrays(examples, target="label")
    if labels.max(initial=0) >= out_vocab_size:
        raise ValueError("label id outside the output vocabulary")
    return _run_training(ids, labels, config, in_vocab_size, out_vocab_size, "softmax")


def architecture_param_count(
    in_vocab_size: int,
    out_dim: int,
    embed_dim: int,
    hidden_dim: int,
    proj_dim: int,
    use_batch_norm: bool,
) -> int:
    """Trainable parameter count of the shared architecture, closed form."""
    count = in_vocab_size * embed_dim
    count += 3 * (embed_dim * hidden_dim + hidden_dim * hidden_dim + hidden_dim)
    count += hidden_dim * proj_dim
    count += proj_dim * out_dim + out_dim
    if use_batch_norm:
        count += 2 * embed_dim + 2 * hidden_dim
    return count


def train_repetition(
    examples: list[Example],
    config: ModelConfig,
    in_vocab_size: int,
    lm_out_vocab_size: int | None = None,
) -> TrainedModel:
    """Train the repetition detector (sigmoid head, binary cross-entropy).

    The passed config should be the LM's; the quarter-width variant is
    derived here so the detector stays an order of magnitude smaller.
    """
    rep_config = config.repetition_variant()
    ids, labels = _example_arrays(examples, target="repeats")
    model = _run_training(ids, labels, rep_config, in_vocab_size, 1, "sigmoid")

    lm_out = lm_out_vocab_size if lm_out_vocab_size is not None else config.output_vocab_cap + 2
    lm_count = architecture_param_count(
        in_vocab_size, lm_out, config.embed_dim, config.hidden_dim,
        config.proj_dim, config.use_batch_norm,
    )
    if model.params.param_count() * 5 > lm_count:
        raise TrainingError("repetition detector exceeds 1/5 of the LM parameter count")
    return model


def predict(
    window_ids: list[int] | np.ndarray,
    lm: TrainedModel,
    rep: TrainedModel,
) -> PredictionOutput:
    """Single forward pass of each network over one encoded window."""
    if lm.config.window_len != rep.config.window_len or lm.config.mode != rep.config.mode:
        raise ValueError("language model and repetition model configs disagree")
    ids = np.asarray(window_ids, dtype=np.int64)[None, :]
    dist, _ = nn.forward(ids, lm.params, train_mode=False)
    theta, _ = nn.forward(ids, rep.params, train_mode=False)
    return PredictionOutput(dist=dist[0], theta=float(theta[0]))


def _config_block(model: TrainedModel) -> dict[str, object]:
    block = model.config.as_dict()
    block["in_vocab_size"] = model.in_vocab_size
    block["out_vocab_size"] = model.out_vocab_size
    return block


def save_model(model: TrainedModel, path: str | Path, quantize: bool = False) -> None:
    save_checkpoint(path, model.params, _config_block(model), quantize=quantize)


def load_model(path: str | Path) -> TrainedModel:
    """Load a checkpoint into an inference-ready TrainedModel."""
    params, raw = load_checkpoint(path)
    config = ModelConfig(
        mode=raw["mode"],
        embed_dim=int(raw["embed_dim"]),
        hidden_dim=int(raw["hidden_dim"]),
        proj_dim=int(raw["proj_dim"]),
        output_vocab_cap=int(raw["output_vocab_cap"]),
        window_len=int(raw["window_len"]),
        batch_size=int(raw["batch_size"]),
        epochs=int(raw["epochs"]),
        lr=float(raw["lr"]),
        seed=int(raw["seed"]),
        use_batch_norm=raw["use_batch_norm"] == "True",
        desk_scale=raw["desk_scale"] == "True",
    )
    return TrainedModel(
        params=params,
        config=config,
        in_vocab_size=int(raw["in_vocab_size"]),
        out_vocab_size=int(raw["out_vocab_size"]),
    )
