"""MSE training loop with the AdaFactor optimizer.

Targets are normalized by a single dataset-wide scale (the mean positive
weekly sale in the training partition, so a typical normalized target is
close to one) before the loss; predictions are mapped back to sales units
at reporting time using the same scale, which is stored in the checkpoint
sidecar.

AdaFactor here follows the published algorithm: factored second-moment
accumulators for parameters with two or more dimensions (one row and one
column accumulator instead of a full matrix), relative step sizes scaled
by the parameter's own RMS, and update clipping. No momentum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .data import Dataset, HashFeatureProvider, ModelInputs, assemble_inputs
from .errors import ContractError, DimensionError, NumericalError
from .model import TrendModel, save_model


def mse_loss(pred: ad.Tensor, target: ad.Tensor) -> ad.Tensor:
    """Mean of squared differences over all elements."""
    if pred.shape != target.shape:
        raise DimensionError(f"mse_loss shapes differ: {pred.shape} vs {target.shape}")
    diff = ad.sub(pred, target)
    return ad.mean(ad.mul(diff, diff))


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


@dataclass(frozen=True)
class TrainConfig:
    """Loop and optimizer settings. Desk-scale defaults; the reference
    protocol (epochs=200, batch_size=128) stays available through here."""

    epochs: int = 50
    batch_size: int = 16
    seed: int = 0
    eps1: float = 1e-30           # second-moment floor
    eps2: float = 1e-3            # step-size floor on RMS(param)
    clip_threshold: float = 1.0
    decay_rate: float = 0.8       # beta2_t = 1 - t^(-decay_rate)
    relative_step: bool = True
    lr: float = 0.01              # used only when relative_step is off
    weight_decay: float = 0.0     # decoupled, scaled by the step size

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ContractError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ContractError(f"batch_size must be >= 1, got {self.batch_size}")


class Adafactor:
    """Factored-second-moment optimizer over a named parameter dict."""

    def __init__(self, params: dict[str, ad.Tensor], config: TrainConfig):
        self.params = params
        self.c = config
        self.t = 0
        self.state: dict[str, dict[str, np.ndarray]] = {}
        for name, p in params.items():
            if p.data.ndim >= 2:
                self.state[name] = {
                    "row": np.zeros(p.data.shape[:-1]),       # mean over last axis
                    "col": np.zeros(p.data.shape[:-2] + p.data.shape[-1:]),
                }
            else:
                self.state[name] = {"full": np.zeros_like(p.data)}

    def step(self) -> None:
        """One update from the gradients currently held by the parameters."""
        self.t += 1
        c = self.c
        beta2 = 1.0 - self.t ** (-c.decay_rate)
        rho = min(1e-2, 1.0 / np.sqrt(self.t))
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NumericalError(f"non-finite gradient for parameter {name!r} "
                                     f"at step {self.t}")
            sq = np.square(g) + c.eps1
            st = self.state[name]
            if "row" in st:
                st["row"] *= beta2
                st["row"] += (1.0 - beta2) * sq.mean(axis=-1)
                st["col"] *= beta2
                st["col"] += (1.0 - beta2) * sq.mean(axis=-2)
                row_mean = st["row"].mean(axis=-1, keepdims=True)
                inv = (1.0 / np.sqrt(st["row"] / row_mean))[..., None] \
                    / np.sqrt(st["col"][..., None, :])
                update = g * inv
            else:
                st["full"] *= beta2
                st["full"] += (1.0 - beta2) * sq
                update = g / np.sqrt(st["full"])
            update /= max(1.0, _rms(update) / c.clip_threshold)
            if c.relative_step:
                alpha = max(c.eps2, _rms(p.data)) * rho
            else:
                alpha = c.lr
            if c.weight_decay:
                update = update + c.weight_decay * p.data
            p.data = p.data - alpha * update

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()


@dataclass
class TrainResult:
    model: TrendModel
    loss_curve: list[float]
    target_scale: float
    config: TrainConfig
    providers: dict[str, str] = field(default_factory=dict)


def _as_inputs(data, model: TrendModel, image_provider, text_provider):
    if isinstance(data, ModelInputs):
        return data, {}
    if not isinstance(data, Dataset):
        raise ContractError(f"train expects a Dataset or ModelInputs, got {type(data)}")
    c = model.config
    img = image_provider or HashFeatureProvider(dim=c.image_dim, seed=0, name="hashed-image")
    txt = text_provider or HashFeatureProvider(dim=c.text_dim, seed=1, name="hashed-text")
    inputs = assemble_inputs(data, img, txt, trend_len=c.trend_len, horizon=c.horizon)
    return inputs, {"image": img.name, "text": txt.name}


def train(data, model: TrendModel, config: TrainConfig,
          image_provider=None, text_provider=None, out_dir=None) -> TrainResult:
    """Fit the model; fully deterministic given (data, config, seed).

    ``data`` is the training partition, either a Dataset or pre-assembled
    ModelInputs. When ``out_dir`` is given, the final checkpoint and the
    per-epoch loss curve (``loss_curve.csv``) are written there.
    """
    inputs, providers = _as_inputs(data, model, image_provider, text_provider)
    n = len(inputs)
    if n == 0:
        raise ContractError("train called with an empty dataset")

    positive = inputs.targets[inputs.targets > 0]
    scale = float(positive.mean()) if positive.size else 1.0
    targets = inputs.targets / scale

    rng = np.random.default_rng(config.seed)
    opt = Adafactor(model.params, config)
    curve: list[float] = []

    for _ in range(config.epochs):
        order = rng.permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = inputs.take(idx)
            with ad.Graph():
                result = model.forward(batch)
                loss = mse_loss(result.predictions, ad.constant(targets[idx]))
                value = loss.item()
                if not np.isfinite(value):
                    raise NumericalError(f"training loss is not finite at step {opt.t + 1}")
                ad.backward(loss)
            opt.step()
            opt.zero_grad()
            total += value * len(idx)
            count += len(idx)
        curve.append(total / count)

    result = TrainResult(model=model, loss_curve=curve, target_scale=scale,
                         config=config, providers=providers)
    if out_dir is not None:
        out = Path(out_dir)
        save_model(model, out, extra={
            "target_scale": scale,
            "providers": providers,
            "train_config": asdict(config),
        })
        with open(out / "loss_curve.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["epoch", "mean_loss"])
            for i, v in enumerate(curve, start=1):
                w.writerow([i, repr(v)])
    return result
