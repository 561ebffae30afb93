"""Forecasting model: trend encoder, multimodal embeddings, fusion, decoder.

The network maps (search trends, image features, attribute text features,
release-date fields) to a full horizon of weekly sales in one forward
pass. Ground-truth sales are never an inference input.

Shape conventions (B products per batch, T = trend_len, L = 3*T):

- trends enter as (B, 3, T) in [0,1], are concatenated along time into a
  single length-L sequence with a learned per-series source embedding and
  a fixed sinusoidal positional encoding over the within-series index;
- encoder self-attention is banded: concatenated positions i, j interact
  only when |i - j| <= attention_window;
- the decoder has no self-attention: the fused product vector is the
  single query of a multi-head cross-attention over the encoder output,
  normalized per trend series, followed by a feed-forward segment whose
  residual+norm wiring is flag-controlled;
- the head projects to ``horizon`` weeks. Outputs are raw reals; clamping
  of negative sales happens at reporting time, never inside the model.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .data import ModelInputs
from .errors import (CompatibilityError, ConfigurationError, ContractError,
                     ValidationError)

MASK_VALUE = -1e30

DAYS_PER_WEEK = 7
MAX_ISO_WEEK = 53
MONTHS = 12


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters and ablation switches."""

    d_model: int = 32          # D: width of the encoder/decoder stream
    d_embed: int = 32          # E: width of each modality embedding
    num_heads: int = 4
    horizon: int = 12
    trend_len: int = 52
    attention_window: int = 4  # encoder band half-width, in weeks
    image_dim: int = 32        # expected image feature length
    text_dim: int = 32         # expected per-attribute text feature length
    year_min: int = 2015
    year_max: int = 2021
    use_encoder: bool = True
    use_image: bool = True
    use_text: bool = True
    use_temporal: bool = True
    decoder_residual_norm: bool = True

    def __post_init__(self) -> None:
        for name in ("d_model", "d_embed", "num_heads", "horizon",
                     "attention_window", "image_dim", "text_dim"):
            v = getattr(self, name)
            if name == "attention_window":
                if v < 0:
                    raise ConfigurationError(f"{name} must be >= 0, got {v}")
            elif v < 1:
                raise ConfigurationError(f"{name} must be positive, got {v}")
        if self.d_model % self.num_heads != 0:
            raise ConfigurationError(
                f"num_heads {self.num_heads} must divide d_model {self.d_model}")
        if self.trend_len not in (28, 52):
            raise ConfigurationError(f"trend_len must be 28 or 52, got {self.trend_len}")
        if self.year_min > self.year_max:
            raise ConfigurationError("year_min must not exceed year_max")


@dataclass
class ForecastResult:
    """Predictions plus the decoder attention captured for interpretability.

    ``cross_attention`` has shape (B, num_heads, 3, trend_len); along the
    last axis each (head, series) row is a probability distribution. It is
    None when the encoder is ablated.
    """

    predictions: ad.Tensor          # (B, horizon)
    cross_attention: np.ndarray | None


def sinusoidal_encoding(length: int, dim: int) -> np.ndarray:
    """Fixed sine/cosine position table, shape (length, dim)."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (2.0 * np.floor(i / 2.0)) / dim)
    enc = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return enc


def banded_mask(length: int, window: int) -> np.ndarray:
    """(length, length) additive mask: 0 inside the band, MASK_VALUE outside."""
    idx = np.arange(length)
    banned = np.abs(idx[:, None] - idx[None, :]) > window
    return np.where(banned, MASK_VALUE, 0.0)


class TrendModel:
    """The full forecasting network with per-module entry points.

    All parameters live in ``self.params`` (name -> trainable Tensor) and
    are initialized with fan-based uniform scaling from ``seed``.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.params: dict[str, ad.Tensor] = {}
        c = config
        D, E = c.d_model, c.d_embed
        L = 3 * c.trend_len

        # encoder
        self._add("enc.in_proj", (1, D))
        self._add("enc.in_bias", (D,), zero=True)
        self._add("enc.source_embed", (3, D))
        for name in ("q", "k", "v", "o"):
            self._add(f"enc.attn.{name}", (D, D))
        self._add("enc.attn.o_bias", (D,), zero=True)
        self._add("enc.ff.w1", (D, 4 * D))
        self._add("enc.ff.b1", (4 * D,), zero=True)
        self._add("enc.ff.w2", (4 * D, D))
        self._add("enc.ff.b2", (D,), zero=True)

        # modality embeddings
        self._add("img.w", (c.image_dim, E))
        self._add("img.b", (E,), zero=True)
        self._add("txt.w", (c.text_dim, E))
        self._add("txt.b", (E,), zero=True)
        self._add("temp.day", (DAYS_PER_WEEK, E))
        self._add("temp.week", (MAX_ISO_WEEK + 1, E))   # rows 1..53 used
        self._add("temp.month", (MONTHS + 1, E))        # rows 1..12 used
        self._add("temp.year", (c.year_max - c.year_min + 1, E))
        self._add("temp.w", (4 * E, E))
        self._add("temp.b", (E,), zero=True)

        # fusion
        self._add("fuse.w1", (3 * E, D))
        self._add("fuse.b1", (D,), zero=True)
        self._add("fuse.w2", (D, D))
        self._add("fuse.b2", (D,), zero=True)

        # decoder; the zero output projection gates the context in only
        # after the value path carries signal, so early training cannot
        # lock onto an arbitrary timestep just to manufacture a bias term
        for name in ("q", "k", "v"):
            self._add(f"dec.attn.{name}", (D, D))
        self._add("dec.attn.o", (D, D), zero=True)
        self._add("dec.attn.o_bias", (D,), zero=True)
        self._add("dec.ff.w1", (D, 4 * D))
        self._add("dec.ff.b1", (4 * D,), zero=True)
        self._add("dec.ff.w2", (4 * D, D))
        self._add("dec.ff.b2", (D,), zero=True)
        self._add("head.w", (D, c.horizon))
        self._add("head.b", (c.horizon,), zero=True)

        # damped so position never swamps the projected scalar trend values
        self._pos = ad.constant(0.3 * np.tile(
            sinusoidal_encoding(c.trend_len, D), (3, 1)), name="pos")
        self._mask = ad.constant(banded_mask(L, c.attention_window), name="mask")
        self._src_index = np.repeat(np.arange(3), c.trend_len)

    def _add(self, name: str, shape: tuple[int, ...], zero: bool = False,
             scale: float = 1.0) -> None:
        if zero:
            value = np.zeros(shape)
        else:
            fan_in = shape[0] if len(shape) > 1 else shape[0]
            fan_out = shape[-1]
            limit = scale * np.sqrt(6.0 / (fan_in + fan_out))
            value = self.rng.uniform(-limit, limit, size=shape)
        self.params[name] = ad.parameter(value, name=name)

    # -- encoder -----------------------------------------------------------

    def _split_heads(self, x: ad.Tensor, batch: int, length: int) -> ad.Tensor:
        H = self.config.num_heads
        dh = self.config.d_model // H
        return ad.transpose(ad.reshape(x, (batch, length, H, dh)), (0, 2, 1, 3))

    def encode_trends(self, trends: np.ndarray, with_attention: bool = False):
        """(B, 3, trend_len) in [0,1] -> encoder states (B, 3*trend_len, D).

        With ``with_attention=True`` also returns the self-attention
        weights as a (B, heads, L, L) array.
        """
        c = self.config
        trends = np.asarray(trends, dtype=np.float64)
        if trends.ndim == 2:
            trends = trends[None]
        if trends.ndim != 3 or trends.shape[1] != 3 or trends.shape[2] != c.trend_len:
            raise ValidationError(
                f"trends must have shape (B, 3, {c.trend_len}), got {trends.shape}")
        if trends.min() < 0.0 or trends.max() > 1.0:
            raise ValidationError("trend values outside [0, 1]")
        B, L = trends.shape[0], 3 * c.trend_len
        H, dh = c.num_heads, c.d_model // c.num_heads

        flat = ad.constant(trends.reshape(B, L, 1))
        x = ad.matmul(flat, self.params["enc.in_proj"]) + self.params["enc.in_bias"]
        x = x + ad.take_rows(self.params["enc.source_embed"], self._src_index)
        x = x + self._pos

        q = self._split_heads(ad.matmul(x, self.params["enc.attn.q"]), B, L)
        k = self._split_heads(ad.matmul(x, self.params["enc.attn.k"]), B, L)
        v = self._split_heads(ad.matmul(x, self.params["enc.attn.v"]), B, L)
        scores = ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))) * (1.0 / np.sqrt(dh))
        weights = ad.softmax(scores + self._mask, axis=-1)
        ctx = ad.matmul(weights, v)
        ctx = ad.reshape(ad.transpose(ctx, (0, 2, 1, 3)), (B, L, c.d_model))
        attn_out = ad.matmul(ctx, self.params["enc.attn.o"]) + self.params["enc.attn.o_bias"]
        x = ad.layer_norm(x + attn_out)

        h = ad.relu(ad.matmul(x, self.params["enc.ff.w1"]) + self.params["enc.ff.b1"])
        ff = ad.matmul(h, self.params["enc.ff.w2"]) + self.params["enc.ff.b2"]
        x = ad.layer_norm(x + ff)
        if with_attention:
            return x, weights.data.copy()
        return x

    # -- modality embeddings -------------------------------------------------

    def embed_image(self, features: np.ndarray) -> ad.Tensor:
        """(B, image_dim) raw features -> (B, E)."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.config.image_dim:
            raise ConfigurationError(
                f"image features have length {features.shape[1]}, model weights "
                f"expect {self.config.image_dim}")
        return ad.matmul(ad.constant(features), self.params["img.w"]) + self.params["img.b"]

    def embed_text(self, attribute_feats: np.ndarray) -> ad.Tensor:
        """(B, n_attrs, text_dim) per-attribute features -> (B, E).

        Attributes are averaged before the dense layer, so their order
        never matters.
        """
        feats = np.asarray(attribute_feats, dtype=np.float64)
        if feats.ndim == 2:
            feats = feats[None]
        if feats.shape[1] == 0:
            raise ContractError("embed_text needs at least one attribute vector")
        if feats.shape[2] != self.config.text_dim:
            raise ConfigurationError(
                f"text features have length {feats.shape[2]}, model weights "
                f"expect {self.config.text_dim}")
        pooled = ad.constant(feats.mean(axis=1))
        return ad.matmul(pooled, self.params["txt.w"]) + self.params["txt.b"]

    def embed_temporal(self, temporal: np.ndarray) -> ad.Tensor:
        """(B, 4) ints [day_of_week, week_of_year, month, year] -> (B, E)."""
        t = np.atleast_2d(np.asarray(temporal, dtype=np.int64))
        if t.shape[1] != 4:
            raise ValidationError(f"temporal fields must be (B, 4), got {t.shape}")
        day, week, month, year = t[:, 0], t[:, 1], t[:, 2], t[:, 3]
        if day.min() < 0 or day.max() > 6:
            raise ValidationError("day_of_week outside [0, 6]")
        if week.min() < 1 or week.max() > MAX_ISO_WEEK:
            raise ValidationError(f"week_of_year outside [1, {MAX_ISO_WEEK}]")
        if month.min() < 1 or month.max() > MONTHS:
            raise ValidationError("month outside [1, 12]")
        c = self.config
        if year.min() < c.year_min or year.max() > c.year_max:
            warnings.warn(
                f"years outside trained range [{c.year_min}, {c.year_max}] "
                "map to the nearest trained year", stacklevel=2)
            year = np.clip(year, c.year_min, c.year_max)
        parts = [
            ad.take_rows(self.params["temp.day"], day),
            ad.take_rows(self.params["temp.week"], week),
            ad.take_rows(self.params["temp.month"], month),
            ad.take_rows(self.params["temp.year"], year - c.year_min),
        ]
        cat = ad.concat(parts, axis=1)
        return ad.matmul(cat, self.params["temp.w"]) + self.params["temp.b"]

    # -- fusion and decoder ---------------------------------------------------

    def fuse(self, phi_i: ad.Tensor, phi_t: ad.Tensor, phi_temp: ad.Tensor) -> ad.Tensor:
        """[phi_i; phi_t; phi_temp] -> psi_f of width D via dense-ReLU-dense."""
        joint = ad.concat([phi_i, phi_t, phi_temp], axis=1)
        h = ad.relu(ad.matmul(joint, self.params["fuse.w1"]) + self.params["fuse.b1"])
        return ad.matmul(h, self.params["fuse.w2"]) + self.params["fuse.b2"]

    def decode(self, psi_f: ad.Tensor, psi_t: ad.Tensor | None) -> ForecastResult:
        """Fused query + encoder states -> horizon forecast.

        Cross-attention scores are normalized along time separately for
        each of the 3 trend series; the per-series contexts are averaged.
        With the encoder ablated (``psi_t`` None and use_encoder False)
        the block reduces to the feed-forward segment on ``psi_f``.
        """
        c = self.config
        B = psi_f.shape[0]
        H, dh, T = c.num_heads, c.d_model // c.num_heads, c.trend_len
        attention = None

        if c.use_encoder:
            if psi_t is None:
                raise ContractError("decode needs encoder output when use_encoder=True")
            q = ad.matmul(psi_f, self.params["dec.attn.q"])      # (B, D)
            q = ad.reshape(q, (B, H, 1, 1, dh))
            k = ad.matmul(psi_t, self.params["dec.attn.k"])      # (B, L, D)
            v = ad.matmul(psi_t, self.params["dec.attn.v"])
            k = ad.transpose(ad.reshape(k, (B, 3, T, H, dh)), (0, 3, 1, 2, 4))
            v = ad.transpose(ad.reshape(v, (B, 3, T, H, dh)), (0, 3, 1, 2, 4))
            scores = ad.reduce_sum(ad.mul(k, q), axis=-1) * (1.0 / np.sqrt(dh))
            weights = ad.softmax(scores, axis=-1)                # (B, H, 3, T)
            ctx = ad.reduce_sum(ad.mul(v, ad.reshape(weights, (B, H, 3, T, 1))), axis=3)
            ctx = ad.mean(ctx, axis=2)                           # (B, H, dh)
            ctx = ad.reshape(ctx, (B, c.d_model))
            attn_out = (ad.matmul(ctx, self.params["dec.attn.o"])
                        + self.params["dec.attn.o_bias"])
            x = ad.layer_norm(psi_f + attn_out) if c.decoder_residual_norm else attn_out
            attention = weights.data.copy()
        else:
            x = psi_f

        h = ad.relu(ad.matmul(x, self.params["dec.ff.w1"]) + self.params["dec.ff.b1"])
        ff = ad.matmul(h, self.params["dec.ff.w2"]) + self.params["dec.ff.b2"]
        psi_p = ad.layer_norm(x + ff) if c.decoder_residual_norm else ff

        preds = ad.matmul(psi_p, self.params["head.w"]) + self.params["head.b"]
        return ForecastResult(predictions=preds, cross_attention=attention)

    # -- full forward ----------------------------------------------------------

    def forward(self, inputs: ModelInputs) -> ForecastResult:
        c = self.config
        B = len(inputs)
        E = c.d_embed
        zero = lambda: ad.constant(np.zeros((B, E)))
        phi_i = self.embed_image(inputs.image_feats) if c.use_image else zero()
        phi_t = self.embed_text(inputs.text_feats) if c.use_text else zero()
        phi_temp = self.embed_temporal(inputs.temporal) if c.use_temporal else zero()
        psi_f = self.fuse(phi_i, phi_t, phi_temp)
        psi_t = self.encode_trends(inputs.trends) if c.use_encoder else None
        return self.decode(psi_f, psi_t)

    def predict(self, inputs: ModelInputs, target_scale: float = 1.0,
                clamp: bool = True) -> np.ndarray:
        """Inference-only forward: (B, horizon) array in sales units.

        Negative weekly values are clamped to zero here, at the reporting
        boundary; training losses always see the raw outputs.
        """
        result = self.forward(inputs)
        out = result.predictions.data * float(target_scale)
        return np.maximum(out, 0.0) if clamp else out


# ---------------------------------------------------------------------------
# persistence


def save_model(model: TrendModel, out_dir, extra: dict | None = None) -> dict[str, Path]:
    """Write params.json (weights) and config.json (architecture sidecar)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params_path = out / "params.json"
    config_path = out / "config.json"
    ad.save_params(model.params, params_path)
    sidecar = {"model_config": dataclasses.asdict(model.config)}
    if extra:
        sidecar.update(extra)
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump(sidecar, f, sort_keys=True, indent=2)
    return {"params": params_path, "config": config_path}


def load_model(model_dir) -> tuple[TrendModel, dict]:
    """Rebuild a model from a save_model directory; returns (model, sidecar)."""
    model_dir = Path(model_dir)
    config_path = model_dir / "config.json"
    if not config_path.is_file():
        raise CompatibilityError(f"{model_dir}: missing config.json")
    with open(config_path, encoding="utf-8") as f:
        sidecar = json.load(f)
    try:
        config = ModelConfig(**sidecar["model_config"])
    except (KeyError, TypeError) as exc:
        raise CompatibilityError(f"{config_path}: bad model_config ({exc})") from None
    model = TrendModel(config, seed=0)
    stored = ad.load_params(model_dir / "params.json")
    if set(stored) != set(model.params):
        missing = sorted(set(model.params) - set(stored))
        extra = sorted(set(stored) - set(model.params))
        raise CompatibilityError(
            f"checkpoint parameters do not match architecture "
            f"(missing {missing}, unexpected {extra})")
    for name, value in stored.items():
        want = model.params[name].data.shape
        if value.shape != want:
            raise CompatibilityError(
                f"parameter {name}: checkpoint shape {value.shape}, model expects {want}")
        model.params[name].data = value
        model.params[name].zero_grad()
    return model, sidecar
