"""Convolutional auto-encoder with tied weights.

Encoding is a valid temporal convolution ``h = act(valid_conv(x))``;
decoding applies the transpose of the same weights (full convolution),
adds a separate reconstruction bias and the same activation.  Training
minimises the summed squared reconstruction error by full-batch gradient
descent.

Two gradient modes are supported.  ``REGULAR`` backpropagates through
every hidden frame.  ``SHIFTNET`` treats every hidden frame except the
newest one as a cached constant, so encoder gradients only flow through
the single frame a streaming evaluator would actually compute; the
decoder still sees all hidden frames.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .conv_core import (
    Activation,
    ConvLayerParams,
    InvalidInputError,
    as_sequence,
    full_conv_adjoint,
    valid_conv,
)

__all__ = [
    "Mode",
    "CAEModel",
    "CAEGradients",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "init_model",
    "encode",
    "decode",
    "reconstruction_error",
    "batch_loss",
    "gradients",
    "train",
    "encode_features",
]


class Mode(str, enum.Enum):
    REGULAR = "regular"
    SHIFTNET = "shiftnet"


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"loss became {loss} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


@dataclass(frozen=True, eq=False)
class CAEModel:
    encoder: ConvLayerParams
    decoder_bias: np.ndarray = None

    def __post_init__(self):
        bias = (np.zeros(self.encoder.c_in) if self.decoder_bias is None
                else np.array(self.decoder_bias, dtype=np.float64))
        if bias.shape != (self.encoder.c_in,):
            raise InvalidInputError(
                f"decoder bias must have length C_in={self.encoder.c_in}")
        object.__setattr__(self, "decoder_bias", bias)

    @property
    def activation(self) -> Activation:
        return self.encoder.activation

    def with_params(self, weights, bias, decoder_bias) -> "CAEModel":
        return CAEModel(ConvLayerParams(weights, bias, self.activation), decoder_bias)


@dataclass
class CAEGradients:
    weights: np.ndarray
    bias: np.ndarray
    decoder_bias: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.bias, self.decoder_bias])


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-4
    seed: int = 0
    mode: Mode = Mode.REGULAR

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass
class TrainResult:
    model: CAEModel
    initial_loss: float
    losses: list[float] = field(default_factory=list)


def init_model(c_in: int, c_hidden: int, w: int, seed: int = 0,
               activation: Activation = Activation.TANH, scale: float = 0.1) -> CAEModel:
    """Weights uniform on ``[-scale, scale]``, biases zero."""
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-scale, scale, size=(w, c_hidden, c_in))
    return CAEModel(ConvLayerParams(weights, np.zeros(c_hidden), activation), np.zeros(c_in))


def encode(model: CAEModel, x) -> np.ndarray:
    return valid_conv(model.encoder, x)


def decode(model: CAEModel, h) -> np.ndarray:
    return full_conv_adjoint(model.encoder, h, model.decoder_bias)


def reconstruction_error(model: CAEModel, x) -> float:
    x = as_sequence(x, model.encoder.c_in)
    recon = decode(model, encode(model, x))
    return float(np.sum((x - recon) ** 2))


# Batched numpy path used for training; arrays are (N, t, C).

def _windows(x: np.ndarray, w: int) -> np.ndarray:
    # (N, t - w + 1, w, C)
    return np.lib.stride_tricks.sliding_window_view(x, w, axis=1).transpose(0, 1, 3, 2)


def _forward(model: CAEModel, xs: np.ndarray):
    layer = model.encoder
    w, act = layer.w, layer.activation
    xw = _windows(xs, w)
    a = np.einsum("ntwc,wdc->ntd", xw, layer.weights, optimize=True) + layer.bias
    h = act(a)
    pad = np.zeros((xs.shape[0], w - 1, layer.c_out))
    hw = _windows(np.concatenate([pad, h, pad], axis=1), w)
    u = np.einsum("nskd,kdc->nsc", hw, layer.weights[::-1], optimize=True) + model.decoder_bias
    return xw, h, act(u)


def _as_batch(model: CAEModel, batch) -> np.ndarray:
    xs = np.asarray(batch, dtype=np.float64)
    if xs.ndim == 2:
        xs = xs[None]
    if xs.ndim != 3 or xs.shape[0] == 0 or xs.shape[2] != model.encoder.c_in:
        raise InvalidInputError(f"batch of shape {xs.shape} does not fit the model")
    if xs.shape[1] < model.encoder.w:
        raise InvalidInputError("sequences are shorter than the convolution window")
    return xs


def batch_loss(model: CAEModel, batch) -> float:
    xs = _as_batch(model, batch)
    _, _, recon = _forward(model, xs)
    return float(np.sum((xs - recon) ** 2))


def _act_grad(act: Activation, out: np.ndarray) -> np.ndarray:
    if act is Activation.TANH:
        return 1.0 - out ** 2
    return np.ones_like(out)


def gradients(model: CAEModel, batch, mode: Mode = Mode.REGULAR) -> CAEGradients:
    """Gradient of the summed reconstruction error over ``batch``."""
    mode = Mode(mode)
    xs = _as_batch(model, batch)
    layer = model.encoder
    w, act = layer.w, layer.activation
    xw, h, recon = _forward(model, xs)

    g = 2.0 * (recon - xs) * _act_grad(act, recon)
    d_dec_bias = g.sum(axis=(0, 1))
    gw = _windows(g, w)  # gw[n, t, tau] = g[n, t + tau]
    d_weights = np.einsum("ntd,ntwc->wdc", h, gw, optimize=True)

    dh = np.einsum("ntwc,wdc->ntd", gw, layer.weights, optimize=True)
    da = dh * _act_grad(act, h)
    if mode is Mode.SHIFTNET:
        da[:, :-1, :] = 0.0  # shifted frames are cached constants
    d_weights += np.einsum("ntd,ntwc->wdc", da, xw, optimize=True)
    return CAEGradients(d_weights, da.sum(axis=(0, 1)), d_dec_bias)


def train(model: CAEModel, batch, config: TrainConfig) -> TrainResult:
    """Full-batch gradient descent; ``losses[e]`` is the loss after epoch ``e``."""
    xs = _as_batch(model, batch)
    result = TrainResult(model, batch_loss(model, xs))
    lr = config.learning_rate
    for epoch in range(config.epochs):
        grad = gradients(model, xs, config.mode)
        if not np.all(np.isfinite(grad.flat())):
            raise TrainingDivergedError(epoch, float("nan"))
        model = model.with_params(model.encoder.weights - lr * grad.weights,
                                  model.encoder.bias - lr * grad.bias,
                                  model.decoder_bias - lr * grad.decoder_bias)
        loss = batch_loss(model, xs)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch, loss)
        result.losses.append(loss)
    result.model = model
    return result


def encode_features(model: CAEModel, batch) -> np.ndarray:
    """Hidden activations per sample, all frames concatenated: ``(N, t_h * C_hidden)``."""
    xs = _as_batch(model, batch)
    feats = [encode(model, x).ravel() for x in xs]
    return np.stack(feats)
