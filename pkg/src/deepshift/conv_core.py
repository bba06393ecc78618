"""Dense 1D temporal convolution over (time, context) sequences.

Sequences are float64 arrays of shape ``(t, C)``; a single frame is a
length-``C`` vector.  Every output frame, whichever evaluation path asks
for it, goes through :func:`conv_frames`, whose summation order is fixed:
for each output channel the products ``W[tau, i, j] * x[tau, j]`` are
added strictly left to right over ``(tau, j)`` in lexicographic order,
then the bias is added and the activation applied.  Because each output
element is computed by the same sequence of rounded operations no matter
how many frames are batched together, the streaming engine and the naive
full-window pass agree bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Activation",
    "ConvLayerParams",
    "NetworkSpec",
    "OpCounter",
    "InvalidInputError",
    "WindowUnderflowError",
    "as_sequence",
    "conv_frames",
    "conv_frame",
    "valid_conv",
    "full_conv_adjoint",
    "forward_stack",
    "forward_available",
    "random_layer",
    "random_network",
]

# Bounds the temporary (frames, C_out, w*C_in) product array.
_CHUNK_ELEMENTS = 1 << 21


class InvalidInputError(ValueError):
    """Shapes or values do not fit the layer they are fed to."""


class WindowUnderflowError(InvalidInputError):
    """Fewer input frames than the convolution window needs."""


class Activation(str, enum.Enum):
    TANH = "tanh"
    IDENTITY = "identity"

    def __call__(self, a: np.ndarray) -> np.ndarray:
        if self is Activation.TANH:
            return np.tanh(a)
        return a


@dataclass(frozen=True, eq=False)
class ConvLayerParams:
    """One temporal convolution layer.

    ``weights`` has shape ``(w, C_out, C_in)``: ``weights[tau]`` multiplies
    the input frame at offset ``tau`` inside the window.
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.TANH

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64)
        if weights.ndim != 3 or weights.shape[0] < 1:
            raise InvalidInputError(
                f"weights must have shape (w, C_out, C_in) with w >= 1, got {weights.shape}")
        if bias.shape != (weights.shape[1],):
            raise InvalidInputError(
                f"bias shape {bias.shape} does not match C_out={weights.shape[1]}")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise InvalidInputError("layer parameters must be finite")
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "activation", Activation(self.activation))
        # (C_out, w*C_in), tau-major, matching the flattened window layout.
        flat = np.ascontiguousarray(weights.transpose(1, 0, 2).reshape(weights.shape[1], -1))
        flat.setflags(write=False)
        object.__setattr__(self, "_flat", flat)

    @property
    def w(self) -> int:
        return self.weights.shape[0]

    @property
    def c_out(self) -> int:
        return self.weights.shape[1]

    @property
    def c_in(self) -> int:
        return self.weights.shape[2]

    def adjoint(self, bias=None, activation: Activation | None = None) -> "ConvLayerParams":
        """Layer whose valid convolution over a zero-padded sequence is the
        transpose of this layer's linear map (taps flipped, matrices transposed)."""
        flipped = self.weights[::-1].transpose(0, 2, 1)
        if bias is None:
            bias = np.zeros(self.c_in)
        return ConvLayerParams(flipped, bias, activation or self.activation)

    def same_params(self, other: "ConvLayerParams") -> bool:
        return (self.activation == other.activation
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.bias, other.bias))


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """A stack of convolution layers, shallowest first."""

    layers: tuple[ConvLayerParams, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise InvalidInputError("a network needs at least one layer")
        for k, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.c_out != b.c_in:
                raise InvalidInputError(
                    f"layer {k} has C_out={a.c_out} but layer {k + 1} expects C_in={b.c_in}")
        object.__setattr__(self, "layers", layers)

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def c_in(self) -> int:
        return self.layers[0].c_in

    @property
    def windows(self) -> tuple[int, ...]:
        return tuple(layer.w for layer in self.layers)

    def time_axes(self, t_x: int) -> list[int]:
        """Time-axis lengths ``[t_x, t_1, ..., t_n]`` induced by an input of ``t_x`` frames."""
        axes = [t_x]
        for layer in self.layers:
            axes.append(axes[-1] - layer.w + 1)
        return axes

    def min_input_length(self) -> int:
        return 1 + sum(w - 1 for w in self.windows)

    def shape_compatible(self, other: "NetworkSpec") -> bool:
        return (len(self) == len(other)
                and all(a.weights.shape == b.weights.shape
                        for a, b in zip(self.layers, other.layers)))


@dataclass
class OpCounter:
    """Tally of convolution operations, one per output frame per layer."""

    per_layer: list[int] = field(default_factory=list)

    def add(self, layer: int, count: int = 1) -> None:
        if count < 0:
            raise ValueError("op counts only grow")
        if layer >= len(self.per_layer):
            self.per_layer.extend([0] * (layer + 1 - len(self.per_layer)))
        self.per_layer[layer] += count

    @property
    def total(self) -> int:
        return sum(self.per_layer)

    def copy(self) -> "OpCounter":
        return OpCounter(list(self.per_layer))


def as_sequence(x, c: int | None = None) -> np.ndarray:
    seq = np.asarray(x, dtype=np.float64)
    if seq.ndim != 2:
        raise InvalidInputError(f"a sequence must be 2D (t, C), got shape {seq.shape}")
    if c is not None and seq.shape[1] != c:
        raise InvalidInputError(f"expected {c} context channels, got {seq.shape[1]}")
    return seq


def conv_frames(layer: ConvLayerParams, windows: np.ndarray,
                counter: OpCounter | None = None, layer_index: int = 0) -> np.ndarray:
    """Evaluate the layer on a batch of windows of shape ``(k, w, C_in)``.

    Returns ``(k, C_out)``.  Each output element depends only on its own
    window and is accumulated in the fixed order described in the module
    docstring, so results do not depend on ``k``.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3 or windows.shape[1:] != (layer.w, layer.c_in):
        raise InvalidInputError(
            f"windows of shape {windows.shape} do not fit a layer with w={layer.w}, "
            f"C_in={layer.c_in}")
    k = windows.shape[0]
    flat_x = windows.reshape(k, 1, -1)
    out = np.empty((k, layer.c_out))
    step = max(1, _CHUNK_ELEMENTS // max(1, layer._flat.size))
    for lo in range(0, k, step):
        prod = layer._flat[None, :, :] * flat_x[lo:lo + step]
        # add.accumulate runs strictly sequentially along the axis
        out[lo:lo + step] = np.cumsum(prod, axis=2)[:, :, -1]
    out += layer.bias
    out = layer.activation(out)
    if counter is not None:
        counter.add(layer_index, k)
    return out


def conv_frame(layer: ConvLayerParams, window, counter: OpCounter | None = None,
               layer_index: int = 0) -> np.ndarray:
    """One output frame from a window of ``w`` input frames."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != (layer.w, layer.c_in):
        raise InvalidInputError(
            f"window of shape {window.shape} does not fit w={layer.w}, C_in={layer.c_in}")
    return conv_frames(layer, window[None], counter, layer_index)[0]


def _windows(seq: np.ndarray, w: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(seq, w, axis=0).transpose(0, 2, 1)


def valid_conv(layer: ConvLayerParams, x, counter: OpCounter | None = None,
               layer_index: int = 0) -> np.ndarray:
    x = as_sequence(x, layer.c_in)
    if x.shape[0] < layer.w:
        raise WindowUnderflowError(
            f"input has {x.shape[0]} frames but the window needs {layer.w}")
    return conv_frames(layer, _windows(x, layer.w), counter, layer_index)


def full_conv_adjoint(layer: ConvLayerParams, hidden, bias=None,
                      activation: Activation | None = None) -> np.ndarray:
    """Full (transposed) convolution: ``t_h`` frames in, ``t_h + w - 1`` out.

    Output frame ``s`` is ``act(sum_tau W[tau].T @ hidden[s - tau] + bias)``
    with out-of-range hidden frames treated as zero.  With identity
    activation and zero bias this is exactly the adjoint of
    :func:`valid_conv`'s linear part.  ``bias`` defaults to zeros and
    ``activation`` to the layer's own.
    """
    hidden = as_sequence(hidden, layer.c_out)
    pad = np.zeros((layer.w - 1, layer.c_out))
    padded = np.concatenate([pad, hidden, pad])
    return valid_conv(layer.adjoint(bias, activation), padded)


def forward_stack(net: NetworkSpec, x, counter: OpCounter | None = None) -> list[np.ndarray]:
    """Naive forward pass; returns every layer's activations, shallowest first."""
    outputs = []
    h = as_sequence(x, net.c_in)
    for index, layer in enumerate(net.layers):
        h = valid_conv(layer, h, counter, index)
        outputs.append(h)
    return outputs


def forward_available(net: NetworkSpec, x, counter: OpCounter | None = None) -> list[np.ndarray]:
    """Like :func:`forward_stack`, but stops at the first layer ``x`` is too
    short to feed instead of raising."""
    outputs = []
    h = as_sequence(x, net.c_in)
    for index, layer in enumerate(net.layers):
        if h.shape[0] < layer.w:
            break
        h = valid_conv(layer, h, counter, index)
        outputs.append(h)
    return outputs


def random_layer(rng: np.random.Generator, w: int, c_in: int, c_out: int,
                 activation: Activation = Activation.TANH, scale: float = 0.5) -> ConvLayerParams:
    weights = rng.uniform(-scale, scale, size=(w, c_out, c_in))
    bias = rng.uniform(-scale, scale, size=c_out)
    return ConvLayerParams(weights, bias, activation)


def random_network(rng: np.random.Generator, windows: Sequence[int], channels: Sequence[int],
                   activation: Activation = Activation.TANH, scale: float = 0.5) -> NetworkSpec:
    """``channels`` lists C_in of the first layer followed by each layer's C_out."""
    if len(channels) != len(windows) + 1:
        raise InvalidInputError("need one more channel count than layers")
    return NetworkSpec(tuple(
        random_layer(rng, w, channels[k], channels[k + 1], activation, scale)
        for k, w in enumerate(windows)))
