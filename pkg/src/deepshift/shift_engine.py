"""Streaming evaluation with cached activations.

Each layer keeps its most recent output frames in a ring buffer.  When a
new input frame arrives only the newest output frame of every layer is
computed; all older frames are reused where they sit.  Moving the
"current time" forward is an index rotation, so no cached frame is ever
copied.

Buffers are shared between neighbours: layer ``l``'s output buffer is
layer ``l + 1``'s input buffer, with capacity equal to that layer's
window.  The deepest output buffer holds ``deepest_retained`` frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv_core import (
    ConvLayerParams,
    InvalidInputError,
    NetworkSpec,
    OpCounter,
    conv_frame,
)

__all__ = [
    "RingBuffer",
    "LayerState",
    "NetworkHandle",
    "ShiftEngine",
    "StepResult",
    "StaleCacheError",
]


class StaleCacheError(RuntimeError):
    """Weights changed since the caches were filled; call ``invalidate``."""


class RingBuffer:
    def __init__(self, capacity: int, width: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.storage = np.zeros((capacity, width))
        self.head = 0  # slot the next push writes to
        self.fill = 0

    def push(self, frame: np.ndarray) -> None:
        self.storage[self.head] = frame
        self.head = (self.head + 1) % self.capacity
        if self.fill < self.capacity:
            self.fill += 1

    def full(self) -> bool:
        return self.fill == self.capacity

    def _order(self, count: int) -> np.ndarray:
        return (self.head - count + np.arange(count)) % self.capacity

    def last(self, count: int) -> np.ndarray:
        """The newest ``count`` frames, oldest first (a gathered copy)."""
        if count > self.fill:
            raise IndexError(f"only {self.fill} frames buffered")
        return self.storage[self._order(count)]

    def ordered(self) -> np.ndarray:
        return self.last(self.fill)

    def clear(self) -> None:
        self.head = 0
        self.fill = 0


@dataclass
class LayerState:
    input_buffer: RingBuffer
    output_buffer: RingBuffer


@dataclass
class StepResult:
    new_frames: list[np.ndarray | None]
    ops_this_step: list[int]

    @property
    def ops(self) -> int:
        return sum(self.ops_this_step)


class NetworkHandle:
    """Mutable slot holding the current weights, shareable between engines.

    Replacing the network bumps ``version``; engines primed with an older
    version refuse to step until invalidated.
    """

    def __init__(self, net: NetworkSpec):
        self.net = net
        self.version = 0

    def update(self, net: NetworkSpec) -> None:
        if not net.shape_compatible(self.net):
            raise InvalidInputError("replacement network has different layer shapes")
        self.net = net
        self.version += 1


class ShiftEngine:
    def __init__(self, net: NetworkSpec | NetworkHandle, deepest_retained: int = 1):
        if deepest_retained < 1:
            raise ValueError("deepest_retained must be at least 1")
        self.handle = net if isinstance(net, NetworkHandle) else NetworkHandle(net)
        self.deepest_retained = deepest_retained
        self.counter = OpCounter([0] * len(self.net))
        self.weights_version = self.handle.version
        self.frames_seen = 0

        windows = self.net.windows
        widths = [self.net.c_in] + [layer.c_out for layer in self.net.layers]
        capacities = list(windows) + [deepest_retained]
        self._buffers = [RingBuffer(cap, c) for cap, c in zip(capacities, widths)]
        self.layers = [LayerState(self._buffers[k], self._buffers[k + 1])
                       for k in range(len(windows))]
        self._hidden_count = 0
        self._decoded_upto = 0
        self._decoder_cache: tuple | None = None

    @property
    def net(self) -> NetworkSpec:
        return self.handle.net

    def push(self, frame) -> StepResult:
        if self.handle.version != self.weights_version:
            raise StaleCacheError(
                f"engine primed with weights v{self.weights_version}, "
                f"current is v{self.handle.version}")
        frame = np.asarray(frame, dtype=np.float64)
        if frame.shape != (self.net.c_in,):
            raise InvalidInputError(
                f"frame of shape {frame.shape} does not match C_in={self.net.c_in}")

        n = len(self.layers)
        new_frames: list[np.ndarray | None] = [None] * n
        ops = [0] * n
        self.layers[0].input_buffer.push(frame)
        self.frames_seen += 1
        for index, (layer, state) in enumerate(zip(self.net.layers, self.layers)):
            if not state.input_buffer.full():
                break
            window = state.input_buffer.last(layer.w)
            out = conv_frame(layer, window, self.counter, index)
            state.output_buffer.push(out)
            new_frames[index] = out
            ops[index] = 1
        if new_frames[-1] is not None:
            self._hidden_count += 1
        return StepResult(new_frames, ops)

    def snapshot(self) -> list[np.ndarray]:
        """Each layer's buffered outputs, oldest first."""
        return [state.output_buffer.ordered() for state in self.layers]

    def retained(self) -> np.ndarray:
        return self.layers[-1].output_buffer.ordered()

    def streaming_decode(self, decoder: ConvLayerParams, bias=None,
                         activation=None) -> np.ndarray | None:
        """Newest reconstruction frame that has become final, or ``None``.

        A full-convolution output frame is final once all ``w`` hidden
        frames contributing to it exist.  It is computed once; calling again
        before the next deep frame arrives returns ``None``.
        """
        if decoder.c_out != self.net.layers[-1].c_out:
            raise InvalidInputError("decoder does not match the deepest layer's width")
        if decoder.w > self.deepest_retained:
            raise InvalidInputError(
                f"decoder window {decoder.w} exceeds deepest_retained={self.deepest_retained}")
        buf = self.layers[-1].output_buffer
        if buf.fill < decoder.w or self._decoded_upto == self._hidden_count:
            return None
        cached = self._decoder_cache
        if (cached is None or cached[0] is not decoder or cached[1] is not bias
                or cached[2] != activation):
            cached = (decoder, bias, activation, decoder.adjoint(bias, activation))
            self._decoder_cache = cached
        self._decoded_upto = self._hidden_count
        return conv_frame(cached[3], buf.last(decoder.w))

    def invalidate(self, new_net: NetworkSpec | None = None) -> "ShiftEngine":
        """Drop every cached activation and re-prime on the current weights.

        Passing ``new_net`` installs it in the shared handle first.  The op
        counter is left untouched.
        """
        if new_net is not None:
            self.handle.update(new_net)
        for buf in self._buffers:
            buf.clear()
        self.weights_version = self.handle.version
        self.frames_seen = 0
        self._hidden_count = 0
        self._decoded_upto = 0
        self._decoder_cache = None
        return self

    reset = invalidate

    def fills(self) -> list[int]:
        return [buf.fill for buf in self._buffers]

    def capacities(self) -> list[int]:
        return [buf.capacity for buf in self._buffers]
