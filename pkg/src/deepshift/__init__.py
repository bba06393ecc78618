"""Streaming 1D temporal convolution that reuses cached activations."""

__version__ = "0.1.0"

from .conv_core import (  # noqa: E402
    Activation,
    ConvLayerParams,
    InvalidInputError,
    NetworkSpec,
    OpCounter,
    WindowUnderflowError,
    conv_frame,
    conv_frames,
    forward_available,
    forward_stack,
    full_conv_adjoint,
    random_layer,
    random_network,
    valid_conv,
)
from .shift_engine import NetworkHandle, RingBuffer, ShiftEngine, StaleCacheError, StepResult  # noqa: E402
