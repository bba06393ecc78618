"""Model files (JSON) and CSV plumbing shared by the CLI."""

from __future__ import annotations

import csv
import json
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cae import CAEModel
from .conv_core import Activation, ConvLayerParams, InvalidInputError, NetworkSpec

__all__ = ["ModelFileError", "dump_model", "load_model", "save_model", "read_model",
           "read_stream_csv", "provenance", "CSVOut"]


class ModelFileError(ValueError):
    pass


def _layer_doc(layer: ConvLayerParams) -> dict:
    return {
        "w": layer.w,
        "c_in": layer.c_in,
        "c_out": layer.c_out,
        "activation": layer.activation.value,
        "weights": layer.weights.tolist(),
        "bias": layer.bias.tolist(),
    }


def dump_model(model: NetworkSpec | CAEModel) -> str:
    """JSON text; floats are written with ``repr`` so they round-trip exactly."""
    if isinstance(model, CAEModel):
        doc = {"layers": [_layer_doc(model.encoder)],
               "decoder_bias": model.decoder_bias.tolist()}
    else:
        doc = {"layers": [_layer_doc(layer) for layer in model.layers]}
    return json.dumps(doc, indent=1) + "\n"


def _parse_layer(k: int, doc: dict) -> ConvLayerParams:
    try:
        w, c_in, c_out = int(doc["w"]), int(doc["c_in"]), int(doc["c_out"])
        weights = np.array(doc["weights"], dtype=np.float64)
        bias = np.array(doc["bias"], dtype=np.float64)
        activation = Activation(doc.get("activation", "tanh"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"layer {k}: {exc}") from None
    if weights.shape != (w, c_out, c_in):
        raise ModelFileError(
            f"layer {k}: weights have shape {weights.shape}, header says {(w, c_out, c_in)}")
    try:
        return ConvLayerParams(weights, bias, activation)
    except InvalidInputError as exc:
        raise ModelFileError(f"layer {k}: {exc}") from None


def load_model(text: str) -> tuple[NetworkSpec, np.ndarray | None]:
    """Parse a model document into a network and its optional decoder bias."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise ModelFileError("model document needs a 'layers' list")
    layers = tuple(_parse_layer(k, layer) for k, layer in enumerate(doc["layers"]))
    try:
        net = NetworkSpec(layers)
    except InvalidInputError as exc:
        raise ModelFileError(str(exc)) from None
    dec = doc.get("decoder_bias")
    if dec is not None:
        dec = np.array(dec, dtype=np.float64)
        if dec.shape != (net.c_in,):
            raise ModelFileError("decoder_bias length must equal the first layer's c_in")
    return net, dec


def save_model(model, path) -> None:
    Path(path).write_text(dump_model(model))


def read_model(path) -> tuple[NetworkSpec, np.ndarray | None]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(str(exc)) from None
    return load_model(text)


def read_stream_csv(source) -> np.ndarray:
    """Frames from a ``c0,...,c{C-1}`` CSV as a ``(t, C)`` array."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    rows = list(csv.reader(line for line in text.splitlines()
                           if line.strip() and not line.startswith("#")))
    if not rows:
        raise InvalidInputError("empty stream file")
    header = rows[0]
    if header and header[-1] == "label":
        header = header[:-1]
    if header != [f"c{k}" for k in range(len(header))] or not header:
        raise InvalidInputError(f"unexpected stream header {rows[0]}")
    data = np.array([[float(v) for v in row[:len(header)]] for row in rows[1:]], dtype=float)
    if data.size == 0:
        return np.zeros((0, len(header)))
    if not np.all(np.isfinite(data)):
        raise InvalidInputError("stream contains non-finite values")
    return data


def provenance(seed, argv=None) -> str:
    argv = sys.argv if argv is None else argv
    return f"# deepshift {__version__} seed={seed} cmd={shlex.join(argv)}\n"


class CSVOut:
    """CSV writer that leads with a provenance comment and a header row."""

    def __init__(self, stream, columns, seed=None, argv=None):
        stream.write(provenance(seed, argv))
        self.columns = list(columns)
        self.writer = csv.writer(stream, lineterminator="\n")
        self.writer.writerow(self.columns)

    def row(self, **values) -> None:
        self.writer.writerow([_fmt(values.get(c)) for c in self.columns])


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)
