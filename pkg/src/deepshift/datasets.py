"""Labelled sequence datasets: a synthetic generator and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["LabeledDataset", "DatasetError", "synth_dataset", "resample", "read_dataset_csv",
           "write_dataset_csv"]


class DatasetError(ValueError):
    pass


@dataclass(eq=False)
class LabeledDataset:
    x: np.ndarray       # (N, t, C)
    labels: np.ndarray  # (N,) ints in [0, n_classes)
    n_classes: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.x.ndim != 3 or self.x.shape[0] != self.labels.shape[0]:
            raise DatasetError(
                f"samples {self.x.shape} and labels {self.labels.shape} do not line up")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DatasetError("labels out of range")
        if not np.all(np.isfinite(self.x)):
            raise DatasetError("dataset contains non-finite values")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def length(self) -> int:
        return self.x.shape[1]

    @property
    def context(self) -> int:
        return self.x.shape[2]


def synth_dataset(classes: int, samples_per_class: int, context: int, length: int,
                  seed: int = 0, noise: float = 0.3) -> LabeledDataset:
    """Each class is a per-channel mixture of two sinusoids with class-specific
    frequencies and phases; samples add i.i.d. Gaussian noise of std ``noise``."""
    if min(classes, samples_per_class, context, length) < 1:
        raise DatasetError("all counts must be at least 1")
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.5, 4.0, size=(classes, 2, context))
    phases = rng.uniform(0.0, 2 * np.pi, size=(classes, 2, context))
    t = np.arange(length)[:, None] / length
    prototypes = np.stack([
        0.5 * (np.sin(2 * np.pi * freqs[k, 0] * t + phases[k, 0])
               + np.sin(2 * np.pi * freqs[k, 1] * t + phases[k, 1]))
        for k in range(classes)])
    labels = np.repeat(np.arange(classes), samples_per_class)
    x = prototypes[labels] + noise * rng.standard_normal((labels.size, length, context))
    return LabeledDataset(x, labels, classes)


def resample(seq: np.ndarray, length: int) -> np.ndarray:
    """Linearly interpolate a ``(t, C)`` sequence onto ``length`` frames."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.shape[0] == length:
        return seq.copy()
    if seq.shape[0] == 1:
        return np.repeat(seq, length, axis=0)
    src = np.linspace(0.0, 1.0, seq.shape[0])
    dst = np.linspace(0.0, 1.0, length)
    return np.stack([np.interp(dst, src, seq[:, c]) for c in range(seq.shape[1])], axis=1)


def read_dataset_csv(source, length: int | None = None) -> LabeledDataset:
    """Parse a dataset CSV.

    Columns are ``c0..c{C-1}`` and a final ``label``; an optional leading
    ``sample`` column groups rows into sequences.  Without it, each maximal
    run of rows sharing a label is one sequence.  Lines starting with ``#``
    are ignored.  Sequences are resampled to ``length`` frames (default: the
    longest sequence).
    """
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    rows = [r for r in csv.reader(line for line in text.splitlines()
                                  if line.strip() and not line.startswith("#"))]
    if not rows:
        raise DatasetError("empty dataset file")
    header, body = rows[0], rows[1:]
    if not header or header[-1] != "label":
        raise DatasetError("dataset CSV needs a final 'label' column")
    has_sample = header[0] == "sample"
    channels = header[1 if has_sample else 0:-1]
    if channels != [f"c{k}" for k in range(len(channels))] or not channels:
        raise DatasetError(f"unexpected channel columns {channels}")

    groups: list[tuple[str, list[list[float]]]] = []
    keys: list[object] = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(f"line {lineno}: expected {len(header)} columns, got {len(row)}")
        label = row[-1].strip()
        key = row[0].strip() if has_sample else label
        try:
            values = [float(v) for v in row[1 if has_sample else 0:-1]]
        except ValueError as exc:
            raise DatasetError(f"line {lineno}: {exc}") from None
        if not keys or keys[-1] != key:
            keys.append(key)
            groups.append((label, []))
        elif groups[-1][0] != label:
            raise DatasetError(f"line {lineno}: label changes inside sample {key}")
        groups[-1][1].append(values)
    if not groups:
        raise DatasetError("dataset has no rows")

    names = sorted({g[0] for g in groups}, key=_label_key)
    index = {name: k for k, name in enumerate(names)}
    target = length or max(len(g[1]) for g in groups)
    x = np.stack([resample(np.array(frames), target) for _, frames in groups])
    labels = np.array([index[g[0]] for g in groups])
    return LabeledDataset(x, labels, len(names))


def _label_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def write_dataset_csv(ds: LabeledDataset, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sample"] + [f"c{k}" for k in range(ds.context)] + ["label"])
    for i, (seq, label) in enumerate(zip(ds.x, ds.labels)):
        for frame in seq:
            writer.writerow([i] + [repr(float(v)) for v in frame] + [int(label)])
