"""Timing harness comparing naive full-window evaluation with the shift engine.

A measurement point fixes (mode, layers, window, context, input frames).
Each run advances a seeded stream by ``steps`` frames and records the
mean wall time per frame; ``warmup`` runs are discarded, then ``runs``
timed runs are averaged.
"""

from __future__ import annotations

import itertools
import os
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .complexity import CostParams, count_normal_input_fixed
from .conv_core import NetworkSpec, OpCounter, forward_stack, random_network
from .shift_engine import ShiftEngine

__all__ = ["BenchPoint", "BenchRecord", "BenchConfig", "run_point", "run_sweep",
           "crossovers", "BENCH_COLUMNS"]

BENCH_COLUMNS = ["mode", "n_layers", "window", "context", "frames", "steps", "runs",
                 "mean_ns", "std_ns", "ops_per_step", "crossover_frames", "skipped"]


@dataclass(frozen=True)
class BenchPoint:
    mode: str
    n_layers: int
    window: int
    context: int
    frames: int


@dataclass
class BenchRecord:
    point: BenchPoint
    steps: int
    runs: int
    mean_ns: float | None
    std_ns: float | None
    ops_per_step: float | None
    skipped: str = ""


@dataclass(frozen=True)
class BenchConfig:
    frames: tuple[int, ...] = (10, 20, 50, 100, 200, 500)
    context: tuple[int, ...] = (40,)
    window: tuple[int, ...] = (10,)
    layers: tuple[int, ...] = (2,)
    modes: tuple[str, ...] = ("naive", "shift")
    runs: int = 10
    warmup: int = 3
    steps: int = 5
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchConfig":
        known = {f: doc[f] for f in cls.__dataclass_fields__ if f in doc}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"unknown bench config keys: {sorted(unknown)}")
        for key in ("frames", "context", "window", "layers", "modes"):
            if key in known:
                value = known[key]
                known[key] = tuple(value) if isinstance(value, (list, tuple)) else (value,)
        cfg = cls(**known)
        if cfg.runs < 1 or cfg.steps < 1 or cfg.warmup < 0:
            raise ValueError("runs and steps must be positive, warmup non-negative")
        if not set(cfg.modes) <= {"naive", "shift"}:
            raise ValueError(f"modes must be naive/shift, got {cfg.modes}")
        return cfg

    def points(self):
        for n, w, c, t, mode in itertools.product(
                self.layers, self.window, self.context, self.frames, self.modes):
            yield BenchPoint(mode, n, w, c, t)


def _pin_single_core() -> None:
    if hasattr(os, "sched_setaffinity"):
        try:
            os.sched_setaffinity(0, {min(os.sched_getaffinity(0))})
        except OSError:
            pass


class _NaiveStepper:
    def __init__(self, net: NetworkSpec, frames: int, stream: np.ndarray):
        self.net, self.frames, self.stream = net, frames, stream
        self.pos = 0
        self.counter = OpCounter()

    def step(self) -> None:
        window = self.stream[self.pos:self.pos + self.frames]
        forward_stack(self.net, window, self.counter)
        self.pos += 1


class _ShiftStepper:
    def __init__(self, net: NetworkSpec, frames: int, stream: np.ndarray):
        self.engine = ShiftEngine(net)
        self.stream = stream
        # prime to steady state on the first window
        for frame in stream[:frames - 1]:
            self.engine.push(frame)
        self.pos = frames - 1
        self.counter = self.engine.counter

    def step(self) -> None:
        self.engine.push(self.stream[self.pos])
        self.pos += 1


def run_point(point: BenchPoint, runs: int = 10, warmup: int = 3, steps: int = 5,
              seed: int = 0) -> BenchRecord:
    p = CostParams(point.n_layers, point.frames, point.window)
    if point.window < 1 or not p.input_fixed_feasible:
        return BenchRecord(point, steps, runs, None, None, None,
                           skipped=f"{point.frames} frames cannot feed {point.n_layers} "
                                   f"layers of window {point.window}")
    rng = np.random.default_rng(seed)
    net = random_network(rng, [point.window] * point.n_layers,
                         [point.context] * (point.n_layers + 1))
    total_steps = (warmup + runs) * steps
    stream = rng.standard_normal((point.frames + total_steps, point.context))
    stepper = (_NaiveStepper if point.mode == "naive" else _ShiftStepper)(
        net, point.frames, stream)

    times = []
    ops_before = stepper.counter.total
    for run in range(warmup + runs):
        if run == warmup:
            ops_before = stepper.counter.total
        start = time.perf_counter_ns()
        for _ in range(steps):
            stepper.step()
        elapsed = time.perf_counter_ns() - start
        if run >= warmup:
            times.append(elapsed / steps)
    ops = (stepper.counter.total - ops_before) / (runs * steps)
    std = statistics.stdev(times) if len(times) > 1 else 0.0
    return BenchRecord(point, steps, runs, statistics.fmean(times), std, ops)


def run_sweep(config: BenchConfig, pin: bool = True) -> list[BenchRecord]:
    if pin:
        _pin_single_core()
    return [run_point(pt, config.runs, config.warmup, config.steps, config.seed)
            for pt in config.points()]


def crossovers(records: list[BenchRecord]) -> dict[tuple[int, int, int], int | None]:
    """Per (layers, window, context): smallest frame count where shift beats naive."""
    table: dict[tuple[int, int, int], dict[int, dict[str, float]]] = {}
    for rec in records:
        if rec.mean_ns is None:
            continue
        pt = rec.point
        table.setdefault((pt.n_layers, pt.window, pt.context), {}) \
            .setdefault(pt.frames, {})[pt.mode] = rec.mean_ns
    result = {}
    for key, by_frames in table.items():
        result[key] = next((t for t in sorted(by_frames)
                            if {"naive", "shift"} <= by_frames[t].keys()
                            and by_frames[t]["shift"] < by_frames[t]["naive"]), None)
    return result


def expected_ops(point: BenchPoint) -> int:
    if point.mode == "shift":
        return point.n_layers
    return count_normal_input_fixed(CostParams(point.n_layers, point.frames, point.window))
