"""Convolution-operation counts for naive and cached stacked evaluation.

Two naive scenarios are modelled:

* deepest fixed ("A"): the deepest layer spans ``t`` frames and each of
  the ``n`` layers above it is ``w - 1`` frames longer;
* input fixed ("B"): the input spans ``t`` frames and each of ``n``
  layers is ``w - 1`` frames shorter than the one below.

Counts are computed as literal per-layer sums.  The commonly quoted
closed forms are kept separately in :func:`paper_closed_forms` so a report
can show where they diverge from the sums; the sums are what the live op
counters reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .conv_core import Activation, NetworkSpec, OpCounter, forward_stack, random_network

__all__ = [
    "CostParams",
    "InfeasibleStackError",
    "count_normal_deepest_fixed",
    "count_normal_input_fixed",
    "count_deep_shifting",
    "speedup_factor",
    "paper_closed_forms",
    "measure_deepest_fixed",
    "measure_input_fixed",
    "reconcile",
]


class InfeasibleStackError(ValueError):
    """Some layer of the stack would have fewer than one frame."""


@dataclass(frozen=True)
class CostParams:
    n: int
    t: int
    w: int

    def __post_init__(self):
        if self.n < 1 or self.t < 1 or self.w < 1:
            raise ValueError(f"n, t and w must be positive: {self}")

    @property
    def input_fixed_feasible(self) -> bool:
        return self.t - self.n * (self.w - 1) >= 1


def count_normal_deepest_fixed(p: CostParams) -> int:
    return sum(p.t + k * (p.w - 1) for k in range(p.n))


def count_normal_input_fixed(p: CostParams) -> int:
    terms = [p.t - k * (p.w - 1) for k in range(1, p.n + 1)]
    if min(terms) < 1:
        raise InfeasibleStackError(
            f"t_x={p.t} cannot feed {p.n} layers of window {p.w}")
    return sum(terms)


def count_deep_shifting(p: CostParams) -> int:
    """Steady-state operations per new frame: one per layer."""
    return p.n


def speedup_factor(p: CostParams) -> float:
    """Average naive operations per layer, i.e. ``t_x - (n + 1)(w - 1)/2``."""
    count_normal_input_fixed(p)  # feasibility check
    return float(p.t - Fraction((p.n + 1) * (p.w - 1), 2))


def paper_closed_forms(p: CostParams) -> tuple[float, float]:
    """The two published closed forms, verbatim: ``(A, B)``.

    ``A = n t + (n-1)(n-2)(w-1)/2`` and ``B = n t - n(n-1)(w-1)/2``.  Used
    only for reconciliation; they disagree with the sums for most ``n``.
    """
    a = p.n * p.t + Fraction((p.n - 1) * (p.n - 2) * (p.w - 1), 2)
    b = p.n * p.t - Fraction(p.n * (p.n - 1) * (p.w - 1), 2)
    return float(a), float(b)


def _stack(p: CostParams, seed: int) -> NetworkSpec:
    rng = np.random.default_rng(seed)
    return random_network(rng, [p.w] * p.n, [1] * (p.n + 1), Activation.IDENTITY)


def measure_deepest_fixed(p: CostParams, seed: int = 0) -> int:
    """Op-counter total of a naive pass whose deepest layer has ``t`` frames."""
    counter = OpCounter()
    forward_stack(_stack(p, seed), np.zeros((p.t + p.n * (p.w - 1), 1)), counter)
    return counter.total


def measure_input_fixed(p: CostParams, seed: int = 0) -> int:
    """Op-counter total of a naive pass over ``t`` input frames."""
    if not p.input_fixed_feasible:
        raise InfeasibleStackError(f"t_x={p.t} cannot feed {p.n} layers of window {p.w}")
    counter = OpCounter()
    forward_stack(_stack(p, seed), np.zeros((p.t, 1)), counter)
    return counter.total


RECONCILE_COLUMNS = [
    "n", "t", "w", "series_A", "closed_A", "series_B", "closed_B", "ds", "speedup",
    "counter_A", "counter_B", "closed_A_matches", "closed_B_matches",
    "counter_A_matches", "counter_B_matches",
]


def reconcile(p: CostParams) -> dict:
    """One row of the reconciliation report; scenario-B fields are None when infeasible."""
    series_a = count_normal_deepest_fixed(p)
    closed_a, closed_b = paper_closed_forms(p)
    counter_a = measure_deepest_fixed(p)
    row = {
        "n": p.n, "t": p.t, "w": p.w,
        "series_A": series_a, "closed_A": closed_a,
        "series_B": None, "closed_B": closed_b,
        "ds": count_deep_shifting(p), "speedup": None,
        "counter_A": counter_a, "counter_B": None,
        "closed_A_matches": closed_a == series_a,
        "closed_B_matches": None,
        "counter_A_matches": counter_a == series_a,
        "counter_B_matches": None,
    }
    if p.input_fixed_feasible:
        series_b = count_normal_input_fixed(p)
        counter_b = measure_input_fixed(p)
        row.update(series_B=series_b, speedup=speedup_factor(p), counter_B=counter_b,
                   closed_B_matches=closed_b == series_b,
                   counter_B_matches=counter_b == series_b)
    return row
