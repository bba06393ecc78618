import itertools

import pytest

from deepshift.complexity import (
    CostParams,
    InfeasibleStackError,
    count_deep_shifting,
    count_normal_deepest_fixed,
    count_normal_input_fixed,
    measure_deepest_fixed,
    measure_input_fixed,
    paper_closed_forms,
    reconcile,
    speedup_factor,
)

from oracles import scalar_naive_ops

GRID = [CostParams(n, t, w) for n, t, w in itertools.product(range(1, 5), range(1, 9), range(1, 5))]


class TestSeries:
    def test_single_layer_deepest_fixed(self):
        assert count_normal_deepest_fixed(CostParams(1, 7, 3)) == 7

    def test_three_layers_deepest_fixed(self):
        assert count_normal_deepest_fixed(CostParams(3, 4, 3)) == 4 + 6 + 8

    def test_two_layers_input_fixed(self):
        assert count_normal_input_fixed(CostParams(2, 10, 3)) == 8 + 6

    def test_single_layer_input_fixed(self):
        assert count_normal_input_fixed(CostParams(1, 9, 4)) == 6

    def test_infeasible(self):
        with pytest.raises(InfeasibleStackError):
            count_normal_input_fixed(CostParams(3, 6, 3))

    @pytest.mark.parametrize("p", GRID, ids=str)
    def test_series_equal_live_counters(self, p):
        assert count_normal_deepest_fixed(p) == measure_deepest_fixed(p)
        if p.input_fixed_feasible:
            assert count_normal_input_fixed(p) == measure_input_fixed(p)
            assert count_normal_input_fixed(p) == scalar_naive_ops([p.w] * p.n, p.t)


class TestDeepShifting:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_count_is_layer_count(self, n):
        assert count_deep_shifting(CostParams(n, 10, 2)) == n


class TestSpeedup:
    def test_worked_example(self):
        assert speedup_factor(CostParams(2, 10, 3)) == 7

    def test_window_spans_input(self):
        assert speedup_factor(CostParams(1, 4, 4)) == 1

    @pytest.mark.parametrize("p", [p for p in GRID if p.input_fixed_feasible], ids=str)
    def test_identity(self, p):
        assert speedup_factor(p) * count_deep_shifting(p) == count_normal_input_fixed(p)
        assert speedup_factor(p) == measure_input_fixed(p) / p.n


class TestClosedForms:
    def test_single_layer_a_agrees(self):
        assert paper_closed_forms(CostParams(1, 5, 3))[0] == 5

    def test_a_disagrees_for_three_layers(self):
        p = CostParams(3, 4, 3)
        assert paper_closed_forms(p)[0] == 14
        assert count_normal_deepest_fixed(p) == 18

    def test_b_disagrees_for_two_layers(self):
        p = CostParams(2, 10, 3)
        assert paper_closed_forms(p)[1] == 18
        assert count_normal_input_fixed(p) == 14

    def test_reconcile_row(self):
        row = reconcile(CostParams(2, 10, 3))
        assert row["series_B"] == row["counter_B"] == 14
        assert row["closed_B_matches"] is False
        assert row["counter_A_matches"] and row["counter_B_matches"]

    def test_reconcile_infeasible_b(self):
        row = reconcile(CostParams(4, 3, 2))
        assert row["series_B"] is None and row["counter_B"] is None
        assert row["counter_A_matches"]


class TestScaling:
    @pytest.mark.parametrize("t,w", list(itertools.product(range(1, 7), range(2, 6))))
    def test_series_a_second_difference(self, t, w):
        s = [count_normal_deepest_fixed(CostParams(n, t, w)) for n in range(1, 8)]
        second = [s[k + 2] - 2 * s[k + 1] + s[k] for k in range(len(s) - 2)]
        assert second == [w - 1] * len(second)

    def test_deep_shifting_linear(self):
        d = [count_deep_shifting(CostParams(n, 5, 3)) for n in range(1, 10)]
        assert all(b - a == 1 for a, b in zip(d, d[1:]))
