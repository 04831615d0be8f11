"""Scoring algebra: the efficiency terms and the synthesized score."""

import math

import numpy as np
import pytest

from nnbench.scoring import (
    ScalingHooks,
    ScoreInput,
    accuracy_score,
    comparison_table,
    gopj,
    gops,
    score_results,
    silicon_eff,
    synthesized_score,
)
from nnbench.types import RunResult, SpecError


def test_gops_examples():
    assert gops(2.0, 1.0) == 2.0
    assert gops(2.0, 0.5) == 4.0  # halving time doubles gops
    with pytest.raises(SpecError):
        gops(1.0, 0.0)


def test_gopj_examples():
    assert gopj(2.0, 2.0) == 1.0
    assert gopj(2.0, None) is None
    # 10 W power model, 0.5 s, 5 GOp -> 1.0
    assert gopj(5.0, 10.0 * 0.5) == 1.0


def test_silicon_eff_examples():
    assert silicon_eff(0.9, 0.9, 1.0) == 1.0
    assert silicon_eff(0.9, 0.9, 2.0) == 0.5
    assert silicon_eff(1.0, 1.0, None) is None


def _si(name, product):
    """A ScoreInput whose three-term product equals `product`."""
    # gopj = product, gops = 1, silicon = 1
    return ScoreInput(name, ops_giga=1.0, time_s=1.0, energy_j=1.0 / product,
                      acc=1.0, ref_acc=1.0, area_mm2=1.0)


def test_synthesized_score_unit():
    assert synthesized_score([_si("a", 1.0)]) == pytest.approx(1.0)


def test_synthesized_score_two_benchmark_products_4_9():
    assert synthesized_score([_si("a", 4.0), _si("b", 9.0)]) == pytest.approx(6.0)


def test_synthesized_score_doubles_with_gopj():
    base = [_si("a", 4.0), _si("b", 9.0)]
    doubled = [_si("a", 8.0), _si("b", 18.0)]
    assert synthesized_score(doubled) == pytest.approx(2 * synthesized_score(base))


def test_synthesized_score_permutation_invariant():
    a = [_si("a", 2.0), _si("b", 5.0), _si("c", 11.0)]
    assert synthesized_score(a) == pytest.approx(synthesized_score(list(reversed(a))))


def test_synthesized_score_scale_covariant():
    base = [_si("a", 3.0), _si("b", 7.0)]
    scaled = [_si("a", 3.0 * 5), _si("b", 7.0 * 5)]
    assert synthesized_score(scaled) == pytest.approx(5 * synthesized_score(base))


def test_accuracy_degradation_never_raises_score():
    def at_acc(acc):
        return synthesized_score([
            ScoreInput("a", 1.0, 1.0, 1.0, acc=acc, ref_acc=1.0, area_mm2=1.0),
            ScoreInput("b", 2.0, 1.0, 1.0, acc=1.0, ref_acc=1.0, area_mm2=1.0),
        ])

    scores = [at_acc(a) for a in (1.0, 0.9, 0.5, 0.1)]
    assert all(s1 >= s2 for s1, s2 in zip(scores, scores[1:]))


def test_synthesized_score_empty_inclusion_is_none():
    si = ScoreInput("a", 1.0, 1.0, energy_j=None, area_mm2=None)
    assert synthesized_score([si]) is None


def test_user_hooks_apply():
    hooks = ScalingHooks(f=lambda v: v * v, g=lambda v: 1.0, h=lambda v: 1.0)
    assert synthesized_score([_si("a", 3.0)], hooks) == pytest.approx(9.0)
    # the exponential accuracy penalty of early drafts stays available as a hook
    exp_hooks = ScalingHooks(h=lambda v: math.exp(v - 1.0))
    assert synthesized_score([_si("a", 1.0)], exp_hooks) == pytest.approx(1.0)


def test_accuracy_score_tolerance():
    golden = np.zeros(10, np.float32)
    out = golden.copy()
    out[:3] += 5e-4   # inside tolerance
    out[3] += 0.5     # outside
    assert accuracy_score(out, golden) == pytest.approx(0.9)


def _result(bench, backend, t, e=None, ops=2e9):
    return RunResult(benchmark=bench, backend=backend, status="ok", wall_time=t,
                     energy=e, mse_vs_golden=0.0, ops=ops, repetitions=1)


def test_score_results_and_comparison_antisymmetry():
    a = [_result("x", "A", 0.5, 1.0), _result("y", "A", 2.0, 4.0)]
    b = [_result("x", "B", 1.0, 3.0), _result("y", "B", 1.0, 1.0)]
    cards = {"A": score_results(a, area_mm2=2.0), "B": score_results(b, area_mm2=1.0)}
    tab_a = comparison_table(cards, "A")
    tab_b = comparison_table(cards, "B")
    for bench in ("x", "y"):
        s_ab = tab_a["backends"]["B"]["rows"][bench]["speedup"]
        s_ba = tab_b["backends"]["A"]["rows"][bench]["speedup"]
        assert abs(s_ab * s_ba - 1.0) < 1e-12
    assert tab_a["backends"]["A"]["rows"]["x"]["speedup"] == 1.0


def test_comparison_missing_benchmark_is_null():
    a = [_result("x", "A", 1.0)]
    b = [_result("x", "B", 2.0), _result("z", "B", 1.0)]
    cards = {"A": score_results(a), "B": score_results(b)}
    tab = comparison_table(cards, "A")
    assert tab["backends"]["B"]["rows"]["z"]["speedup"] is None


def test_score_results_nulls_propagate():
    card = score_results([_result("x", "A", 1.0, e=None)])
    assert card.geomean_gopj is None
    assert card.synthesized_score is None
    assert "absent" in card.note
