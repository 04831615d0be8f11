"""Exact reuse-distance algorithm against the quadratic oracle."""

import numpy as np
import pytest

from nnbench.characterize import (
    HIST_LABELS,
    ReuseProfile,
    histogram,
    memacc_from_trace,
    reuse_distances,
    reuse_distances_naive,
)
from nnbench.trace import trace_layer
from nnbench.types import KIND_FC, KIND_LRN, KIND_POOL_MAX, LayerSpec


def seq(*vals):
    return np.asarray(vals, dtype=np.uint64)


def test_a_b_a():
    pos, d = reuse_distances(seq(1, 2, 1))
    assert pos.tolist() == [2] and d.tolist() == [1]


def test_a_b_c_b_a():
    pos, d = reuse_distances(seq(1, 2, 3, 2, 1))
    assert pos.tolist() == [3, 4]
    assert d.tolist() == [1, 2]


def test_immediate_reuse_distance_zero():
    pos, d = reuse_distances(seq(5, 5, 5))
    assert d.tolist() == [0, 0]


def test_no_reuse_reports_absent_average():
    pos, d = reuse_distances(seq(1, 2, 3, 4))
    prof = ReuseProfile.from_distances(d)
    assert prof.count == 0 and prof.avg is None
    assert prof.hist.sum() == 0


def test_histogram_buckets():
    h = histogram(np.array([0, 1, 2, 3, 4, 1024, 2**30, 2**31], dtype=np.int64))
    assert h[HIST_LABELS.index("0")] == 1
    assert h[HIST_LABELS.index("2^0")] == 1          # d = 1
    assert h[HIST_LABELS.index("2^1")] == 2          # 2, 3
    assert h[HIST_LABELS.index("2^2")] == 1          # 4
    assert h[HIST_LABELS.index("2^10")] == 1
    assert h[HIST_LABELS.index("2^30+")] == 2


@pytest.mark.parametrize("trial", range(20))
def test_random_matches_naive(trial):
    rng = np.random.default_rng(trial)
    n = int(rng.integers(2, 2500))
    alphabet = int(rng.integers(1, max(2, n // 2)))
    arr = rng.integers(0, alphabet, n).astype(np.uint64)
    p1, d1 = reuse_distances(arr)
    p2, d2 = reuse_distances_naive(arr)
    assert np.array_equal(p1, p2)
    assert np.array_equal(d1, d2)


def test_real_trace_matches_naive():
    spec = LayerSpec(KIND_POOL_MAX, (1, 2, 9, 9), {"window": 3, "stride": 2})
    tr = trace_layer(spec, seed=0)
    p1, d1 = reuse_distances(tr.addrs)
    p2, d2 = reuse_distances_naive(tr.addrs)
    assert np.array_equal(p1, p2) and np.array_equal(d1, d2)


def test_fc_reuse_distances_closed_form():
    # i-outer nest: every input-element reuse sees exactly 2n+1 distinct
    # elements (the rest of x, one full weight row span, y, bias)
    n, m = 12, 6
    spec = LayerSpec(KIND_FC, (1, n), {"in_features": n, "out_features": m})
    tr = trace_layer(spec, seed=1)
    _, d = reuse_distances(tr.addrs)
    assert d.size == (m - 1) * n
    assert np.all(d == 2 * n + 1)


def test_memacc_counts_first_touches_and_writes():
    spec = LayerSpec(KIND_LRN, (1, 4, 3, 3), {"local_size": 3})
    tr = trace_layer(spec, seed=2)
    # window re-reads all hit the buffer: traffic = compulsory reads + writes
    assert memacc_from_trace(tr) == 4 * 9 + 4 * 9
    # with a 1-element buffer every distinct-window re-read misses too
    assert memacc_from_trace(tr, buffer_elems=1) > 72
