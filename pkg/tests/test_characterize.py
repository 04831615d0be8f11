"""Characteristic vectors: pattern classes, analytic targets, serialization."""

import numpy as np
import pytest

from nnbench.analytic import BUFFER_ELEMS, COM_PTT, analyze
from nnbench.characterize import (
    CharacteristicVector,
    analytic_characteristics,
    characterize,
)
from nnbench.registry import config_table
from nnbench.types import (
    ALL_KINDS,
    KIND_CONV,
    KIND_FC,
    KIND_RELU,
    LayerSpec,
)


def cfg(kind, label):
    return dict((c.label, s) for c, s in config_table(kind))[label]


def test_com_ptt_static_table_total():
    want = {
        "conv": "RD", "pool_avg": "RD", "pool_max": "RD", "fc": "RD",
        "lrn": "RD", "lstm": "RD",
        "relu": "EW", "sigmoid": "EW", "bn": "EW",
        "deconv": "EL", "unpool_avg": "EL", "unpool_max": "EL",
    }
    assert COM_PTT == want
    for kind in ALL_KINDS:
        cv = analytic_characteristics(cfg(kind, "D"))
        assert cv.com_ptt == want[kind]


def test_trivial_analytic_formulas():
    # 1x1 conv over a single element: one MAC + one bias add
    spec = LayerSpec(KIND_CONV, (1, 1, 1, 1), {"out_channels": 1, "kernel": 1})
    assert analyze(spec).ops == 3
    # fc n->m: 2nm MACs plus m bias adds, weight footprint nm (+m biases)
    spec = LayerSpec(KIND_FC, (1, 5), {"in_features": 5, "out_features": 4})
    prof = analyze(spec)
    assert prof.ops == 2 * 20 + 4
    assert prof.wgh_mem == 20 + 4


def test_conv_cfg_f_targets():
    prof = analyze(cfg(KIND_CONV, "F"))
    assert abs(prof.ops - 8e12) <= 0.10 * 8e12
    assert prof.op_mem >= 30.0


def test_fc_cfg_f_opmem():
    prof = analyze(cfg(KIND_FC, "F"))
    assert prof.op_mem <= 0.05


def test_conv_extreme_reuse_footprint_exceeds_2_30():
    bounds = [analyze(s).redist_bound for c, s in config_table(KIND_CONV)
              if c.size_class == "extreme_large"]
    assert any(b is not None and b > 2**30 for b in bounds)


def test_conv_g_streams_weights():
    prof = analyze(cfg(KIND_CONV, "G"))
    assert prof.traffic_regime == "streaming"
    assert prof.redist_bound > BUFFER_ELEMS


def test_characterize_dispatches_on_budget():
    full = characterize(cfg(KIND_RELU, "A"), seed=1)
    assert full.source == "trace"
    assert full.redist_hist is not None and full.pr is not None
    part = characterize(cfg(KIND_CONV, "F"), seed=1)
    assert part.source == "analytic"
    assert part.redist_avg is None and part.pr is None and part.mpr is None


def test_traced_equals_analytic_on_overlapping_fields():
    for kind, label in (("conv", "A"), ("fc", "A"), ("pool_avg", "A"),
                        ("relu", "A"), ("sigmoid", "A"), ("bn", "C")):
        spec = cfg(kind, label)
        cv = characterize(spec, seed=2)
        prof = analyze(spec)
        assert cv.source == "trace"
        assert cv.mem_acc == prof.mem_acc
        assert cv.ops == prof.ops
        assert (cv.in_mem, cv.out_mem, cv.wgh_mem) == (prof.in_mem, prof.out_mem, prof.wgh_mem)


def test_sparse_ops_scale_with_density():
    dense = cfg(KIND_CONV, "A")
    sparse = dense.with_(sparsity=0.25)
    od, os_ = analyze(dense).ops, analyze(sparse).ops
    bias = dense.hp["out_channels"] * 8 * 8
    assert abs((os_ - bias) - 0.25 * (od - bias)) <= 0.01 * 0.25 * (od - bias) + 2
    # the traced sparse run stays within 1% of the density-scaled count
    cv = characterize(sparse, seed=3)
    assert abs(cv.ops - os_) <= 0.01 * os_


def test_op_mem_invariant():
    for kind in ALL_KINDS:
        for _, spec in config_table(kind):
            prof = analyze(spec)
            assert prof.op_mem == pytest.approx(prof.ops / prof.mem_acc)


def test_csv_row_serializes_absent_as_empty():
    cv = analytic_characteristics(cfg(KIND_CONV, "F"))
    cv.benchmark = "micro/conv/F"
    cv.config = "F"
    row = cv.to_csv_row()
    header = CharacteristicVector.CSV_COLUMNS
    assert len(row) == len(header)
    assert row[header.index("redist_avg")] == ""
    assert row[header.index("pr")] == ""
    obj = cv.to_json_obj()
    assert obj["redist_avg"] is None and obj["mpr"] is None


def test_fc_cfg_a_histogram_concentrates():
    cv = characterize(cfg(KIND_FC, "A"), seed=1)
    hist = cv.redist_hist
    total = hist.sum()
    dominant = np.sort(hist)[::-1][:3].sum()
    assert dominant >= 0.99 * total  # <= 3 dominant log2 buckets
