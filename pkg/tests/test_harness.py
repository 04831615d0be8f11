"""Backend harness: goldens, fusion, timing contract, capability handling,
the naive backend, and the out-of-process worker."""

import numpy as np
import pytest

from nnbench.harness import (
    BackendError,
    ConstantPowerModel,
    EnergyProbe,
    GoldenStore,
    NaiveBackend,
    ReferenceBackend,
    all_benchmarks,
    filter_benchmarks,
    load_backend,
    materialize,
    run_benchmark,
    run_suite,
)
from nnbench.kernels import forward_layer, mse
from nnbench.registry.params import instantiate_params
from nnbench.types import KIND_CONV, KIND_POOL_MAX, KIND_RELU, LayerSpec

REF = ReferenceBackend()


def bench(bid):
    matches = [b for b in all_benchmarks("all") if b.bench_id == bid]
    assert matches, bid
    return matches[0]


def test_descriptor_contract():
    d = REF.descriptor()
    assert len(d.supported_kinds) == 12
    assert d.supports_fusion and d.supports_sparse


def test_reference_mse_zero_micro(golden_dir):
    store = GoldenStore(golden_dir)
    for bid in ("micro/relu/A", "micro/conv/D", "micro/unpool_max/A", "micro/lstm/D"):
        r = run_benchmark(REF, bench(bid), repetitions=1, warmup=0, golden_store=store)
        assert r.status == "ok"
        assert r.mse_vs_golden == 0.0


def test_fused_empty_rejected():
    with pytest.raises(Exception, match="at least one"):
        REF.forward_fused([], [], np.zeros((1, 1, 2, 2), np.float32))


def test_fused_equals_sequential_bitwise():
    conv = LayerSpec(KIND_CONV, (1, 2, 6, 6), {"out_channels": 3, "kernel": 3})
    pool = LayerSpec(KIND_POOL_MAX, (1, 3, 4, 4), {"window": 2, "stride": 2})
    p1 = instantiate_params(conv, 1).layer(0)
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (1, 2, 6, 6)).astype(np.float32)
    fused = REF.forward_fused([conv, pool], [p1, {}], x)
    seq = forward_layer(pool, {}, forward_layer(conv, p1, x).y).y
    assert np.array_equal(fused, seq)


def test_fused_conv_relu_50_random_cases():
    rng = np.random.default_rng(42)
    for _ in range(50):
        ci = int(rng.integers(1, 4))
        co = int(rng.integers(1, 4))
        h = int(rng.integers(4, 8))
        conv = LayerSpec(KIND_CONV, (1, ci, h, h), {"out_channels": co, "kernel": 3, "pad": 1})
        relu = LayerSpec(KIND_RELU, (1, co, h, h))
        params = instantiate_params(conv, int(rng.integers(0, 2**31))).layer(0)
        x = rng.uniform(-1, 1, (1, ci, h, h)).astype(np.float32)
        fused = REF.forward_fused([conv, relu], [params, {}], x)
        seq = forward_layer(relu, {}, forward_layer(conv, params, x).y).y
        assert mse(fused, seq) <= 1e-6


def test_run_benchmark_median_and_power_model(golden_dir):
    r = run_benchmark(REF, bench("micro/relu/D"), repetitions=5, warmup=1,
                      golden_store=GoldenStore(golden_dir),
                      power_model=ConstantPowerModel(10.0))
    assert r.repetitions == 5
    assert r.energy == pytest.approx(10.0 * r.wall_time)


def test_energy_probe_preferred():
    class FakeProbe(EnergyProbe):
        def start(self):
            pass

        def stop(self):
            return 42.0

    r = run_benchmark(REF, bench("micro/relu/D"), repetitions=1, warmup=0,
                      probe=FakeProbe())
    assert r.energy == 42.0


def test_energy_absent_without_probe_or_model():
    r = run_benchmark(REF, bench("micro/relu/D"), repetitions=1, warmup=0)
    assert r.energy is None


def test_extreme_configs_skipped():
    r = run_benchmark(REF, bench("micro/conv/F"), repetitions=1, warmup=0)
    assert r.status == "skipped"
    assert "analytic" in r.note


def test_naive_backend_matches_reference_small(golden_dir):
    store = GoldenStore(golden_dir)
    nv = NaiveBackend()
    for bid in ("micro/conv/D", "micro/fc/D", "micro/pool_avg/D",
                "micro/pool_max/D", "micro/relu/D", "micro/sigmoid/D"):
        r = run_benchmark(nv, bench(bid), repetitions=1, warmup=0, golden_store=store)
        assert r.status == "ok"
        assert r.mse_vs_golden <= 1e-12, bid


def test_naive_capability_gap_is_skip():
    r = run_benchmark(NaiveBackend(), bench("micro/bn/D"), repetitions=1, warmup=0)
    assert r.status == "skipped"
    assert "not support" in r.note.replace("does not", "not")


def test_run_suite_deterministic_outputs(golden_dir):
    store = GoldenStore(golden_dir)
    kwargs = dict(suite="micro", repetitions=1, warmup=0, golden_store=store,
                  filters={"kind": "sigmoid"})
    r1 = run_suite(REF, **kwargs)
    r2 = run_suite(REF, **kwargs)
    assert [x.benchmark for x in r1] == [x.benchmark for x in r2]
    assert [x.mse_vs_golden for x in r1] == [x.mse_vs_golden for x in r2]
    assert all(x.mse_vs_golden == 0.0 for x in r1 if x.status == "ok")


def test_fx16_run_close_but_not_equal_to_fp32_golden(golden_dir):
    fx = bench("micro/fc/A+fx16")
    dense = bench("micro/fc/A")
    seed = 2024
    params_fx, x, _ = materialize(fx, seed)
    params_fp, x2, _ = materialize(dense, seed)
    # same data seed stream: inputs agree, weights differ by quantization
    y_fx = REF.forward(fx.spec, params_fx.layer(0), x)
    y_fp = REF.forward(dense.spec.with_(precision="fp32"), params_fp.layer(0), x2)
    err = mse(y_fp, y_fx)
    assert 0.0 < err < 1e-4


def test_plugin_loading_paths():
    be = load_backend("nnbench.harness:NaiveBackend")
    assert be.descriptor().name == "naive"
    with pytest.raises(KeyError):
        load_backend("does-not-exist")
    with pytest.raises(BackendError):
        load_backend("nnbench.harness:NoSuchClass")
    with pytest.raises(BackendError):
        load_backend("no.such.module:Thing")


def test_worker_backend_bitwise_equal(golden_dir):
    w = load_backend("worker:reference")
    try:
        d = w.descriptor()
        assert d.name == "worker:reference"
        assert len(d.supported_kinds) == 12
        b = bench("micro/conv/D")
        params, x, _ = materialize(b, 5)
        y_w = w.forward(b.spec, params.layer(0), x)
        y_r = REF.forward(b.spec, params.layer(0), x)
        assert np.array_equal(y_w, y_r)
        # fused through the pipe
        conv = LayerSpec(KIND_CONV, (1, 1, 4, 4), {"out_channels": 2, "kernel": 2})
        relu = LayerSpec(KIND_RELU, (1, 2, 3, 3))
        p = instantiate_params(conv, 1).layer(0)
        xx = np.ones((1, 1, 4, 4), np.float32)
        y1 = w.forward_fused([conv, relu], [p, {}], xx)
        y2 = REF.forward_fused([conv, relu], [p, {}], xx)
        assert np.array_equal(y1, y2)
        # switches cross the pipe for max-unpool
        ub = bench("micro/unpool_max/D")
        uparams, ux, usw = materialize(ub, 5)
        y_w = w.forward(ub.spec, uparams.layer(0), ux, switches=usw)
        y_r = REF.forward(ub.spec, uparams.layer(0), ux, switches=usw)
        assert np.array_equal(y_w, y_r)
    finally:
        w.finalize()


def test_worker_error_propagates():
    w = load_backend("worker:naive")
    try:
        b = bench("micro/lrn/D")
        params, x, _ = materialize(b, 1)
        from nnbench.harness import UnsupportedBenchmark

        with pytest.raises(UnsupportedBenchmark):
            w.forward(b.spec, params.layer(0), x)
    finally:
        w.finalize()


def test_filter_benchmarks():
    benches = all_benchmarks("all")
    assert all(b.layer_kind == "conv" for b in
               filter_benchmarks(benches, kind="conv") if b.kind == "micro")
    assert all(b.config == "A" for b in
               filter_benchmarks(benches, config="A") if b.kind == "micro")
    sparse = filter_benchmarks(benches, variant="sparse")
    assert sparse and all(b.variant == "sparse" for b in sparse)
