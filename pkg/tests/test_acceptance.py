"""Acceptance suite: one test per criterion, each printing a pass line.

Run `pytest -s tests/test_acceptance.py` to see the per-criterion report.
Criteria with stated wall-clock bounds assert them.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from conftest import rel_close
from test_kernels import ALL_ORACLE_KINDS, random_case

from nnbench.analytic import analyze
from nnbench.characterize import (
    memacc_from_trace,
    reuse_distances,
    reuse_distances_naive,
)
from nnbench.cli import main as cli_main
from nnbench.diversity import correlation_matrix, feature_vector, hierarchical_cluster
from nnbench.harness import (
    GoldenStore,
    NaiveBackend,
    ReferenceBackend,
    all_benchmarks,
    run_benchmark,
)
from nnbench.kernels import forward_layer, generate_input, mse, run_network
from nnbench.registry import config_table
from nnbench.registry.networks import macro_networks
from nnbench.registry.params import instantiate_params
from nnbench.scoring import ScoreInput, comparison_table, score_results, synthesized_score
from nnbench.trace import DEFAULT_EVENT_BUDGET, predicted_events, simulate_predictor, trace_layer
from nnbench.types import ALL_KINDS, LayerSpec


def _report(num, desc, elapsed, limit=None):
    bound = f" ({elapsed:.1f}s" + (f" < {limit}s)" if limit else ")")
    print(f"\n[criterion {num:2d}] PASS {desc}{bound}")


def cfg(kind, label):
    return dict((c.label, s) for c, s in config_table(kind))[label]


def test_criterion_1_kernel_correctness():
    t0 = time.time()
    for kind in ALL_ORACLE_KINDS:
        rng = np.random.default_rng(hash(kind) % 2**32)
        for i in range(100):
            got, want = random_case(kind, rng)
            assert got.shape == want.shape, (kind, i)
            assert rel_close(got, want, tol=1e-6), (kind, i)
    elapsed = time.time() - t0
    assert elapsed < 60
    _report(1, "12 kernels match independent oracles on 100 random instances each",
            elapsed, 60)


def test_criterion_2_reuse_distance_exactness():
    t0 = time.time()
    checked = 0
    # exhaustive corpus: every shipped configuration whose trace holds <= 1e5
    # access events
    for kind in ALL_KINDS:
        for c, spec in config_table(kind):
            prof = analyze(spec)
            if prof.touches > 100_000 or prof.events > DEFAULT_EVENT_BUDGET:
                continue
            tr = trace_layer(spec, seed=20)
            p1, d1 = reuse_distances(tr.addrs)
            p2, d2 = reuse_distances_naive(tr.addrs)
            assert np.array_equal(p1, p2) and np.array_equal(d1, d2), (kind, c.label)
            checked += 1
    assert checked >= 15
    # 200 random traces
    rng = np.random.default_rng(2024)
    for trial in range(200):
        n = int(rng.integers(2, 2000))
        alphabet = int(rng.integers(1, max(2, n // 2)))
        arr = rng.integers(0, alphabet, n).astype(np.uint64)
        p1, d1 = reuse_distances(arr)
        p2, d2 = reuse_distances_naive(arr)
        assert np.array_equal(p1, p2) and np.array_equal(d1, d2), trial
    elapsed = time.time() - t0
    assert elapsed < 30
    _report(2, f"fast reuse distances equal the quadratic oracle "
               f"({checked} shipped traces + 200 random)", elapsed, 30)


def test_criterion_3_trace_analytic_consistency():
    t0 = time.time()
    kinds = ("conv", "fc", "pool_avg", "pool_max", "relu", "sigmoid", "bn")
    checked = 0
    for kind in kinds:
        for c, spec in config_table(kind):
            if predicted_events(spec) > DEFAULT_EVENT_BUDGET:
                continue
            prof = analyze(spec)
            tr = trace_layer(spec, seed=21)
            assert tr.op_count == prof.ops, (kind, c.label)
            assert memacc_from_trace(tr) == prof.mem_acc, (kind, c.label)
            checked += 1
    elapsed = time.time() - t0
    assert elapsed < 120
    _report(3, f"traced MemAcc/Ops equal closed forms on {checked} budgeted configs",
            elapsed, 120)


def test_criterion_4_extreme_config_targets():
    t0 = time.time()
    conv_f = analyze(cfg("conv", "F"))
    assert abs(conv_f.ops - 8e12) <= 0.10 * 8e12
    assert conv_f.op_mem >= 30.0
    fc_f = analyze(cfg("fc", "F"))
    assert fc_f.op_mem <= 0.05
    bounds = [analyze(s).redist_bound for c, s in config_table("conv")
              if c.size_class == "extreme_large"]
    assert any(b is not None and b > 2**30 for b in bounds)
    elapsed = time.time() - t0
    _report(4, f"conv F ops={conv_f.ops:.3g} op_mem={conv_f.op_mem:.1f}; "
               f"fc F op_mem={fc_f.op_mem:.4f}; conv extreme reuse bound > 2^30",
            elapsed)


def test_criterion_5_control_characteristic_direction():
    t0 = time.time()
    _, mpr_max = simulate_predictor(trace_layer(cfg("pool_max", "A"), seed=22))
    _, mpr_avg = simulate_predictor(trace_layer(cfg("pool_avg", "A"), seed=22))
    assert mpr_avg == 0.0
    assert mpr_max > 0.0
    assert mpr_max >= 4 * mpr_avg
    elapsed = time.time() - t0
    assert elapsed < 10
    _report(5, f"MPR(pool_max A)={mpr_max:.3f} >= 4 x MPR(pool_avg A)={mpr_avg}",
            elapsed, 10)


def test_criterion_6_memory_characteristic_direction():
    t0 = time.time()
    _, d_conv = reuse_distances(trace_layer(cfg("conv", "A"), seed=23).addrs)
    _, d_fc = reuse_distances(trace_layer(cfg("fc", "A"), seed=23).addrs)
    conv_avg, fc_avg = float(d_conv.mean()), float(d_fc.mean())
    assert conv_avg >= 10 * fc_avg
    elapsed = time.time() - t0
    assert elapsed < 60
    _report(6, f"redist_avg(conv A)={conv_avg:.0f} >= 10 x redist_avg(fc A)={fc_avg:.0f}",
            elapsed, 60)


def test_criterion_7_clustering_reproduction():
    t0 = time.time()
    nets = macro_networks()
    vecs = [feature_vector(d) for d in nets.values()]
    tree = hierarchical_cluster(vecs)
    for base in ("lenet5", "alexnet", "vgg16"):
        m = tree.first_merge_of(f"{base}_sparse")
        assert m.members == tuple(sorted((base, f"{base}_sparse"))), base
    matrix = correlation_matrix(vecs)
    n = len(vecs)
    for i in range(n):
        assert matrix[i][i] == 1.0
        for j in range(n):
            assert matrix[i][j] == matrix[j][i]
    elapsed = time.time() - t0
    assert elapsed < 5
    _report(7, "sparse variants first-merge with their dense counterparts; "
               "correlation symmetric, unit diagonal", elapsed, 5)


def test_criterion_8_methodology_loop(golden_dir):
    t0 = time.time()
    store = GoldenStore(golden_dir)
    ref = ReferenceBackend()
    ran = 0
    for bench in all_benchmarks("all"):
        if not bench.executable:
            continue
        r = run_benchmark(ref, bench, repetitions=1, warmup=0, golden_store=store)
        assert r.status == "ok", (bench.bench_id, r.note)
        assert r.mse_vs_golden == 0.0, bench.bench_id
        ran += 1
    # lenet5 end-to-end forward under 5 s
    desc = macro_networks()["lenet5"]
    params = instantiate_params(desc, 1)
    x = generate_input(desc.layers[0], 1)
    t1 = time.time()
    run_network(desc, params, x)
    lenet_s = time.time() - t1
    assert lenet_s < 5.0
    # fused conv+relu equals sequential within 1e-6 MSE on 50 random cases
    rng = np.random.default_rng(8)
    for _ in range(50):
        ci, co, h = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(4, 8))
        conv = LayerSpec("conv", (1, ci, h, h), {"out_channels": co, "kernel": 3, "pad": 1})
        relu = LayerSpec("relu", (1, co, h, h))
        p = instantiate_params(conv, int(rng.integers(0, 2**31))).layer(0)
        x = rng.uniform(-1, 1, (1, ci, h, h)).astype(np.float32)
        fused = ref.forward_fused([conv, relu], [p, {}], x)
        seq = forward_layer(relu, {}, forward_layer(conv, p, x).y).y
        assert mse(fused, seq) <= 1e-6
    _report(8, f"reference backend: mse=0 on all {ran} executable benchmarks; "
               f"lenet5 forward {lenet_s:.2f}s < 5s; fused==sequential x50",
            time.time() - t0)


def test_criterion_9_scoring_algebra():
    t0 = time.time()

    def si(name, product):
        return ScoreInput(name, 1.0, 1.0, energy_j=1.0 / product, area_mm2=1.0)

    assert synthesized_score([si("a", 4.0), si("b", 9.0)]) == pytest.approx(6.0)
    base = [si("a", 4.0), si("b", 9.0)]
    doubled = [si("a", 8.0), si("b", 18.0)]
    assert synthesized_score(doubled) == pytest.approx(2 * synthesized_score(base))
    # reference vs naive on small benchmarks: speedup antisymmetry to 1e-12
    from nnbench.types import RunResult

    def results(backend, times):
        return [RunResult(f"b{i}", backend, "ok", wall_time=t, energy=2 * t,
                          mse_vs_golden=0.0, ops=1e9, repetitions=1)
                for i, t in enumerate(times)]

    cards = {
        "reference": score_results(results("reference", [0.01, 0.02, 0.4])),
        "naive": score_results(results("naive", [1.3, 0.7, 2.9])),
    }
    t_ref = comparison_table(cards, "reference")
    t_nv = comparison_table(cards, "naive")
    for i in range(3):
        ab = t_ref["backends"]["naive"]["rows"][f"b{i}"]["speedup"]
        ba = t_nv["backends"]["reference"]["rows"][f"b{i}"]["speedup"]
        assert abs(ab * ba - 1.0) <= 1e-12
    _report(9, "synthesized score {4,9} -> 6.0; GOPJ doubling doubles it; "
               "speedup antisymmetry to 1e-12", time.time() - t0)


def test_criterion_9b_reference_beats_naive(golden_dir):
    # regression floor: the reference backend is never slower than naive
    t0 = time.time()
    store = GoldenStore(golden_dir)
    ref, nv = ReferenceBackend(), NaiveBackend()
    benches = {b.bench_id: b for b in all_benchmarks("micro")}
    # sampled at sizes where the scalar-loop backend is decisively slower;
    # sub-millisecond kernels would make the ratio timing noise
    for bid in ("micro/conv/A", "micro/fc/B", "micro/pool_max/A", "micro/relu/A"):
        b = benches[bid]
        r_ref = run_benchmark(ref, b, repetitions=3, warmup=1, golden_store=store)
        r_nv = run_benchmark(nv, b, repetitions=1, warmup=0, golden_store=store)
        assert r_nv.wall_time / r_ref.wall_time >= 1.0, bid
    _report(9, "reference-vs-naive speedups >= 1 on the sampled micro suite",
            time.time() - t0)


def _snapshot(root: Path) -> dict[str, bytes]:
    out = {}
    for p in sorted(root.rglob("*")):
        if not p.is_file():
            continue
        rel = str(p.relative_to(root))
        # timing-derived artifacts and the timestamped manifest are exempt
        if p.name in ("manifest.json", "timings.json") or "scores" in rel.split("/"):
            continue
        if p.suffix == ".png":
            continue  # renders of the data, not data artifacts
        out[rel] = p.read_bytes()
    return out


def test_criterion_10_reproducibility(tmp_path):
    t0 = time.time()
    out = tmp_path / "fixed"
    commands = [
        ["characterize", "--kind", "conv", "--config", "A", "--out", str(out), "--no-plots"],
        ["cluster", "--out", str(out), "--no-plots"],
        ["run", "--backend", "reference", "--suite", "micro", "--kind", "sigmoid",
         "--reps", "1", "--warmup", "0", "--power-model", "10",
         "--goldens", str(tmp_path / "g"), "--out", str(out), "--no-plots"],
    ]
    for cmd in commands:
        assert cli_main(cmd) == 0
    first = _snapshot(out)
    assert first
    for cmd in commands:
        assert cli_main(cmd) == 0
    second = _snapshot(out)
    assert first.keys() == second.keys()
    diffs = [k for k in first if first[k] != second[k]]
    assert not diffs, f"non-timing artifacts changed across reruns: {diffs}"
    _report(10, f"{len(first)} non-timing artifacts byte-identical across two "
                "identical CLI runs", time.time() - t0)
