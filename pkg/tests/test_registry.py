"""Registry invariants: configuration tables, macro descriptors, netspec IO."""

import json

import pytest

from nnbench.kernels import output_shape
from nnbench.registry import config_table, macro_networks, micro_benchmarks
from nnbench.registry.netspec import (
    NetspecError,
    descriptor_from_obj,
    descriptor_to_obj,
    load_netspec,
    save_netspec,
    specs_dir,
    validate_netspec,
)
from nnbench.registry.networks import nth_of_kind
from nnbench.types import (
    ALL_KINDS,
    KIND_CONV,
    KIND_FC,
    KIND_LRN,
    KIND_POOL_MAX,
    KIND_UNPOOL_AVG,
    KIND_UNPOOL_MAX,
    SpecError,
)


def test_config_table_counts():
    for kind in ALL_KINDS:
        table = config_table(kind)
        assert len(table) == 7
        labels = [c.label for c, _ in table]
        assert labels == list("ABCDEFG")
        classes = [c.size_class for c, _ in table]
        assert classes.count("normal") == 3
        assert classes.count("extreme_small") == 1
        assert classes.count("extreme_large") == 3


def test_config_table_unknown_kind():
    with pytest.raises(SpecError, match="unknown layer kind"):
        config_table("softmax")


def test_conv_cfg_b_is_vgg_second_conv():
    table = dict((c.label, s) for c, s in config_table(KIND_CONV))
    vgg = macro_networks()["vgg16"]
    _, conv1_2 = nth_of_kind(vgg, KIND_CONV, 1)
    assert table["B"] == conv1_2
    assert table["B"].input_shape == (1, 64, 224, 224)
    assert table["B"].hp["out_channels"] == 64


def test_normal_configs_appear_verbatim_in_macro_nets():
    nets = macro_networks()
    for kind in ALL_KINDS:
        if kind == KIND_UNPOOL_AVG:
            continue  # mode-flipped from the max-unpool shapes (documented)
        for cfg, spec in config_table(kind):
            if cfg.size_class != "normal":
                continue
            found = any(spec == layer for net in nets.values() for layer in net.layers)
            assert found, f"{kind} Cfg {cfg.label} not found verbatim"
    # the avg-unpool normals match max-unpool layers modulo the mode
    for cfg, spec in config_table(KIND_UNPOOL_AVG):
        if cfg.size_class != "normal":
            continue
        flipped = spec.with_(kind=KIND_UNPOOL_MAX)
        assert any(flipped == layer for net in nets.values() for layer in net.layers)


def test_all_configs_have_valid_output_shapes():
    for kind in ALL_KINDS:
        for _, spec in config_table(kind):
            shape = output_shape(spec)
            assert all(d >= 1 for d in shape)


def test_micro_benchmark_list_deterministic():
    a = micro_benchmarks()
    b = micro_benchmarks()
    assert [x.bench_id for x in a] == [x.bench_id for x in b]
    assert len(a) == 12 * 7 + 2 * 4 * 2  # base configs + conv/fc sparse+fx16 variants
    exec_count = sum(x.executable for x in a)
    assert exec_count == 12 * 4 + 2 * 4 * 2  # A-D executable, E-G analytic-only


def test_fc_f_is_sparse_design_target():
    table = dict((c.label, s) for c, s in config_table(KIND_FC))
    assert table["F"].sparsity == pytest.approx(0.0195)


def test_all_shipped_netspecs_validate_and_match_builders(tmp_path):
    nets = macro_networks()
    assert len(nets) == 14  # 11 networks + 3 sparse variants
    for name, desc in nets.items():
        validate_netspec(desc)
        path = specs_dir() / f"{name}.json"
        assert path.exists(), f"specs/{name}.json not shipped"
        loaded = load_netspec(path)
        assert loaded.layers == desc.layers
        assert loaded.edges == desc.edges
        assert loaded.stage_breaks == desc.stage_breaks
        assert loaded.switch_sources == desc.switch_sources


def test_alexnet_layer_census():
    alex = macro_networks()["alexnet"]
    kinds = [s.kind for s in alex.layers]
    assert kinds.count(KIND_CONV) == 5
    assert kinds.count(KIND_FC) == 3
    assert kinds.count(KIND_LRN) == 2
    assert kinds.count(KIND_POOL_MAX) == 3


def test_netspec_roundtrip(tmp_path):
    desc = macro_networks()["lenet5"]
    p = tmp_path / "lenet5.json"
    save_netspec(desc, p)
    loaded = load_netspec(p)
    assert loaded.layers == desc.layers
    assert loaded.name == desc.name
    assert loaded.executable == desc.executable


def test_netspec_rejects_zero_channels(tmp_path):
    obj = descriptor_to_obj(macro_networks()["lenet5"])
    obj["layers"][0]["hyperparams"]["out_channels"] = 0
    with pytest.raises(NetspecError, match=r"\$\.layers\[0\]"):
        descriptor_from_obj(obj)


def test_netspec_rejects_shape_incompatible_chain():
    obj = descriptor_to_obj(macro_networks()["lenet5"])
    obj["layers"][1]["input_shape"] = [1, 20, 23, 23]
    with pytest.raises(NetspecError, match="does not compose"):
        descriptor_from_obj(obj)


def test_netspec_rejects_bad_version():
    obj = descriptor_to_obj(macro_networks()["lenet5"])
    obj["netspec_version"] = 2
    with pytest.raises(NetspecError, match="netspec_version"):
        descriptor_from_obj(obj)


def test_netspec_rejects_backward_edge():
    obj = descriptor_to_obj(macro_networks()["lenet5"])
    obj["edges"] = [{"from": 3, "to": 1}]
    with pytest.raises(NetspecError, match="forward"):
        descriptor_from_obj(obj)


def test_netspec_validates_against_schema():
    from nnbench.report import load_schema, validate_schema

    schema = load_schema("netspec")
    for name in ("lenet5", "deconvnet", "faster_rcnn"):
        with open(specs_dir() / f"{name}.json", "r", encoding="utf-8") as f:
            validate_schema(json.load(f), schema)


def test_sparse_variants_carry_density():
    nets = macro_networks()
    for base in ("lenet5", "alexnet", "vgg16"):
        sp = nets[f"{base}_sparse"]
        assert sp.variant == "sparse"
        for spec in sp.layers:
            if spec.kind in (KIND_CONV, KIND_FC):
                assert spec.sparsity == 0.75
            else:
                assert spec.sparsity == 1.0


def test_deconvnet_switch_wiring():
    d = macro_networks()["deconvnet"]
    assert len(d.switch_sources) == 5
    for unpool_idx, pool_idx in d.switch_sources.items():
        assert d.layers[unpool_idx].kind == KIND_UNPOOL_MAX
        assert d.layers[pool_idx].kind == KIND_POOL_MAX
        assert output_shape(d.layers[pool_idx]) == d.layers[unpool_idx].input_shape
