"""Microbenchmark configuration tables: seven configurations per layer kind.

Cfg A-C are normal configurations copied from layers of the shipped macro
networks (the avg-unpool table reuses the max-unpool shapes with the mode
flipped, since no shipped network carries an avg-unpool layer).  Cfg D is a
minimal stress case.  Cfg E-G are extreme-large configurations designed
against the published characteristic targets: conv F lands on ~8e12
operations at an op/access ratio above 30, conv G's weight working set
exceeds 2^30 elements, fc F is a large sparse layer at density 0.0195
(op/access ~0.039), and max-unpool G uses an extreme window so its operation
count drops below the normal configurations.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..types import (
    ALL_KINDS,
    KIND_BN,
    KIND_CONV,
    KIND_DECONV,
    KIND_FC,
    KIND_LRN,
    KIND_LSTM,
    KIND_POOL_AVG,
    KIND_POOL_MAX,
    KIND_RELU,
    KIND_SIGMOID,
    KIND_UNPOOL_AVG,
    KIND_UNPOOL_MAX,
    ConfigClass,
    LayerSpec,
    SpecError,
)
from .networks import macro_networks, nth_of_kind

REGISTRY_VERSION = "1"

FC_F_DENSITY = 0.0195

# (network, occurrence of the kind within it) for each normal configuration.
_NORMAL_SOURCES: dict[str, list[tuple[str, int]]] = {
    KIND_CONV: [("lenet5", 1), ("vgg16", 1), ("alexnet", 1)],
    KIND_POOL_AVG: [("lenet5", 0), ("lenet5", 1), ("resnet50", 0)],
    KIND_POOL_MAX: [("alexnet", 0), ("vgg16", 4), ("alexnet", 2)],
    KIND_FC: [("lenet5", 1), ("alexnet", 2), ("vgg16", 0)],
    KIND_RELU: [("alexnet", 0), ("resnet50", 0), ("vgg16", 0)],
    KIND_SIGMOID: [("lenet5", 0), ("lenet5", 1), ("lenet5", 2)],
    KIND_LRN: [("alexnet", 0), ("alexnet", 1), ("deepface", 0)],
    KIND_BN: [("resnet50", 0), ("resnet50", 5), ("resnet50", 14)],
    KIND_DECONV: [("deconvnet", 0), ("deconvnet", 1), ("deconvnet", 7)],
    KIND_UNPOOL_MAX: [("deconvnet", 0), ("deconvnet", 1), ("deconvnet", 2)],
    KIND_LSTM: [("rnn", 0), ("s2vt", 0), ("fcln", 0)],
}


def _conv(shape, co, k, s=1, p=0, sparsity=1.0):
    return LayerSpec(KIND_CONV, shape, {"out_channels": co, "kernel": k, "stride": s, "pad": p},
                     sparsity=sparsity)


def _deconv(shape, co, k, s=1, p=0):
    return LayerSpec(KIND_DECONV, shape, {"out_channels": co, "kernel": k, "stride": s, "pad": p})


def _pool(kind, shape, w, s):
    return LayerSpec(kind, shape, {"window": w, "stride": s})


def _fc(n, m, batch=1, sparsity=1.0):
    return LayerSpec(KIND_FC, (batch, n), {"in_features": n, "out_features": m},
                     sparsity=sparsity)


def _lstm(insz, hidden, steps):
    return LayerSpec(KIND_LSTM, (1, insz), {"hidden": hidden, "steps": steps})


_EXTREME: dict[str, dict[str, LayerSpec]] = {
    KIND_CONV: {
        "D": _conv((1, 1, 4, 4), 1, 2),
        "E": _conv((1, 3, 20000, 20000), 3, 3, 1, 1),
        "F": _conv((1, 8, 125000, 125000), 8, 2),
        "G": _conv((1, 1024, 64, 64), 1024, 33),
    },
    KIND_POOL_AVG: {
        "D": _pool(KIND_POOL_AVG, (1, 1, 4, 4), 2, 2),
        "E": _pool(KIND_POOL_AVG, (1, 128, 2000, 2000), 2, 2),
        "F": _pool(KIND_POOL_AVG, (1, 64, 1024, 1024), 4, 4),
        "G": _pool(KIND_POOL_AVG, (1, 64, 2360, 2360), 4, 4),
    },
    KIND_POOL_MAX: {
        "D": _pool(KIND_POOL_MAX, (1, 1, 4, 4), 2, 2),
        "E": _pool(KIND_POOL_MAX, (1, 128, 2000, 2000), 2, 2),
        "F": _pool(KIND_POOL_MAX, (1, 64, 1024, 1024), 4, 4),
        "G": _pool(KIND_POOL_MAX, (1, 64, 2360, 2360), 4, 4),
    },
    KIND_FC: {
        "D": _fc(8, 4),
        "E": _fc(16384, 16384),
        "F": _fc(100000, 100000, sparsity=FC_F_DENSITY),
        "G": _fc(65536, 65536),
    },
    KIND_RELU: {
        "D": LayerSpec(KIND_RELU, (1, 1, 4, 4)),
        "E": LayerSpec(KIND_RELU, (1, 64, 2048, 2048)),
        "F": LayerSpec(KIND_RELU, (1, 256, 1024, 1024)),
        "G": LayerSpec(KIND_RELU, (1, 512, 1448, 1448)),
    },
    KIND_SIGMOID: {
        "D": LayerSpec(KIND_SIGMOID, (1, 1, 4, 4)),
        "E": LayerSpec(KIND_SIGMOID, (1, 64, 2048, 2048)),
        "F": LayerSpec(KIND_SIGMOID, (1, 256, 1024, 1024)),
        "G": LayerSpec(KIND_SIGMOID, (1, 512, 1448, 1448)),
    },
    KIND_LRN: {
        "D": LayerSpec(KIND_LRN, (1, 4, 2, 2), {"local_size": 3}),
        "E": LayerSpec(KIND_LRN, (1, 256, 1024, 1024), {"local_size": 5}),
        "F": LayerSpec(KIND_LRN, (1, 4096, 256, 256), {"local_size": 5}),
        "G": LayerSpec(KIND_LRN, (1, 1024, 724, 724), {"local_size": 5}),
    },
    KIND_BN: {
        "D": LayerSpec(KIND_BN, (1, 2, 2, 2)),
        "E": LayerSpec(KIND_BN, (1, 256, 1024, 1024)),
        "F": LayerSpec(KIND_BN, (1, 4096, 256, 256)),
        "G": LayerSpec(KIND_BN, (1, 1024, 724, 724)),
    },
    KIND_DECONV: {
        "D": _deconv((1, 1, 2, 2), 1, 2, 2),
        "E": _deconv((1, 128, 128, 128), 128, 3, 1, 1),
        "F": _deconv((1, 256, 256, 256), 256, 5, 1, 2),
        "G": _deconv((1, 512, 512, 512), 512, 3, 1, 1),
    },
    KIND_UNPOOL_AVG: {
        "D": LayerSpec(KIND_UNPOOL_AVG, (1, 1, 2, 2), {"window": 2, "stride": 2}),
        "E": LayerSpec(KIND_UNPOOL_AVG, (1, 256, 1024, 1024), {"window": 2, "stride": 2}),
        "F": LayerSpec(KIND_UNPOOL_AVG, (1, 64, 2048, 2048), {"window": 2, "stride": 2}),
        "G": LayerSpec(KIND_UNPOOL_AVG, (1, 16, 1024, 1024), {"window": 8, "stride": 8}),
    },
    KIND_UNPOOL_MAX: {
        "D": LayerSpec(KIND_UNPOOL_MAX, (1, 1, 2, 2), {"window": 2, "stride": 2}),
        "E": LayerSpec(KIND_UNPOOL_MAX, (1, 256, 1024, 1024), {"window": 2, "stride": 2}),
        "F": LayerSpec(KIND_UNPOOL_MAX, (1, 64, 2048, 2048), {"window": 2, "stride": 2}),
        "G": LayerSpec(KIND_UNPOOL_MAX, (1, 1, 256, 256), {"window": 256, "stride": 256}),
    },
    KIND_LSTM: {
        "D": _lstm(4, 4, 2),
        "E": _lstm(1024, 1024, 64),
        "F": _lstm(4096, 4096, 32),
        "G": _lstm(2048, 2048, 256),
    },
}


def config_table(kind: str) -> list[tuple[ConfigClass, LayerSpec]]:
    """The seven (ConfigClass, LayerSpec) configurations of a layer kind."""
    if kind not in ALL_KINDS:
        raise SpecError(f"unknown layer kind {kind!r}")
    nets = macro_networks()
    if kind == KIND_UNPOOL_AVG:
        sources = _NORMAL_SOURCES[KIND_UNPOOL_MAX]
        normals = [
            nth_of_kind(nets[net], KIND_UNPOOL_MAX, occ)[1].with_(kind=KIND_UNPOOL_AVG)
            for net, occ in sources
        ]
    else:
        normals = [
            nth_of_kind(nets[net], kind, occ)[1] for net, occ in _NORMAL_SOURCES[kind]
        ]
    table = []
    for label, spec in zip(("A", "B", "C"), normals):
        table.append((ConfigClass(label), spec))
    for label in ("D", "E", "F", "G"):
        table.append((ConfigClass(label), _EXTREME[kind][label]))
    return table


@dataclass(frozen=True)
class MicroBenchmark:
    """One runnable/characterizable micro workload."""

    bench_id: str
    kind: str
    config: str
    spec: LayerSpec
    variant: str = "dense"

    @property
    def executable(self) -> bool:
        return self.config in ("A", "B", "C", "D")


MICRO_VARIANT_DENSITY = 0.25
VARIANT_KINDS = (KIND_CONV, KIND_FC)  # kinds that ship sparse/fx16 models
VARIANT_CONFIGS = ("A", "B", "C", "D")


def micro_benchmarks(include_variants: bool = True) -> list[MicroBenchmark]:
    """Deterministically ordered list of all micro benchmarks."""
    out = []
    for kind in ALL_KINDS:
        for cfg, spec in config_table(kind):
            out.append(MicroBenchmark(f"micro/{kind}/{cfg.label}", kind, cfg.label, spec))
    if include_variants:
        for kind in VARIANT_KINDS:
            table = dict((c.label, s) for c, s in config_table(kind))
            for label in VARIANT_CONFIGS:
                spec = table[label]
                sparse = spec.with_(sparsity=MICRO_VARIANT_DENSITY)
                out.append(MicroBenchmark(
                    f"micro/{kind}/{label}+sparse", kind, label, sparse, "sparse"))
                fx = spec.with_(precision="fx16")
                out.append(MicroBenchmark(
                    f"micro/{kind}/{label}+fx16", kind, label, fx, "fx16"))
    return out
