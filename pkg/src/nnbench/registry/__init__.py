"""Benchmark registry: micro configuration tables, macro network descriptors,
synthetic parameters, and the netspec file format."""

from .configs import config_table, micro_benchmarks, MicroBenchmark, REGISTRY_VERSION
from .networks import macro_networks, macro_benchmarks, MacroBenchmark
from .params import instantiate_params, sparsify, quantize_fx16
from .netspec import load_netspec, save_netspec, validate_netspec, NetspecError

__all__ = [
    "config_table",
    "micro_benchmarks",
    "MicroBenchmark",
    "REGISTRY_VERSION",
    "macro_networks",
    "macro_benchmarks",
    "MacroBenchmark",
    "instantiate_params",
    "sparsify",
    "quantize_fx16",
    "load_netspec",
    "save_netspec",
    "validate_netspec",
    "NetspecError",
]
