"""Core value types shared by the registry, kernels, tracer and harness."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

# Layer kinds, in the canonical slot order used by feature vectors and reports.
KIND_CONV = "conv"
KIND_POOL_AVG = "pool_avg"
KIND_POOL_MAX = "pool_max"
KIND_FC = "fc"
KIND_RELU = "relu"
KIND_SIGMOID = "sigmoid"
KIND_LRN = "lrn"
KIND_BN = "bn"
KIND_DECONV = "deconv"
KIND_UNPOOL_AVG = "unpool_avg"
KIND_UNPOOL_MAX = "unpool_max"
KIND_LSTM = "lstm"

ALL_KINDS: tuple[str, ...] = (
    KIND_CONV,
    KIND_POOL_AVG,
    KIND_POOL_MAX,
    KIND_FC,
    KIND_RELU,
    KIND_SIGMOID,
    KIND_LRN,
    KIND_BN,
    KIND_DECONV,
    KIND_UNPOOL_AVG,
    KIND_UNPOOL_MAX,
    KIND_LSTM,
)

PRECISIONS = ("fp32", "fx16")
VARIANTS = ("dense", "sparse", "fx16")

MAX_ELEMS = 2**64 - 1


class SpecError(ValueError):
    """A layer or network description violates its contract."""


def check_shape(dims) -> tuple[int, ...]:
    """Validate tensor extents: positive ints whose product fits in u64."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise SpecError("empty shape")
    total = 1
    for d in dims:
        if d < 1:
            raise SpecError(f"non-positive extent {d} in shape {dims}")
        total *= d
    if total > MAX_ELEMS:
        raise SpecError(f"shape {dims} exceeds u64 element range")
    return dims


def elem_count(dims) -> int:
    n = 1
    for d in dims:
        n *= int(d)
    return n


@dataclass(frozen=True)
class LayerSpec:
    """One parameterized layer workload.

    `input_shape` is (N, C, H, W) for 2-D spatial kinds, (..., n) for fc,
    any shape for activations, and the per-step (B, I) shape for lstm
    (the full sequence tensor is (steps, B, I)).
    `hp` carries the kind-specific hyperparameters, e.g. for conv:
    out_channels, kernel, stride, pad.
    """

    kind: str
    input_shape: tuple[int, ...]
    hp: dict = field(default_factory=dict)
    precision: str = "fp32"
    sparsity: float = 1.0

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise SpecError(f"unknown layer kind {self.kind!r}")
        object.__setattr__(self, "input_shape", check_shape(self.input_shape))
        if self.precision not in PRECISIONS:
            raise SpecError(f"unknown precision {self.precision!r}")
        if not (0.0 < self.sparsity <= 1.0):
            raise SpecError(f"sparsity {self.sparsity} outside (0, 1]")
        if self.sparsity < 1.0 and self.kind not in (KIND_CONV, KIND_FC):
            raise SpecError(f"sparsity < 1 is only defined for conv/fc, not {self.kind}")

    def with_(self, **kw) -> "LayerSpec":
        return replace(self, **kw)

    def hp_get(self, key, default=None):
        return self.hp.get(key, default)


CONFIG_LABELS = ("A", "B", "C", "D", "E", "F", "G")
_LABEL_CLASS = {
    "A": "normal",
    "B": "normal",
    "C": "normal",
    "D": "extreme_small",
    "E": "extreme_large",
    "F": "extreme_large",
    "G": "extreme_large",
}


@dataclass(frozen=True)
class ConfigClass:
    """Configuration label A..G and its size class."""

    label: str

    def __post_init__(self):
        if self.label not in _LABEL_CLASS:
            raise SpecError(f"unknown config label {self.label!r}")

    @property
    def size_class(self) -> str:
        return _LABEL_CLASS[self.label]


@dataclass(frozen=True)
class SkipEdge:
    """Elementwise residual edge: output of `src` is added to output of `dst`."""

    src: int
    dst: int
    name: str = ""


@dataclass
class NetworkDescriptor:
    """A full network: ordered layers plus optional skip edges.

    `stage_breaks[i]` True means layer i starts a new schedule stage whose
    input shape is not required to match layer i-1's output (used for the
    fixed-schedule approximations of region-proposal / decoding stages).
    `switch_sources` maps an unpool layer index to the pool layer index
    providing its argmax switches.
    Executable descriptors must be single-stage.
    """

    name: str
    layers: list[LayerSpec]
    edges: list[SkipEdge] = field(default_factory=list)
    variant: str = "dense"
    executable: bool = False
    stage_breaks: set[int] = field(default_factory=set)
    switch_sources: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SpecError(f"unknown variant {self.variant!r}")
        if not self.layers:
            raise SpecError(f"network {self.name!r} has no layers")
        if self.executable and self.stage_breaks:
            raise SpecError(f"executable network {self.name!r} cannot have stage breaks")


@dataclass
class ModelParams:
    """Deterministic synthetic parameters for one layer or network.

    tensors[layer_idx][role] -> float32 ndarray; regenerating with the same
    seed is bit-identical.  `densities[layer_idx]` records the requested
    weight density after sparsification.
    """

    seed: int
    tensors: dict[int, dict[str, np.ndarray]]
    densities: dict[int, float] = field(default_factory=dict)

    def layer(self, idx: int) -> dict[str, np.ndarray]:
        return self.tensors.get(idx, {})


@dataclass
class RunResult:
    """One backend execution of one benchmark."""

    benchmark: str
    backend: str
    status: str  # ok | skipped | failed
    wall_time: Optional[float] = None
    energy: Optional[float] = None
    mse_vs_golden: Optional[float] = None
    ops: Optional[float] = None
    repetitions: int = 0
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "backend": self.backend,
            "status": self.status,
            "wall_time": self.wall_time,
            "energy": self.energy,
            "mse_vs_golden": self.mse_vs_golden,
            "ops": self.ops,
            "repetitions": self.repetitions,
            "note": self.note,
        }
