"""Backend harness: the standard library interface, reference and naive
backends, timed benchmark execution and golden/MSE accounting.

A backend implements per-layer forward plus an optional fused-sequence
forward over shape descriptors and flat float32 buffers.  The harness owns
everything else: deterministic inputs and parameters, golden outputs
(produced once by the reference backend and cached on disk), median-of-N
timing after warmup discards, and the energy hook (a probe or a constant
power model; energy stays absent when neither is configured).

Capability gaps surface as skip records so partial backends can still be
scored on their supported subset; non-finite outputs are failure records.
"""

from __future__ import annotations

import importlib
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import goldens, prng
from .analytic import analyze
from .kernels import (
    AnalyticOnlyError,
    PoolSwitches,
    forward_layer,
    generate_input,
    generate_unpool_switches,
    mse,
    run_network,
)
from .registry import macro_benchmarks, micro_benchmarks
from .registry.params import instantiate_params
from .types import (
    ALL_KINDS,
    KIND_UNPOOL_MAX,
    LayerSpec,
    ModelParams,
    NetworkDescriptor,
    RunResult,
    SpecError,
)

DEFAULT_SEED = 2024


class BackendError(RuntimeError):
    """Backend failed to load or misbehaved."""


class UnsupportedBenchmark(RuntimeError):
    """Backend lacks a capability the benchmark needs (skip, not fail)."""


@dataclass
class BackendDescriptor:
    name: str
    supported_kinds: tuple[str, ...]
    supports_fusion: bool
    supports_sparse: bool
    thread_safe: bool
    area_mm2: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "supported_kinds": list(self.supported_kinds),
            "supports_fusion": self.supports_fusion,
            "supports_sparse": self.supports_sparse,
            "thread_safe": self.thread_safe,
            "area_mm2": self.area_mm2,
        }


class Backend:
    """Flat backend call contract; subclasses override the forwards."""

    def descriptor(self) -> BackendDescriptor:
        raise NotImplementedError

    def initialize(self) -> None:
        pass

    def finalize(self) -> None:
        pass

    def forward(self, spec: LayerSpec, params: dict, x: np.ndarray,
                switches: Optional[PoolSwitches] = None) -> np.ndarray:
        raise NotImplementedError

    def forward_fused(self, specs: list[LayerSpec], params: list[dict],
                      x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ReferenceBackend(Backend):
    """The bit-deterministic scalar-order kernels; source of all goldens."""

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(
            name="reference",
            supported_kinds=tuple(ALL_KINDS),
            supports_fusion=True,
            supports_sparse=True,
            thread_safe=True,
        )

    def forward(self, spec, params, x, switches=None):
        return forward_layer(spec, params, x, switches=switches).y

    def forward_fused(self, specs, params, x):
        if not specs:
            raise SpecError("fused call needs at least one layer")
        cur = x
        switches = None
        for spec, p in zip(specs, params):
            out = forward_layer(spec, p, cur, switches=switches)
            cur = out.y
            switches = out.switches or switches
        return cur


class NaiveBackend(Backend):
    """Deliberately slow scalar-loop backend used to exercise comparisons.

    Supports only the dense feed-forward kinds; everything else is reported
    as a capability gap.
    """

    KINDS = ("conv", "fc", "pool_avg", "pool_max", "relu", "sigmoid")

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(
            name="naive",
            supported_kinds=self.KINDS,
            supports_fusion=False,
            supports_sparse=True,
            thread_safe=True,
        )

    def forward(self, spec, params, x, switches=None):
        if spec.kind not in self.KINDS:
            raise UnsupportedBenchmark(f"naive backend does not support {spec.kind}")
        hp = spec.hp
        if spec.kind == "conv":
            return self._conv(x, params["weight"], params["bias"],
                              hp.get("stride", 1), hp.get("pad", 0))
        if spec.kind == "fc":
            return self._fc(x, params["weight"], params["bias"])
        if spec.kind in ("pool_avg", "pool_max"):
            return self._pool(x, hp["window"], hp.get("stride", hp["window"]),
                              spec.kind == "pool_max")
        out = np.empty_like(x)
        flat_in, flat_out = x.reshape(-1), out.reshape(-1)
        for i in range(flat_in.size):
            v = flat_in[i]
            if spec.kind == "relu":
                flat_out[i] = v if v > 0 else np.float32(0)
            else:
                flat_out[i] = np.float32(1) / (np.float32(1) + np.exp(-v))
        return out

    @staticmethod
    def _conv(x, w, bias, s, p):
        n, ci, h, wd = x.shape
        co, _, kh, kw = w.shape
        ho = (h + 2 * p - kh) // s + 1
        wo = (wd + 2 * p - kw) // s + 1
        y = np.zeros((n, co, ho, wo), dtype=np.float32)
        for nb in range(n):
            for oc in range(co):
                for oh in range(ho):
                    for ow in range(wo):
                        acc = np.float32(bias[oc])
                        for c in range(ci):
                            for r in range(kh):
                                ih = oh * s + r - p
                                if not (0 <= ih < h):
                                    continue
                                for q in range(kw):
                                    iw = ow * s + q - p
                                    if 0 <= iw < wd:
                                        acc += x[nb, c, ih, iw] * w[oc, c, r, q]
                        y[nb, oc, oh, ow] = acc
        return y

    @staticmethod
    def _fc(x, w, bias):
        m, nf = w.shape
        flat = x.reshape(-1, nf)
        y = np.zeros((flat.shape[0], m), dtype=np.float32)
        for b in range(flat.shape[0]):
            for i in range(m):
                acc = np.float32(bias[i])
                for j in range(nf):
                    acc += flat[b, j] * w[i, j]
                y[b, i] = acc
        return y.reshape(x.shape[:-1] + (m,))

    @staticmethod
    def _pool(x, k, s, is_max):
        n, c, h, w = x.shape
        ho, wo = (h - k) // s + 1, (w - k) // s + 1
        y = np.zeros((n, c, ho, wo), dtype=np.float32)
        for nb in range(n):
            for ch in range(c):
                for oh in range(ho):
                    for ow in range(wo):
                        vals = [
                            x[nb, ch, oh * s + r, ow * s + q]
                            for r in range(k)
                            for q in range(k)
                        ]
                        if is_max:
                            best = vals[0]
                            for v in vals[1:]:
                                if v > best:
                                    best = v
                            y[nb, ch, oh, ow] = best
                        else:
                            acc = np.float32(0)
                            for v in vals:
                                acc += v
                            y[nb, ch, oh, ow] = acc / np.float32(k * k)
        return y


_BUILTIN_BACKENDS = {
    "reference": ReferenceBackend,
    "naive": NaiveBackend,
}


def load_backend(name: str) -> Backend:
    """Resolve a builtin backend name, a `module:Class` plugin path, or a
    `worker:<builtin>` out-of-process backend."""
    if name in _BUILTIN_BACKENDS:
        return _BUILTIN_BACKENDS[name]()
    if name.startswith("worker:"):
        from .worker import PipeBackend

        return PipeBackend(name.split(":", 1)[1])
    if ":" in name:
        mod_name, cls_name = name.split(":", 1)
        try:
            mod = importlib.import_module(mod_name)
            cls = getattr(mod, cls_name)
        except (ImportError, AttributeError) as e:
            raise BackendError(f"cannot load backend plugin {name!r}: {e}") from e
        backend = cls()
        if not isinstance(backend, Backend):
            raise BackendError(f"plugin {name!r} is not a Backend")
        return backend
    raise KeyError(f"unknown backend {name!r}")


# ---------------------------------------------------------------------------
# benchmarks
# ---------------------------------------------------------------------------

@dataclass
class Benchmark:
    """One executable or analytic workload with its deterministic data."""

    bench_id: str
    kind: str                  # "micro" | "macro"
    spec: Optional[LayerSpec] = None
    descriptor: Optional[NetworkDescriptor] = None
    layer_kind: str = ""
    config: str = ""
    variant: str = "dense"
    executable: bool = True

    def data_seed(self, seed: int) -> int:
        # variants share the base benchmark's stream: a sparse or fx16 model
        # is the same model with masked / quantized weights
        return prng.derive_seed(seed, self.bench_id.split("+")[0])

    def analytic_ops(self) -> int:
        if self.spec is not None:
            return analyze(self.spec).ops
        return sum(analyze(s).ops for s in self.descriptor.layers)


def all_benchmarks(suite: str = "all") -> list[Benchmark]:
    """Registry-ordered benchmark list for a suite selection."""
    out = []
    if suite in ("micro", "all"):
        for mb in micro_benchmarks():
            out.append(Benchmark(
                bench_id=mb.bench_id, kind="micro", spec=mb.spec,
                layer_kind=mb.kind, config=mb.config, variant=mb.variant,
                executable=mb.executable,
            ))
    if suite in ("macro", "all"):
        for nb in macro_benchmarks():
            d = nb.descriptor
            out.append(Benchmark(
                bench_id=nb.bench_id, kind="macro", descriptor=d,
                variant=d.variant, executable=d.executable,
            ))
    if not out:
        raise SpecError(f"unknown suite {suite!r}")
    return out


def filter_benchmarks(benchmarks, kind=None, config=None, variant=None, name=None):
    sel = benchmarks
    if kind:
        sel = [b for b in sel if b.layer_kind == kind or b.bench_id == f"net/{kind}"]
    if config:
        sel = [b for b in sel if b.config == config or b.kind == "macro"]
    if variant:
        sel = [b for b in sel if b.variant == variant]
    if name:
        sel = [b for b in sel if name in b.bench_id]
    return sel


def materialize(bench: Benchmark, seed: int = DEFAULT_SEED):
    """(params, input, switches) for one benchmark, pure in (bench, seed)."""
    ds = bench.data_seed(seed)
    if bench.kind == "micro":
        params = instantiate_params(bench.spec, ds)
        x = generate_input(bench.spec, ds)
        sw = None
        if bench.spec.kind == KIND_UNPOOL_MAX:
            sw = generate_unpool_switches(bench.spec, ds)
        return params, x, sw
    params = instantiate_params(bench.descriptor, ds)
    x = generate_input(bench.descriptor.layers[0], ds)
    return params, x, None


def execute(backend: Backend, bench: Benchmark, params: ModelParams,
            x: np.ndarray, switches=None) -> np.ndarray:
    """One forward execution of a benchmark on a backend."""
    if bench.kind == "micro":
        desc = backend.descriptor()
        if bench.spec.kind not in desc.supported_kinds:
            raise UnsupportedBenchmark(
                f"{desc.name} does not support {bench.spec.kind}")
        if bench.variant == "sparse" and not desc.supports_sparse:
            raise UnsupportedBenchmark(f"{desc.name} does not support sparse weights")
        return backend.forward(bench.spec, params.layer(0), x, switches=switches)
    if not bench.executable:
        raise AnalyticOnlyError(f"descriptor {bench.bench_id} is analytic-only")
    if isinstance(backend, ReferenceBackend):
        y, _ = run_network(bench.descriptor, params, x)
        return y
    desc = backend.descriptor()
    missing = {s.kind for s in bench.descriptor.layers} - set(desc.supported_kinds)
    if missing:
        raise UnsupportedBenchmark(
            f"{desc.name} lacks {sorted(missing)} needed by {bench.bench_id}")
    return _run_network_on(backend, bench.descriptor, params, x)


def _run_network_on(backend: Backend, desc: NetworkDescriptor,
                    params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Network execution through an arbitrary per-layer backend."""
    adds = {}
    for e in desc.edges:
        adds.setdefault(e.dst, []).append(e.src)
    outputs = []
    switch_bank = {}
    cur = x
    for i, spec in enumerate(desc.layers):
        sw = None
        if i in desc.switch_sources:
            sw = switch_bank.get(desc.switch_sources[i])
        if spec.kind == "fc" and cur.ndim > 2 and cur.shape[-1] != spec.hp["in_features"]:
            cur = cur.reshape(cur.shape[0], -1)
        y = backend.forward(spec, params.layer(i), cur, switches=sw)
        if spec.kind == "pool_max":
            # unpool switches follow the reference pooling tie rule
            switch_bank[i] = forward_layer(spec, params.layer(i), cur).switches
        for src in adds.get(i, ()):
            y = y + outputs[src]
        outputs.append(y)
        cur = y
    return cur


# ---------------------------------------------------------------------------
# goldens
# ---------------------------------------------------------------------------

class GoldenStore:
    """Disk cache of reference-backend outputs, keyed by (benchmark, seed)."""

    def __init__(self, root):
        self.root = Path(root)

    def path(self, bench_id: str, seed: int) -> Path:
        safe = bench_id.replace("/", "_").replace("+", "_")
        return self.root / f"{safe}__s{seed & 0xFFFFFFFF:x}.golden"

    def get_or_create(self, bench: Benchmark, seed: int) -> np.ndarray:
        p = self.path(bench.bench_id, seed)
        if p.exists():
            return goldens.read_golden(p)
        params, x, sw = materialize(bench, seed)
        y = execute(ReferenceBackend(), bench, params, x, switches=sw)
        goldens.write_golden(p, y)
        return y


@dataclass
class ConstantPowerModel:
    """Energy = watts x wall time; the fallback when no probe exists."""

    watts: float

    def energy(self, wall_time: float) -> float:
        return self.watts * wall_time


class EnergyProbe:
    """External meter interface: start before the timed run, stop after."""

    def start(self) -> None:
        raise NotImplementedError

    def stop(self) -> float:
        """Joules consumed since start()."""
        raise NotImplementedError


def run_benchmark(backend: Backend, bench: Benchmark, repetitions: int = 3,
                  warmup: int = 1, seed: int = DEFAULT_SEED,
                  golden_store: Optional[GoldenStore] = None,
                  power_model: Optional[ConstantPowerModel] = None,
                  probe: Optional[EnergyProbe] = None) -> RunResult:
    """Timed execution: median wall time over `repetitions` after `warmup`
    discarded runs, MSE against the stored golden, optional energy."""
    if repetitions < 1:
        raise SpecError("repetitions must be >= 1")
    name = backend.descriptor().name
    if not bench.executable:
        return RunResult(bench.bench_id, name, "skipped",
                         note="analytic-only configuration")
    params, x, sw = materialize(bench, seed)
    try:
        times = []
        energies = []
        output = None
        for rep in range(warmup + repetitions):
            if probe is not None:
                probe.start()
            t0 = time.perf_counter()
            y = execute(backend, bench, params, x, switches=sw)
            dt = time.perf_counter() - t0
            joules = probe.stop() if probe is not None else None
            if rep >= warmup:
                times.append(dt)
                if joules is not None:
                    energies.append(joules)
                output = y
    except UnsupportedBenchmark as e:
        return RunResult(bench.bench_id, name, "skipped", note=str(e))
    except AnalyticOnlyError as e:
        return RunResult(bench.bench_id, name, "skipped", note=str(e))
    if not np.all(np.isfinite(output)):
        return RunResult(bench.bench_id, name, "failed",
                         note="non-finite output", repetitions=repetitions)
    wall = float(np.median(times))
    if energies:
        energy = float(np.median(energies))
    elif power_model is not None:
        energy = power_model.energy(wall)
    else:
        energy = None
    err = None
    if golden_store is not None:
        golden = golden_store.get_or_create(bench, seed)
        err = mse(golden, output)
    return RunResult(
        benchmark=bench.bench_id, backend=name, status="ok", wall_time=wall,
        energy=energy, mse_vs_golden=err, ops=float(bench.analytic_ops()),
        repetitions=repetitions,
    )


def run_suite(backend: Backend, suite: str = "micro", repetitions: int = 3,
              warmup: int = 1, seed: int = DEFAULT_SEED,
              golden_store: Optional[GoldenStore] = None,
              power_model: Optional[ConstantPowerModel] = None,
              probe: Optional[EnergyProbe] = None,
              filters: Optional[dict] = None) -> list[RunResult]:
    """run_benchmark over the registry selection, deterministic order.

    Analytic-only configurations are skipped for execution; they remain in
    the result list as skip records.
    """
    benches = all_benchmarks(suite)
    if filters:
        benches = filter_benchmarks(benches, **filters)
    backend.initialize()
    try:
        return [
            run_benchmark(backend, b, repetitions=repetitions, warmup=warmup,
                          seed=seed, golden_store=golden_store,
                          power_model=power_model, probe=probe)
            for b in benches
        ]
    finally:
        backend.finalize()
