"""The netspec JSON format: on-disk schema for network descriptors.

Top level: {"netspec_version": 1, "name", "variant", "layers": [...],
"edges": [...], "stage_breaks": [...], "switch_sources": {...}, "executable"}.
Each layer object carries kind / input_shape / hyperparams / sparsity /
precision.  A layer listed in stage_breaks starts a new schedule stage and is
exempt from the chain shape check against its predecessor.  Shipped files
live under specs/ and are regenerated by `python -m nnbench.registry.netspec`.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from ..kernels import output_shape
from ..types import (
    ALL_KINDS,
    KIND_FC,
    KIND_LSTM,
    KIND_POOL_AVG,
    KIND_POOL_MAX,
    KIND_UNPOOL_AVG,
    KIND_UNPOOL_MAX,
    LayerSpec,
    NetworkDescriptor,
    SkipEdge,
    SpecError,
    elem_count,
)

NETSPEC_VERSION = 1


class NetspecError(SpecError):
    """Netspec file violates the schema; message names the offending field."""


def _fail(path: str, msg: str):
    raise NetspecError(f"{path}: {msg}")


def _expect(cond, path, msg):
    if not cond:
        _fail(path, msg)


def _check_int(value, path, minimum=None):
    _expect(isinstance(value, int) and not isinstance(value, bool), path, f"expected integer, got {value!r}")
    if minimum is not None:
        _expect(value >= minimum, path, f"expected >= {minimum}, got {value}")
    return value


_HP_FIELDS = {
    "out_channels": int, "kernel": int, "stride": int, "pad": int,
    "window": int, "in_features": int, "out_features": int,
    "local_size": int, "alpha": float, "beta": float, "k": float,
    "eps": float, "hidden": int, "steps": int,
}


def layer_to_obj(spec: LayerSpec) -> dict:
    return {
        "kind": spec.kind,
        "input_shape": list(spec.input_shape),
        "hyperparams": dict(spec.hp),
        "sparsity": spec.sparsity,
        "precision": spec.precision,
    }


def layer_from_obj(obj: dict, path: str) -> LayerSpec:
    _expect(isinstance(obj, dict), path, "layer must be an object")
    kind = obj.get("kind")
    _expect(kind in ALL_KINDS, f"{path}.kind", f"unknown kind {kind!r}")
    shape = obj.get("input_shape")
    _expect(isinstance(shape, list) and shape, f"{path}.input_shape", "must be a non-empty array")
    for i, d in enumerate(shape):
        _check_int(d, f"{path}.input_shape[{i}]", minimum=1)
    hp = obj.get("hyperparams", {})
    _expect(isinstance(hp, dict), f"{path}.hyperparams", "must be an object")
    for key, val in hp.items():
        _expect(key in _HP_FIELDS, f"{path}.hyperparams.{key}", "unknown hyperparameter")
        if _HP_FIELDS[key] is int:
            _check_int(val, f"{path}.hyperparams.{key}")
        else:
            _expect(isinstance(val, (int, float)) and not isinstance(val, bool),
                    f"{path}.hyperparams.{key}", f"expected number, got {val!r}")
    sparsity = obj.get("sparsity", 1.0)
    _expect(isinstance(sparsity, (int, float)) and 0 < sparsity <= 1,
            f"{path}.sparsity", f"must be in (0, 1], got {sparsity!r}")
    precision = obj.get("precision", "fp32")
    _expect(precision in ("fp32", "fx16"), f"{path}.precision", f"unknown precision {precision!r}")
    try:
        spec = LayerSpec(kind, tuple(shape), dict(hp), precision, float(sparsity))
        output_shape(spec)
    except (SpecError, KeyError) as e:
        _fail(path, f"invalid layer: {e}")
    return spec


def descriptor_to_obj(desc: NetworkDescriptor) -> dict:
    return {
        "netspec_version": NETSPEC_VERSION,
        "name": desc.name,
        "variant": desc.variant,
        "executable": desc.executable,
        "layers": [layer_to_obj(s) for s in desc.layers],
        "edges": [{"from": e.src, "to": e.dst, "name": e.name} for e in desc.edges],
        "stage_breaks": sorted(desc.stage_breaks),
        "switch_sources": {str(k): v for k, v in sorted(desc.switch_sources.items())},
    }


def descriptor_from_obj(obj: dict) -> NetworkDescriptor:
    _expect(isinstance(obj, dict), "$", "netspec must be an object")
    _expect(obj.get("netspec_version") == NETSPEC_VERSION, "$.netspec_version",
            f"expected {NETSPEC_VERSION}, got {obj.get('netspec_version')!r}")
    name = obj.get("name")
    _expect(isinstance(name, str) and name, "$.name", "must be a non-empty string")
    variant = obj.get("variant", "dense")
    _expect(variant in ("dense", "sparse", "fx16"), "$.variant", f"unknown variant {variant!r}")
    raw_layers = obj.get("layers")
    _expect(isinstance(raw_layers, list) and raw_layers, "$.layers", "must be a non-empty array")
    layers = [layer_from_obj(o, f"$.layers[{i}]") for i, o in enumerate(raw_layers)]
    n = len(layers)
    edges = []
    for i, eo in enumerate(obj.get("edges", [])):
        p = f"$.edges[{i}]"
        _expect(isinstance(eo, dict), p, "edge must be an object")
        src = _check_int(eo.get("from"), f"{p}.from", minimum=0)
        dst = _check_int(eo.get("to"), f"{p}.to", minimum=0)
        _expect(src < n and dst < n, p, f"edge {src}->{dst} out of range (n={n})")
        _expect(src < dst, p, f"edge {src}->{dst} must go forward")
        edges.append(SkipEdge(src, dst, eo.get("name", "")))
    breaks = set()
    for i, b in enumerate(obj.get("stage_breaks", [])):
        b = _check_int(b, f"$.stage_breaks[{i}]", minimum=1)
        _expect(b < n, f"$.stage_breaks[{i}]", f"stage break {b} out of range")
        breaks.add(b)
    sources = {}
    for key, val in obj.get("switch_sources", {}).items():
        p = f"$.switch_sources.{key}"
        try:
            k = int(key)
        except ValueError:
            _fail(p, "key must be a layer index")
        v = _check_int(val, p, minimum=0)
        _expect(0 <= k < n and v < k, p, f"switch source {v} must precede unpool layer {k}")
        sources[k] = v
    desc = NetworkDescriptor(
        name=name, layers=layers, edges=edges, variant=variant,
        executable=bool(obj.get("executable", False)),
        stage_breaks=breaks, switch_sources=sources,
    )
    validate_netspec(desc)
    return desc


def _chain_compatible(prev: LayerSpec, prev_out: tuple, cur: LayerSpec) -> bool:
    shp = cur.input_shape
    if shp == prev_out:
        return True
    if cur.kind == KIND_FC and len(prev_out) >= 2:
        flat = (prev_out[0], elem_count(prev_out[1:]))
        return shp == flat
    if cur.kind == KIND_LSTM and prev.kind == KIND_LSTM:
        t, b, h = prev_out
        return shp == (b, h) and cur.hp.get("steps") == t
    return False


def validate_netspec(desc: NetworkDescriptor) -> None:
    """Shape-compose the chain (within stages), skip edges and switch wiring."""
    outs = []
    for i, spec in enumerate(desc.layers):
        try:
            outs.append(output_shape(spec))
        except (SpecError, KeyError) as e:
            _fail(f"$.layers[{i}]", f"invalid layer: {e}")
        if i == 0 or i in desc.stage_breaks:
            continue
        prev = desc.layers[i - 1]
        if not _chain_compatible(prev, outs[i - 1], spec):
            raise NetspecError(
                f"$.layers[{i}]: input shape {spec.input_shape} of {spec.kind!r} does not "
                f"compose with output {outs[i - 1]} of layer {i - 1} ({prev.kind!r})"
            )
    for e in desc.edges:
        if outs[e.src] != outs[e.dst]:
            raise NetspecError(
                f"$.edges: skip edge {e.src}->{e.dst} connects shapes "
                f"{outs[e.src]} and {outs[e.dst]}"
            )
    for dst, src in desc.switch_sources.items():
        spec = desc.layers[dst]
        if spec.kind not in (KIND_UNPOOL_MAX, KIND_UNPOOL_AVG):
            _fail(f"$.switch_sources.{dst}", f"layer {dst} is {spec.kind!r}, not an unpool")
        if desc.layers[src].kind not in (KIND_POOL_MAX, KIND_POOL_AVG):
            _fail(f"$.switch_sources.{dst}", f"source layer {src} is not a pool")
        if outs[src] != spec.input_shape:
            _fail(f"$.switch_sources.{dst}",
                  f"pool output {outs[src]} does not match unpool input {spec.input_shape}")


def save_netspec(desc: NetworkDescriptor, path) -> None:
    validate_netspec(desc)
    obj = descriptor_to_obj(desc)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def load_netspec(path) -> NetworkDescriptor:
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise NetspecError(f"$: not valid JSON ({e})") from e
    return descriptor_from_obj(obj)


def specs_dir() -> Path:
    """Repository specs/ directory (shipped netspec files)."""
    return Path(__file__).resolve().parents[3] / "specs"


def emit_shipped(out_dir=None) -> list[Path]:
    """Write every shipped macro descriptor as a netspec file."""
    from .networks import macro_networks

    out_dir = Path(out_dir) if out_dir else specs_dir()
    written = []
    for name, desc in macro_networks().items():
        p = out_dir / f"{name}.json"
        save_netspec(desc, p)
        written.append(p)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else None
    for p in emit_shipped(target):
        print(p)
