"""Synthetic model parameters.

Weights are uniform in [-0.5, 0.5) from the pinned SplitMix64 stream, biases
are zero, bn gamma/beta are 1/0, lstm recurrent matrices share the weight
rule.  Every tensor draws from an independent substream keyed by
(seed, layer index, role), so parameters are a pure function of (spec, seed).
"""

from __future__ import annotations

import math

import numpy as np

from .. import prng
from ..kernels import output_shape
from ..types import (
    KIND_BN,
    KIND_CONV,
    KIND_DECONV,
    KIND_FC,
    KIND_LSTM,
    LayerSpec,
    ModelParams,
    NetworkDescriptor,
    SpecError,
)

FX16_MAX_Q = 32767  # symmetric signed 16-bit range; -32768 unused


def _weight(seed: int, layer: int, role: str, shape) -> np.ndarray:
    n = int(np.prod(shape))
    return prng.uniform(prng.derive_seed(seed, "param", layer, role), n).reshape(shape)


def layer_param_shapes(spec: LayerSpec) -> dict[str, tuple]:
    """Parameter tensor shapes for one layer; empty for parameter-free kinds."""
    hp = spec.hp
    if spec.kind == KIND_CONV:
        ci = spec.input_shape[1]
        k = hp["kernel"]
        return {"weight": (hp["out_channels"], ci, k, k), "bias": (hp["out_channels"],)}
    if spec.kind == KIND_DECONV:
        ci = spec.input_shape[1]
        k = hp["kernel"]
        return {"weight": (ci, hp["out_channels"], k, k), "bias": (hp["out_channels"],)}
    if spec.kind == KIND_FC:
        return {"weight": (hp["out_features"], hp["in_features"]),
                "bias": (hp["out_features"],)}
    if spec.kind == KIND_BN:
        c = spec.input_shape[1]
        return {"gamma": (c,), "beta": (c,)}
    if spec.kind == KIND_LSTM:
        h, i = hp["hidden"], spec.input_shape[1]
        return {"wx": (4, h, i), "wh": (4, h, h), "b": (4, h)}
    return {}


def _instantiate_layer(spec: LayerSpec, seed: int, layer: int) -> dict[str, np.ndarray]:
    out = {}
    for role, shape in layer_param_shapes(spec).items():
        if role in ("bias", "beta", "b"):
            out[role] = np.zeros(shape, dtype=np.float32)
        elif role == "gamma":
            out[role] = np.ones(shape, dtype=np.float32)
        else:
            out[role] = _weight(seed, layer, role, shape)
    return out


def instantiate_params(spec, seed: int) -> ModelParams:
    """Deterministic parameters for a LayerSpec or NetworkDescriptor.

    Applies the spec's own sparsity/precision tags: layers with sparsity < 1
    are masked to that density, fx16 precision quantizes the weights.
    """
    seed = int(seed) & ((1 << 64) - 1)
    if isinstance(spec, LayerSpec):
        layers = [spec]
    elif isinstance(spec, NetworkDescriptor):
        layers = spec.layers
    else:
        raise SpecError(f"cannot instantiate params for {type(spec).__name__}")
    tensors = {}
    densities = {}
    for i, lspec in enumerate(layers):
        output_shape(lspec)  # validates the spec before we mint tensors
        tensors[i] = _instantiate_layer(lspec, seed, i)
        if lspec.sparsity < 1.0:
            densities[i] = lspec.sparsity
    params = ModelParams(seed=seed, tensors=tensors, densities=densities)
    if densities:
        params = _apply_masks(params, seed)
    if any(l.precision == "fx16" for l in layers):
        params = quantize_fx16(params)
    return params


WEIGHT_ROLES = ("weight", "wx", "wh")


def _mask_tensor(arr: np.ndarray, density: float, seed: int) -> np.ndarray:
    """Zero all but round(density * size) entries, chosen by the pinned stream."""
    size = arr.size
    keep = int(round(density * size))
    if keep >= size:
        return arr
    keys = prng.raw_stream(seed, size)
    kept = np.argpartition(keys, keep - 1)[:keep] if keep > 0 else np.empty(0, np.int64)
    mask = np.zeros(size, dtype=bool)
    mask[kept] = True
    return np.where(mask, arr.reshape(-1), np.float32(0)).reshape(arr.shape).astype(np.float32)


def _apply_masks(params: ModelParams, seed: int) -> ModelParams:
    for layer, density in params.densities.items():
        bank = params.tensors[layer]
        for role in WEIGHT_ROLES:
            if role in bank:
                mseed = prng.derive_seed(seed, "mask", layer, role)
                bank[role] = _mask_tensor(bank[role], density, mseed)
    return params


def sparsify(params: ModelParams, density: float, seed: int) -> ModelParams:
    """Random-mask the weight tensors of `params` to the requested density.

    Non-weight tensors (biases, bn scales) are untouched.  The nonzero count
    per tensor is exactly round(density * size), well inside the +-1%
    contract.  density = 1 returns an identical copy.
    """
    if not (0.0 < density <= 1.0):
        raise SpecError(f"density {density} outside (0, 1]")
    out = ModelParams(
        seed=params.seed,
        tensors={
            li: {role: arr.copy() for role, arr in bank.items()}
            for li, bank in params.tensors.items()
        },
        densities=dict(params.densities),
    )
    if density == 1.0:
        return out
    for li, bank in out.tensors.items():
        for role in WEIGHT_ROLES:
            if role in bank:
                mseed = prng.derive_seed(seed, "mask", li, role)
                bank[role] = _mask_tensor(bank[role], density, mseed)
        out.densities[li] = density
    return out


def fx16_scale_exponent(amax: float) -> int:
    """Fractional-bit count f of the power-of-two scale 2^f for a tensor.

    Largest f with amax * 2^f <= 32767; tensors of zeros get f = 0 (scale 1).
    f is clamped to [0, 30] so degenerate tiny tensors stay representable.
    """
    if amax <= 0.0:
        return 0
    f = int(math.floor(math.log2(FX16_MAX_Q / amax)))
    return max(0, min(30, f))


def quantize_tensor_fx16(arr: np.ndarray) -> np.ndarray:
    """Round to the nearest representable signed-16-bit fixed-point value.

    Per-tensor power-of-two scaling; round-half-even; returns the
    dequantized float32 tensor used for execution.
    """
    amax = float(np.max(np.abs(arr))) if arr.size else 0.0
    f = fx16_scale_exponent(amax)
    scale = np.float64(2.0**f)
    q = np.rint(arr.astype(np.float64) * scale)
    q = np.clip(q, -FX16_MAX_Q - 1, FX16_MAX_Q)
    return (q / scale).astype(np.float32)


def quantize_fx16(params: ModelParams) -> ModelParams:
    """Quantize every weight tensor to fx16 and dequantize back to fp32."""
    out = ModelParams(
        seed=params.seed,
        tensors={
            li: {role: arr.copy() for role, arr in bank.items()}
            for li, bank in params.tensors.items()
        },
        densities=dict(params.densities),
    )
    for bank in out.tensors.values():
        for role in WEIGHT_ROLES:
            if role in bank:
                bank[role] = quantize_tensor_fx16(bank[role])
    return out
