"""Reference forward kernels for the 12 layer kinds.

Everything computes in float32 with a pinned accumulation order so golden
outputs are bit-stable across runs and platforms:

* conv / fc / deconv / lstm gates accumulate contributions per output element
  in (in_channel, kernel_row, kernel_col) order (fc: ascending input index),
  realized as an ordered sequence of vectorized multiply-adds.
* bn batch statistics are accumulated in float64 (numpy reduction) and the
  normalization itself is float32.
* pooling ties resolve to the first maximum in (row, col) window order.

Shape rules live here; the registry validates specs against them.
Backends are held to MSE tolerance against these outputs, never bit equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .types import (
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
    LayerSpec,
    NetworkDescriptor,
    ModelParams,
    SpecError,
)


class ShapeMismatch(SpecError):
    """Operand shapes do not compose under the layer's shape rule."""


class KernelFailure(RuntimeError):
    """A kernel produced NaN/Inf output."""


class AnalyticOnlyError(RuntimeError):
    """Raised when a non-executable descriptor is asked to run."""


# ---------------------------------------------------------------------------
# shape rules
# ---------------------------------------------------------------------------

def conv_out_extent(h: int, k: int, s: int, p: int) -> int:
    if k < 1 or s < 1 or p < 0:
        raise ShapeMismatch(f"bad conv hyperparams k={k} s={s} p={p}")
    if h + 2 * p < k:
        raise ShapeMismatch(f"kernel {k} larger than padded extent {h + 2 * p}")
    return (h + 2 * p - k) // s + 1


def deconv_out_extent(h: int, k: int, s: int, p: int) -> int:
    out = (h - 1) * s + k - 2 * p
    if out < 1:
        raise ShapeMismatch(f"deconv output extent {out} < 1 (h={h} k={k} s={s} p={p})")
    return out


def pool_out_extent(h: int, k: int, s: int) -> int:
    if k < 1 or s < 1:
        raise ShapeMismatch(f"bad pool hyperparams k={k} s={s}")
    if h < k:
        raise ShapeMismatch(f"pool window {k} larger than input extent {h}")
    return (h - k) // s + 1


def unpool_out_extent(h: int, k: int, s: int) -> int:
    if k < 1 or s < k:
        # Overlapping unpool windows have no agreed semantics; require s >= k.
        raise ShapeMismatch(f"unpool requires stride >= window (k={k} s={s})")
    return (h - 1) * s + k


def output_shape(spec: LayerSpec) -> tuple[int, ...]:
    """Output tensor shape for a layer spec (sequence shape for lstm)."""
    shp = spec.input_shape
    hp = spec.hp
    kind = spec.kind
    if kind == KIND_CONV:
        n, c, h, w = _expect_rank(shp, 4, kind)
        _expect_channels(hp, c, kind)
        ho = conv_out_extent(h, hp["kernel"], hp.get("stride", 1), hp.get("pad", 0))
        wo = conv_out_extent(w, hp["kernel"], hp.get("stride", 1), hp.get("pad", 0))
        return (n, hp["out_channels"], ho, wo)
    if kind == KIND_DECONV:
        n, c, h, w = _expect_rank(shp, 4, kind)
        _expect_channels(hp, c, kind)
        ho = deconv_out_extent(h, hp["kernel"], hp.get("stride", 1), hp.get("pad", 0))
        wo = deconv_out_extent(w, hp["kernel"], hp.get("stride", 1), hp.get("pad", 0))
        return (n, hp["out_channels"], ho, wo)
    if kind in (KIND_POOL_AVG, KIND_POOL_MAX):
        n, c, h, w = _expect_rank(shp, 4, kind)
        k, s = hp["window"], hp.get("stride", hp["window"])
        return (n, c, pool_out_extent(h, k, s), pool_out_extent(w, k, s))
    if kind in (KIND_UNPOOL_AVG, KIND_UNPOOL_MAX):
        n, c, h, w = _expect_rank(shp, 4, kind)
        k, s = hp["window"], hp.get("stride", hp["window"])
        return (n, c, unpool_out_extent(h, k, s), unpool_out_extent(w, k, s))
    if kind == KIND_FC:
        if shp[-1] != hp["in_features"]:
            raise ShapeMismatch(
                f"fc expects trailing dim {hp['in_features']}, input has {shp[-1]}"
            )
        return shp[:-1] + (hp["out_features"],)
    if kind in (KIND_RELU, KIND_SIGMOID):
        return shp
    if kind == KIND_LRN:
        _expect_rank(shp, 4, kind)
        if hp.get("local_size", 5) < 1:
            raise ShapeMismatch("lrn local_size must be >= 1")
        return shp
    if kind == KIND_BN:
        _expect_rank(shp, 4, kind)
        return shp
    if kind == KIND_LSTM:
        b, i = _expect_rank(shp, 2, kind)
        steps, hidden = hp["steps"], hp["hidden"]
        if steps < 1 or hidden < 1:
            raise ShapeMismatch(f"lstm needs steps>=1 hidden>=1, got {steps}/{hidden}")
        return (steps, b, hidden)
    raise SpecError(f"unknown kind {kind!r}")


def lstm_sequence_shape(spec: LayerSpec) -> tuple[int, ...]:
    b, i = spec.input_shape
    return (spec.hp["steps"], b, i)


def _expect_rank(shp, rank, kind):
    if len(shp) != rank:
        raise ShapeMismatch(f"{kind} expects rank-{rank} input, got shape {shp}")
    return shp


def _expect_channels(hp, c, kind):
    if hp.get("out_channels", 0) < 1:
        raise ShapeMismatch(f"{kind} needs out_channels >= 1")


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def forward_conv(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                 stride: int = 1, pad: int = 0) -> np.ndarray:
    """2-D convolution, NCHW input, (Co, Ci, Kh, Kw) weights, zero padding."""
    n, ci, h, w = x.shape
    co, ciw, kh, kw = weight.shape
    if ciw != ci:
        raise ShapeMismatch(f"conv weight expects {ciw} input channels, input has {ci}")
    ho = conv_out_extent(h, kh, stride, pad)
    wo = conv_out_extent(w, kw, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    acc = np.broadcast_to(bias.astype(np.float32)[None, :, None, None], (n, co, ho, wo)).copy()
    tmp = np.empty((n, co, ho, wo), dtype=np.float32)
    for c in range(ci):
        plane = xp[:, c]
        for r in range(kh):
            for q in range(kw):
                patch = plane[:, None, r : r + ho * stride : stride, q : q + wo * stride : stride]
                np.multiply(patch, weight[None, :, c, r, q, None, None], out=tmp)
                np.add(acc, tmp, out=acc)
    return acc


def forward_deconv(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                   stride: int = 1, pad: int = 0) -> np.ndarray:
    """Transposed convolution; weights are (Ci, Co, Kh, Kw)."""
    n, ci, h, w = x.shape
    ciw, co, kh, kw = weight.shape
    if ciw != ci:
        raise ShapeMismatch(f"deconv weight expects {ciw} input channels, input has {ci}")
    ho = deconv_out_extent(h, kh, stride, pad)
    wo = deconv_out_extent(w, kw, stride, pad)
    full_h, full_w = (h - 1) * stride + kh, (w - 1) * stride + kw
    buf = np.zeros((n, co, full_h, full_w), dtype=np.float32)
    tmp = np.empty((n, co, h, w), dtype=np.float32)
    for c in range(ci):
        plane = x[:, None, c]
        for r in range(kh):
            for q in range(kw):
                view = buf[:, :, r : r + h * stride : stride, q : q + w * stride : stride]
                np.multiply(plane, weight[None, c, :, r, q, None, None], out=tmp)
                np.add(view, tmp, out=view)
    out = buf[:, :, pad : pad + ho, pad : pad + wo]
    return out + bias.astype(np.float32)[None, :, None, None]


@dataclass
class PoolSwitches:
    """Per-output argmax position, as a flat (row*Kw+col) index in its window."""

    window: int
    idx: np.ndarray  # int64, shaped like the pool output

    def validate(self):
        k2 = self.window * self.window
        if self.idx.size and (self.idx.min() < 0 or self.idx.max() >= k2):
            raise SpecError("pool switch index outside its window")


def forward_pool(x: np.ndarray, window: int, stride: int, mode: str):
    """Max/avg pooling.  Returns (out, PoolSwitches|None)."""
    n, c, h, w = x.shape
    ho = pool_out_extent(h, window, stride)
    wo = pool_out_extent(w, window, stride)
    if mode == "max":
        best = np.full((n, c, ho, wo), -np.inf, dtype=np.float32)
        sw = np.zeros((n, c, ho, wo), dtype=np.int64)
        for r in range(window):
            for q in range(window):
                patch = x[:, :, r : r + ho * stride : stride, q : q + wo * stride : stride]
                take = patch > best
                best = np.where(take, patch, best)
                sw = np.where(take, r * window + q, sw)
        return best, PoolSwitches(window, sw)
    if mode == "avg":
        acc = np.zeros((n, c, ho, wo), dtype=np.float32)
        for r in range(window):
            for q in range(window):
                acc += x[:, :, r : r + ho * stride : stride, q : q + wo * stride : stride]
        return acc / np.float32(window * window), None
    raise SpecError(f"unknown pool mode {mode!r}")


def forward_unpool(x: np.ndarray, window: int, stride: int, mode: str,
                   switches: Optional[PoolSwitches] = None) -> np.ndarray:
    """Reverse pooling.  Max mode places each value at its switch position
    (window origin when no switches are supplied); avg spreads value/window^2.
    Windows must not overlap (stride >= window)."""
    n, c, h, w = x.shape
    ho = unpool_out_extent(h, window, stride)
    wo = unpool_out_extent(w, window, stride)
    out = np.zeros((n, c, ho, wo), dtype=np.float32)
    if mode == "avg":
        share = x / np.float32(window * window)
        for r in range(window):
            for q in range(window):
                out[:, :, r : r + h * stride : stride, q : q + w * stride : stride] += share
        return out
    if mode == "max":
        if switches is None:
            idx = np.zeros((n, c, h, w), dtype=np.int64)
        else:
            switches.validate()
            idx = switches.idx
            if idx.shape != x.shape:
                raise ShapeMismatch(f"switches shape {idx.shape} != input {x.shape}")
        for r in range(window):
            for q in range(window):
                mask = idx == (r * window + q)
                view = out[:, :, r : r + h * stride : stride, q : q + w * stride : stride]
                view[mask] = x[mask]
        return out
    raise SpecError(f"unknown unpool mode {mode!r}")


def forward_fc(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Fully connected layer on the trailing axis; leading axes are batch."""
    m, nfeat = weight.shape
    if x.shape[-1] != nfeat:
        raise ShapeMismatch(f"fc weight expects {nfeat} features, input has {x.shape[-1]}")
    lead = x.shape[:-1]
    flat = x.reshape(-1, nfeat)
    acc = np.broadcast_to(bias.astype(np.float32)[None, :], (flat.shape[0], m)).copy()
    tmp = np.empty((flat.shape[0], m), dtype=np.float32)
    for j in range(nfeat):
        np.multiply(flat[:, j, None], weight[None, :, j], out=tmp)
        np.add(acc, tmp, out=acc)
    return acc.reshape(lead + (m,))


def forward_activation(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == KIND_RELU or kind == "relu":
        return np.maximum(x, np.float32(0))
    if kind == KIND_SIGMOID or kind == "sigmoid":
        return (np.float32(1) / (np.float32(1) + np.exp(-x))).astype(np.float32)
    raise SpecError(f"unknown activation {kind!r}")


def forward_lrn(x: np.ndarray, local_size: int = 5, alpha: float = 1e-4,
                beta: float = 0.75, k: float = 1.0) -> np.ndarray:
    """Cross-channel local response normalization.

    out[c] = x[c] / (k + (alpha/local_size) * sum_{c' in window} x[c']^2)^beta
    with the window clipped at channel borders; alpha is divided by the
    window size, matching dominant framework behavior.
    """
    n, c, h, w = x.shape
    half = local_size // 2
    sq = x * x
    out = np.empty_like(x)
    scale = np.float32(alpha / local_size)
    for ci in range(c):
        lo, hi = max(0, ci - half), min(c, ci + half + 1)
        ssum = np.zeros((n, h, w), dtype=np.float32)
        for cj in range(lo, hi):
            ssum += sq[:, cj]
        denom = np.power(np.float32(k) + scale * ssum, np.float32(beta), dtype=np.float32)
        out[:, ci] = x[:, ci] / denom
    return out


def forward_bn(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               eps: float = 1e-5) -> np.ndarray:
    """Batch normalization over (N, H, W) per channel, batch statistics."""
    n, c, h, w = x.shape
    mean = x.mean(axis=(0, 2, 3), dtype=np.float64)
    var = np.square(x.astype(np.float64)).mean(axis=(0, 2, 3)) - mean * mean
    var = np.maximum(var, 0.0)
    inv = (1.0 / np.sqrt(var + eps)).astype(np.float32)
    mean32 = mean.astype(np.float32)
    return (
        (x - mean32[None, :, None, None])
        * inv[None, :, None, None]
        * gamma.astype(np.float32)[None, :, None, None]
        + beta.astype(np.float32)[None, :, None, None]
    )


def forward_lstm(x: np.ndarray, wx: np.ndarray, wh: np.ndarray, b: np.ndarray):
    """LSTM over a (T, B, I) sequence; gates ordered (input, forget, output, cell).

    Returns (hidden sequence (T, B, H), final cell state (B, H)).
    Gate pre-activations accumulate bias, then x contributions by ascending
    input index, then h contributions by ascending hidden index.
    """
    t_steps, bsz, isz = x.shape
    four, hsz, isz_w = wx.shape
    if four != 4 or wx.shape != (4, hsz, isz) or wh.shape != (4, hsz, hsz) or b.shape != (4, hsz):
        raise ShapeMismatch(
            f"lstm params mismatch: x {x.shape}, wx {wx.shape}, wh {wh.shape}, b {b.shape}"
        )
    h = np.zeros((bsz, hsz), dtype=np.float32)
    c = np.zeros((bsz, hsz), dtype=np.float32)
    seq = np.empty((t_steps, bsz, hsz), dtype=np.float32)
    wx_flat = wx.reshape(4 * hsz, isz)
    wh_flat = wh.reshape(4 * hsz, hsz)
    b_flat = b.reshape(4 * hsz)
    for t in range(t_steps):
        acc = np.broadcast_to(b_flat[None, :], (bsz, 4 * hsz)).copy()
        xt = x[t]
        for j in range(isz):
            acc += xt[:, j, None] * wx_flat[None, :, j]
        for j in range(hsz):
            acc += h[:, j, None] * wh_flat[None, :, j]
        gates = acc.reshape(bsz, 4, hsz)
        i_g = forward_activation(gates[:, 0], "sigmoid")
        f_g = forward_activation(gates[:, 1], "sigmoid")
        o_g = forward_activation(gates[:, 2], "sigmoid")
        g_g = np.tanh(gates[:, 3]).astype(np.float32)
        c = f_g * c + i_g * g_g
        h = o_g * np.tanh(c).astype(np.float32)
        seq[t] = h
    return seq, c


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared error between equal-shaped tensors (float64 accumulate)."""
    if a.shape != b.shape:
        raise ShapeMismatch(f"mse shapes differ: {a.shape} vs {b.shape}")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


# ---------------------------------------------------------------------------
# spec-level dispatch and network execution
# ---------------------------------------------------------------------------

@dataclass
class LayerOutput:
    y: np.ndarray
    switches: Optional[PoolSwitches] = None


def forward_layer(spec: LayerSpec, params: dict, x: np.ndarray,
                  switches: Optional[PoolSwitches] = None) -> LayerOutput:
    """Run one layer described by `spec` with its parameter dict."""
    hp = spec.hp
    kind = spec.kind
    if kind == KIND_CONV:
        y = forward_conv(x, params["weight"], params["bias"],
                         hp.get("stride", 1), hp.get("pad", 0))
        return LayerOutput(y)
    if kind == KIND_DECONV:
        y = forward_deconv(x, params["weight"], params["bias"],
                           hp.get("stride", 1), hp.get("pad", 0))
        return LayerOutput(y)
    if kind in (KIND_POOL_AVG, KIND_POOL_MAX):
        mode = "avg" if kind == KIND_POOL_AVG else "max"
        y, sw = forward_pool(x, hp["window"], hp.get("stride", hp["window"]), mode)
        return LayerOutput(y, sw)
    if kind in (KIND_UNPOOL_AVG, KIND_UNPOOL_MAX):
        mode = "avg" if kind == KIND_UNPOOL_AVG else "max"
        y = forward_unpool(x, hp["window"], hp.get("stride", hp["window"]), mode, switches)
        return LayerOutput(y)
    if kind == KIND_FC:
        return LayerOutput(forward_fc(x, params["weight"], params["bias"]))
    if kind in (KIND_RELU, KIND_SIGMOID):
        return LayerOutput(forward_activation(x, kind))
    if kind == KIND_LRN:
        y = forward_lrn(x, hp.get("local_size", 5), hp.get("alpha", 1e-4),
                        hp.get("beta", 0.75), hp.get("k", 1.0))
        return LayerOutput(y)
    if kind == KIND_BN:
        y = forward_bn(x, params["gamma"], params["beta"], hp.get("eps", 1e-5))
        return LayerOutput(y)
    if kind == KIND_LSTM:
        seq, _ = forward_lstm(x, params["wx"], params["wh"], params["b"])
        return LayerOutput(seq)
    raise SpecError(f"unknown kind {kind!r}")


def run_network(desc: NetworkDescriptor, params: ModelParams, x: np.ndarray):
    """Forward a full executable network.

    Skip edges add the source layer's output elementwise to the destination
    layer's output (shape-checked).  Unpool layers consume switches from
    their designated pool layer.  Returns (final output, list of per-layer
    outputs).
    """
    if not desc.executable:
        raise AnalyticOnlyError(
            f"descriptor {desc.name!r} is analytic-only; it cannot be executed"
        )
    adds: dict[int, list[int]] = {}
    for e in desc.edges:
        adds.setdefault(e.dst, []).append(e.src)
    outputs: list[np.ndarray] = []
    switch_bank: dict[int, PoolSwitches] = {}
    cur = x
    for i, spec in enumerate(desc.layers):
        sw_in = None
        if i in desc.switch_sources:
            sw_in = switch_bank.get(desc.switch_sources[i])
            if sw_in is None:
                raise SpecError(f"layer {i} wants switches from layer "
                                f"{desc.switch_sources[i]} which produced none")
        if spec.kind == KIND_FC and cur.ndim > 2 and cur.shape[-1] != spec.hp["in_features"]:
            cur = cur.reshape(cur.shape[0], -1)
        out = forward_layer(spec, params.layer(i), cur, switches=sw_in)
        y = out.y
        if out.switches is not None:
            switch_bank[i] = out.switches
        for src in adds.get(i, ()):
            if outputs[src].shape != y.shape:
                raise ShapeMismatch(
                    f"skip edge {src}->{i}: shapes {outputs[src].shape} vs {y.shape}"
                )
            y = y + outputs[src]
        if not np.all(np.isfinite(y)):
            raise KernelFailure(f"layer {i} ({spec.kind}) produced non-finite values")
        outputs.append(y)
        cur = y
    return cur, outputs


def generate_input(spec: LayerSpec, seed: int) -> np.ndarray:
    """Deterministic benchmark input tensor for a layer spec."""
    from . import prng

    shape = lstm_sequence_shape(spec) if spec.kind == KIND_LSTM else spec.input_shape
    n = int(np.prod(shape))
    return prng.uniform(prng.derive_seed(seed, "input"), n).reshape(shape)


def generate_unpool_switches(spec: LayerSpec, seed: int) -> PoolSwitches:
    """Synthetic switches for a standalone max-unpool benchmark."""
    from . import prng

    k = spec.hp["window"]
    n = int(np.prod(spec.input_shape))
    idx = prng.integers(prng.derive_seed(seed, "switches"), n, k * k)
    return PoolSwitches(k, idx.reshape(spec.input_shape))
