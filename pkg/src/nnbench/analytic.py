"""Closed-form workload characteristics from the pinned loop nests.

Every kernel has a documented canonical loop nest (docs/characteristics-model.md).
From it we derive exact counts:

* ops        - arithmetic operations (one add or one multiply each; a MAC is
               two; bias incorporation is one per output; compares count one).
* touches    - element-granularity read/write touches of the nest.
* branches   - data-dependent branch events (loop bounds excluded).
* footprints - distinct elements per region (input / output / weight).
* mem_acc    - modeled memory traffic: read touches that miss an ideal
               fully-associative LRU buffer of BUFFER_ELEMS elements, plus one
               write-back per distinct written element.  Shipped executable
               configurations keep their reuse working sets inside the buffer,
               so their traffic is exactly compulsory:
                   mem_acc = distinct reads + distinct writes
               and the tracer reproduces it event-for-event.  Configurations
               whose per-reuse working set exceeds the buffer fall into
               documented re-fetch regimes (conv G streams its weights per
               output pixel).

The op/traffic ratio op_mem therefore behaves like arithmetic intensity:
high for convolutions with resident weights, ~2 for dense fully-connected
layers, and ~2x density for sparse ones (dense-storage sparse execution
reads every operand and multiplies only nonzeros).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

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
    SpecError,
    elem_count,
)
from .kernels import output_shape

BUFFER_ELEMS = 2**23  # ideal on-chip buffer of the traffic model, in elements

# computation-pattern classes (reduction / element-wise / enlargement)
COM_PTT = {
    KIND_CONV: "RD",
    KIND_POOL_AVG: "RD",
    KIND_POOL_MAX: "RD",
    KIND_FC: "RD",
    KIND_LRN: "RD",
    KIND_LSTM: "RD",
    KIND_RELU: "EW",
    KIND_SIGMOID: "EW",
    KIND_BN: "EW",
    KIND_DECONV: "EL",
    KIND_UNPOOL_AVG: "EL",
    KIND_UNPOOL_MAX: "EL",
}


@dataclass
class AnalyticProfile:
    """Exact nest-level counts for one layer spec."""

    ops: int
    reads: int            # read touches
    writes: int           # write touches
    branches: int
    in_mem: int           # distinct input-region elements
    out_mem: int          # distinct output-region elements
    wgh_mem: int          # distinct weight-region elements
    mem_acc: int          # modeled memory traffic (see module docstring)
    traffic_regime: str   # "resident" | refetch regime name
    redist_bound: Optional[int] = None  # working-set bound on reuse distance

    @property
    def touches(self) -> int:
        return self.reads + self.writes

    @property
    def events(self) -> int:
        return self.reads + self.writes + self.branches

    @property
    def op_mem(self) -> float:
        return self.ops / self.mem_acc if self.mem_acc else float("nan")


def _window_coverage(extent: int, k: int, s: int, p: int, n_out: int):
    """Valid-position sums for one clipped window axis.

    Returns (S, kinds_used, covered): S = total valid (out, offset) pairs,
    kinds_used = distinct kernel offsets ever valid, covered = distinct
    input positions touched.
    """
    S = 0
    used: set[int] = set()
    all_used = False
    covered = 0
    cover_end = -1
    for o in range(n_out):
        lo = max(0, p - o * s)
        hi = min(k, extent + p - o * s)
        if hi <= lo:
            continue
        S += hi - lo
        if not all_used:
            if lo == 0 and hi == k:
                all_used = True
            else:
                used.update(range(lo, hi))
                all_used = len(used) == k
        start, end = o * s + lo - p, o * s + hi - p  # touched interval [start, end)
        covered += end - max(start, cover_end) if end > cover_end else 0
        cover_end = max(cover_end, end)
    return S, (k if all_used else len(used)), covered


def analyze(spec: LayerSpec) -> AnalyticProfile:
    out_shape = output_shape(spec)
    kind = spec.kind
    hp = spec.hp
    if kind == KIND_CONV:
        return _analyze_conv(spec, out_shape)
    if kind == KIND_DECONV:
        return _analyze_deconv(spec, out_shape)
    if kind in (KIND_POOL_AVG, KIND_POOL_MAX):
        return _analyze_pool(spec, out_shape)
    if kind in (KIND_UNPOOL_AVG, KIND_UNPOOL_MAX):
        return _analyze_unpool(spec, out_shape)
    if kind == KIND_FC:
        return _analyze_fc(spec, out_shape)
    if kind in (KIND_RELU, KIND_SIGMOID):
        n = elem_count(spec.input_shape)
        if kind == KIND_RELU:
            return AnalyticProfile(n, n, n, n, n, n, 0, 2 * n, "resident")
        return AnalyticProfile(3 * n, n, n, 0, n, n, 0, 2 * n, "resident")
    if kind == KIND_LRN:
        return _analyze_lrn(spec)
    if kind == KIND_BN:
        return _analyze_bn(spec)
    if kind == KIND_LSTM:
        return _analyze_lstm(spec)
    raise SpecError(f"unknown kind {kind!r}")


def _analyze_conv(spec: LayerSpec, out_shape) -> AnalyticProfile:
    n, ci, h, w = spec.input_shape
    _, co, ho, wo = out_shape
    k, s, p = spec.hp["kernel"], spec.hp.get("stride", 1), spec.hp.get("pad", 0)
    sh, ukh, th = _window_coverage(h, k, s, p, ho)
    sw, ukw, tw = _window_coverage(w, k, s, p, wo)
    macs = n * co * ci * sh * sw
    outs = n * co * ho * wo
    ops = 2 * int(round(spec.sparsity * macs)) + outs
    reads = outs + 2 * macs                    # bias + (x, w) per candidate
    writes = outs
    branches = macs if spec.sparsity < 1.0 else 0
    in_mem = n * ci * th * tw
    wgh_mem = co * ci * ukh * ukw + co
    out_mem = outs
    # traffic regimes: weights+window resident per pixel, then row band
    ws_pixel = co * ci * ukh * ukw + ci * k * k + 2 * co
    ws_row = ci * k * tw + co * ci * ukh * ukw + 2 * co * wo
    if ws_row <= BUFFER_ELEMS:
        mem_acc = in_mem + wgh_mem + out_mem
        regime = "resident"
    elif ws_pixel <= BUFFER_ELEMS:
        mem_acc = n * ci * sh * tw + wgh_mem + out_mem
        regime = "row-refetch"
    else:
        mem_acc = reads + writes
        regime = "streaming"
    return AnalyticProfile(ops, reads, writes, branches, in_mem, out_mem, wgh_mem,
                           mem_acc, regime, redist_bound=ws_pixel)


def _analyze_deconv(spec: LayerSpec, out_shape) -> AnalyticProfile:
    n, ci, h, w = spec.input_shape
    _, co, ho, wo = out_shape
    k, s, p = spec.hp["kernel"], spec.hp.get("stride", 1), spec.hp.get("pad", 0)
    # scatter validity mirrors conv's gather: contribution (i, kk) valid iff
    # the target coordinate i*s + kk - p lands inside the output
    sh, ukh, th = _scatter_coverage(h, k, s, p, ho)
    sw, ukw, tw = _scatter_coverage(w, k, s, p, wo)
    contribs = n * ci * co * sh * sw
    outs = n * co * ho * wo
    ops = 2 * int(round(spec.sparsity * contribs)) + outs
    # x read once per contributing input; w + psum per contribution; bias and
    # a final psum read per output
    reads = n * ci * th * tw + 2 * contribs + n * co + outs
    writes = contribs + outs
    branches = 0
    in_mem = n * ci * th * tw
    wgh_mem = ci * co * ukh * ukw + co
    out_mem = outs
    ws_psum = n * co * ho * wo + wgh_mem  # live psums plus resident filters
    if ws_psum <= BUFFER_ELEMS:
        mem_acc = in_mem + wgh_mem + 2 * out_mem
        regime = "resident"
    else:
        mem_acc = reads + writes
        regime = "streaming"
    return AnalyticProfile(ops, reads, writes, branches, in_mem, out_mem, wgh_mem,
                           mem_acc, regime, redist_bound=ws_psum)


def _scatter_coverage(extent: int, k: int, s: int, p: int, out_extent: int):
    """Valid (input position, kernel offset) pairs for the deconv scatter."""
    S = 0
    used = set()
    covered = set()
    for i in range(extent):
        lo = max(0, p - i * s)
        hi = min(k, out_extent + p - i * s)
        if hi <= lo:
            continue
        S += hi - lo
        used.update((lo, hi - 1))
        covered.add(i)
        if lo == 0 and hi == k:
            used = set(range(k))
    if used and used != set(range(k)):
        used2 = set()
        for i in range(extent):
            lo = max(0, p - i * s)
            hi = min(k, out_extent + p - i * s)
            used2.update(range(lo, hi))
        used = used2
    return S, len(used), len(covered)


def _analyze_pool(spec: LayerSpec, out_shape) -> AnalyticProfile:
    n, c, h, w = spec.input_shape
    _, _, ho, wo = out_shape
    k, s = spec.hp["window"], spec.hp.get("stride", spec.hp["window"])
    sh, _, th = _window_coverage(h, k, s, 0, ho)
    sw, _, tw = _window_coverage(w, k, s, 0, wo)
    win_total = n * c * sh * sw
    outs = n * c * ho * wo
    if spec.kind == KIND_POOL_MAX:
        ops = win_total - outs          # compares
        branches = win_total - outs
    else:
        ops = win_total                 # adds + one divide per window
        branches = 0
    reads = win_total
    writes = outs
    in_mem = n * c * th * tw
    mem_acc = in_mem + outs             # overlap reuses stay in-buffer
    return AnalyticProfile(ops, reads, writes, branches, in_mem, outs, 0,
                           mem_acc, "resident")


def _analyze_unpool(spec: LayerSpec, out_shape) -> AnalyticProfile:
    n, c, h, w = spec.input_shape
    _, _, ho, wo = out_shape
    k = spec.hp["window"]
    ins = n * c * h * w
    outs = n * c * ho * wo
    if spec.kind == KIND_UNPOOL_MAX:
        ops = ins                       # one placement per input
        branches = ins * k * k          # switch test per window slot
        reads = 2 * ins                 # value + switch
        writes = outs + ins             # zero-fill pass + placements
        in_mem = 2 * ins
    else:
        ops = ins * (1 + k * k)         # divide + one accumulate per target
        branches = 0
        reads = ins
        writes = outs                   # disjoint windows (stride >= window)
        in_mem = ins
    mem_acc = in_mem + outs
    return AnalyticProfile(ops, reads, writes, branches, in_mem, outs, 0,
                           mem_acc, "resident")


def _analyze_fc(spec: LayerSpec, out_shape) -> AnalyticProfile:
    nfeat = spec.hp["in_features"]
    m = spec.hp["out_features"]
    b = elem_count(spec.input_shape) // nfeat
    macs = b * nfeat * m
    outs = b * m
    ops = 2 * int(round(spec.sparsity * macs)) + outs
    reads = outs + 2 * macs
    writes = outs
    branches = macs if spec.sparsity < 1.0 else 0
    in_mem = b * nfeat
    wgh_mem = nfeat * m + m
    ws = nfeat * m + 2 * nfeat + 2 * m
    if ws <= BUFFER_ELEMS or b == 1:
        # batch 1 never re-reads weights; otherwise they stay resident
        mem_acc = in_mem + wgh_mem + outs
        regime = "resident"
    else:
        mem_acc = in_mem + b * (nfeat * m + m) + outs
        regime = "weight-stream"
    return AnalyticProfile(ops, reads, writes, branches, in_mem, outs, wgh_mem,
                           mem_acc, regime, redist_bound=2 * nfeat + 1)


def _analyze_lrn(spec: LayerSpec) -> AnalyticProfile:
    n, c, h, w = spec.input_shape
    local = spec.hp.get("local_size", 5)
    half = local // 2
    sc = sum(min(c, ci + half + 1) - max(0, ci - half) for ci in range(c))
    elems = n * c * h * w
    ops = n * h * w * (2 * sc + 4 * c)
    reads = n * h * w * sc
    writes = elems
    mem_acc = 2 * elems
    return AnalyticProfile(ops, reads, writes, 0, elems, elems, 0, mem_acc, "resident")


def _analyze_bn(spec: LayerSpec) -> AnalyticProfile:
    n, c, h, w = spec.input_shape
    elems = n * c * h * w
    plane = n * h * w
    ops = 7 * elems + 7 * c
    reads = 2 * elems + 2 * c
    writes = elems
    regime = "resident" if plane + 2 <= BUFFER_ELEMS else "two-pass-stream"
    mem_acc = (2 * elems if regime != "resident" else elems) + 2 * c + elems
    return AnalyticProfile(ops, reads, writes, 0, elems, elems, 2 * c, mem_acc, regime)


def _analyze_lstm(spec: LayerSpec) -> AnalyticProfile:
    b, i = spec.input_shape
    hsz, t = spec.hp["hidden"], spec.hp["steps"]
    gates = 4 * hsz
    # t = 0 skips the recurrent term (initial state is exactly zero) and the
    # f*c_prev product; later steps run the full recurrence.
    ops0 = b * (gates * (2 * i + 1 + 3) + hsz * (1 + 1) + hsz * 4)
    opsT = b * (gates * (2 * (i + hsz) + 1 + 3) + hsz * 3 + hsz * 4)
    ops = ops0 + (t - 1) * opsT
    reads0 = b * (gates * (1 + 2 * i))
    readsT = b * (gates * (1 + 2 * (i + hsz)) + hsz)          # + c_prev reads
    reads = reads0 + (t - 1) * readsT
    writes = t * b * 2 * hsz                                   # c and h per step
    in_mem = t * b * i
    out_mem = t * b * hsz + b * hsz                            # h sequence + cell state
    # a single-step run never touches the recurrent weights
    wgh_mem = gates * (i + hsz) + gates if t > 1 else gates * i + gates
    ws = wgh_mem + b * (i + 3 * hsz)
    if ws <= BUFFER_ELEMS:
        mem_acc = in_mem + wgh_mem + out_mem
        regime = "resident"
    else:
        mem_acc = in_mem + t * b * 0 + t * (wgh_mem) + out_mem
        regime = "weight-stream"
    return AnalyticProfile(ops, reads, writes, 0, in_mem, out_mem, wgh_mem,
                           mem_acc, regime, redist_bound=ws)
