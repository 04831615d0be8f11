"""Instrumented execution: element-granularity access and branch event streams.

Each kind's generator emits the exact touch sequence of its documented loop
nest (the same nests analytic.py counts), vectorized with numpy index
arithmetic rather than per-event Python loops.  Addresses are abstract
element identifiers (tensor id << 44 | flat index); every address belongs to
one region (input / output / weight).

Only data-dependent comparisons emit branch events: the relu sign test, the
max-pool running-max compare, the max-unpool placement test, and the
nonzero-weight test of sparse conv/fc.  Loop-bound branches are perfectly
predictable and are not modeled.  Branch order per site is program order;
`br_after` anchors each branch after its access-stream position so the
binary dump can interleave events exactly.

Tracing is gated by the predicted event count (ops + touches + branches)
against the events budget; configurations over budget raise
AnalyticOnlyError and are characterized analytically instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analytic import analyze
from .kernels import (
    AnalyticOnlyError,
    PoolSwitches,
    forward_layer,
    generate_input,
    generate_unpool_switches,
    output_shape,
)
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
)

DEFAULT_EVENT_BUDGET = 100_000_000

READ, WRITE = 0, 1
R_IN, R_OUT, R_WGH = 0, 1, 2
REGION_NAMES = {R_IN: "input", R_OUT: "output", R_WGH: "weight"}

SITE_RELU = 1
SITE_MAXPOOL = 2
SITE_UNPOOL = 3
SITE_SPARSE = 4

_TID_SHIFT = np.uint64(44)


def addr(tid: int, idx) -> np.ndarray:
    return (np.uint64(tid) << _TID_SHIFT) | np.asarray(idx, dtype=np.uint64)


@dataclass
class Trace:
    """Ordered event streams of one instrumented layer execution."""

    addrs: np.ndarray      # u64 access addresses, program order
    kinds: np.ndarray      # u8, READ/WRITE
    regions: np.ndarray    # u8, R_IN/R_OUT/R_WGH
    br_sites: np.ndarray   # u32, program order
    br_taken: np.ndarray   # bool
    br_after: np.ndarray   # u64: access index each branch follows
    op_count: int
    output: np.ndarray
    switches: Optional[PoolSwitches] = None

    @property
    def mem_events(self) -> int:
        return int(self.addrs.size)

    @property
    def branch_events(self) -> int:
        return int(self.br_sites.size)


class _Builder:
    def __init__(self):
        self.a, self.k, self.r = [], [], []
        self.bs, self.bt, self.ba = [], [], []
        self.ops = 0
        self.n_acc = 0

    def block(self, addr2d: np.ndarray, kinds_row, regions_row) -> int:
        """Append rows of a fixed access pattern; returns base access index."""
        base = self.n_acc
        rows, cols = addr2d.shape
        self.a.append(addr2d.reshape(-1))
        self.k.append(np.tile(np.asarray(kinds_row, dtype=np.uint8), rows))
        self.r.append(np.tile(np.asarray(regions_row, dtype=np.uint8), rows))
        self.n_acc += rows * cols
        return base

    def branches(self, site: int, taken: np.ndarray, after: np.ndarray):
        self.bs.append(np.full(taken.size, site, dtype=np.uint32))
        self.bt.append(taken.reshape(-1).astype(bool))
        self.ba.append(after.reshape(-1).astype(np.uint64))

    def finish(self, output, op_count, switches=None) -> Trace:
        cat = lambda parts, dt: (
            np.concatenate(parts) if parts else np.zeros(0, dtype=dt)
        )
        return Trace(
            addrs=cat(self.a, np.uint64),
            kinds=cat(self.k, np.uint8),
            regions=cat(self.r, np.uint8),
            br_sites=cat(self.bs, np.uint32),
            br_taken=cat(self.bt, bool),
            br_after=cat(self.ba, np.uint64),
            op_count=int(op_count),
            output=output,
            switches=switches,
        )


def _axis_segments(extent, k, s, p, n_out):
    """Consecutive output runs sharing one valid kernel-offset range."""
    segs = []
    for o in range(n_out):
        lo = max(0, p - o * s)
        hi = min(k, extent + p - o * s)
        if hi <= lo:
            continue
        if segs and segs[-1][1] == lo and segs[-1][2] == hi \
                and segs[-1][0] + segs[-1][3] == o:
            segs[-1] = (segs[-1][0], lo, hi, segs[-1][3] + 1)
        else:
            segs.append((o, lo, hi, 1))
    return segs  # (first_out, lo, hi, count)


# ---------------------------------------------------------------------------
# per-kind generators
# ---------------------------------------------------------------------------

def _gen_conv(spec, params, x, b: _Builder):
    n, ci, h, w = spec.input_shape
    hp = spec.hp
    co, k, s, p = hp["out_channels"], hp["kernel"], hp.get("stride", 1), hp.get("pad", 0)
    _, _, ho, wo = output_shape(spec)
    sparse = spec.sparsity < 1.0
    wgt = params.get("weight") if sparse else None
    kinds_row = regions_row = None
    hsegs = _axis_segments(h, k, s, p, ho)
    wsegs = _axis_segments(w, k, s, p, wo)
    total_macs = 0
    nnz_macs = 0
    for nb in range(n):
        for h0, lo_h, hi_h, hcnt in hsegs:
            for hoff in range(hcnt):
                oh = h0 + hoff
                for w0, lo_w, hi_w, wcnt in wsegs:
                    wos = np.arange(w0, w0 + wcnt)
                    vh, vw = hi_h - lo_h, hi_w - lo_w
                    m = ci * vh * vw
                    ci_ix, kh_ix, kw_ix = np.meshgrid(
                        np.arange(ci), np.arange(lo_h, hi_h), np.arange(lo_w, hi_w),
                        indexing="ij",
                    )
                    hi_pos = oh * s + kh_ix - p
                    x_pat = (nb * ci + ci_ix) * h * w + hi_pos * w + (kw_ix - p)
                    # x index still needs the wo*s column term, added per row
                    x_flat = x_pat.reshape(1, m)
                    x_rows = x_flat + (wos * s)[:, None]          # (wcnt, m)
                    x_rows = np.repeat(x_rows, co, axis=0)        # [wo][co] order
                    w_pat = (ci_ix * k + kh_ix) * k + kw_ix       # within one filter
                    w_rows = w_pat.reshape(1, m) + (np.arange(co) * ci * k * k)[:, None]
                    w_rows = np.tile(w_rows, (wcnt, 1))
                    rows = wcnt * co
                    block = np.empty((rows, 2 * m + 2), dtype=np.uint64)
                    block[:, 0] = addr(3, np.tile(np.arange(co), wcnt))          # bias
                    block[:, 1 : 1 + 2 * m : 2] = addr(0, x_rows)
                    block[:, 2 : 2 + 2 * m : 2] = addr(2, w_rows)
                    y_ix = (
                        nb * co * ho * wo
                        + np.tile(np.arange(co), wcnt) * (ho * wo)
                        + oh * wo
                        + np.repeat(wos, co)
                    )
                    block[:, -1] = addr(1, y_ix)
                    if kinds_row is None or kinds_row.size != 2 * m + 2:
                        kinds_row = np.array([READ] + [READ, READ] * m + [WRITE], np.uint8)
                        regions_row = np.array([R_WGH] + [R_IN, R_WGH] * m + [R_OUT], np.uint8)
                    base = b.block(block, kinds_row, regions_row)
                    total_macs += rows * m
                    if sparse:
                        wvals = wgt.reshape(-1)[w_rows.reshape(-1)]
                        taken = wvals != 0
                        nnz_macs += int(taken.sum())
                        after = (
                            base
                            + (np.arange(rows) * (2 * m + 2))[:, None]
                            + 2 + 2 * np.arange(m)[None, :]
                        )
                        b.branches(SITE_SPARSE, taken, after)
    outs = n * co * ho * wo
    b.ops = 2 * (nnz_macs if sparse else total_macs) + outs


def _gen_fc(spec, params, x, b: _Builder):
    nfeat, m = spec.hp["in_features"], spec.hp["out_features"]
    bsz = int(np.prod(spec.input_shape)) // nfeat
    sparse = spec.sparsity < 1.0
    x_base = addr(0, np.arange(bsz * nfeat).reshape(bsz, nfeat))
    w_base = addr(2, np.arange(m * nfeat).reshape(m, nfeat))
    rows = bsz * m
    block = np.empty((rows, 2 * nfeat + 2), dtype=np.uint64)
    block[:, 0] = addr(3, np.tile(np.arange(m), bsz))
    block[:, 1 : 1 + 2 * nfeat : 2] = np.repeat(x_base, m, axis=0)
    block[:, 2 : 2 + 2 * nfeat : 2] = np.tile(w_base, (bsz, 1))
    block[:, -1] = addr(1, np.arange(rows))
    kinds_row = np.array([READ] + [READ, READ] * nfeat + [WRITE], np.uint8)
    regions_row = np.array([R_WGH] + [R_IN, R_WGH] * nfeat + [R_OUT], np.uint8)
    base = b.block(block, kinds_row, regions_row)
    macs = rows * nfeat
    if sparse:
        wvals = np.tile(params["weight"].reshape(m, nfeat), (bsz, 1))
        taken = (wvals != 0).reshape(-1)
        after = (
            base
            + (np.arange(rows) * (2 * nfeat + 2))[:, None]
            + 2 + 2 * np.arange(nfeat)[None, :]
        )
        b.branches(SITE_SPARSE, taken, after)
        b.ops = 2 * int(taken.sum()) + rows
    else:
        b.ops = 2 * macs + rows


def _pool_window_addrs(n, c, h, w, k, s, ho, wo):
    r_ix, q_ix = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    win = (r_ix * w + q_ix).reshape(-1)                       # (k*k,)
    oh_ix, ow_ix = np.meshgrid(np.arange(ho), np.arange(wo), indexing="ij")
    origin = (oh_ix * s) * w + ow_ix * s                      # (ho, wo)
    grid = origin.reshape(-1, 1) + win[None, :]               # (ho*wo, k2)
    chan = (np.arange(n * c) * h * w).reshape(-1, 1, 1)
    return (chan + grid[None, :, :]).reshape(n * c * ho * wo, k * k)


def _gen_pool(spec, params, x, b: _Builder):
    n, c, h, w = spec.input_shape
    k, s = spec.hp["window"], spec.hp.get("stride", spec.hp["window"])
    _, _, ho, wo = output_shape(spec)
    reads = _pool_window_addrs(n, c, h, w, k, s, ho, wo)
    rows = reads.shape[0]
    block = np.empty((rows, k * k + 1), dtype=np.uint64)
    block[:, : k * k] = addr(0, reads)
    block[:, -1] = addr(1, np.arange(rows))
    kinds_row = np.array([READ] * (k * k) + [WRITE], np.uint8)
    regions_row = np.array([R_IN] * (k * k) + [R_OUT], np.uint8)
    base = b.block(block, kinds_row, regions_row)
    if spec.kind == KIND_POOL_MAX:
        vals = x.reshape(-1)[reads]
        runmax = np.maximum.accumulate(vals, axis=1)
        taken = vals[:, 1:] > runmax[:, :-1]
        after = base + (np.arange(rows) * (k * k + 1))[:, None] + np.arange(1, k * k)[None, :]
        b.branches(SITE_MAXPOOL, taken, after)
        b.ops = rows * (k * k - 1)
    else:
        b.ops = rows * k * k


def _gen_activation(spec, params, x, b: _Builder):
    n = int(np.prod(spec.input_shape))
    block = np.empty((n, 2), dtype=np.uint64)
    block[:, 0] = addr(0, np.arange(n))
    block[:, 1] = addr(1, np.arange(n))
    base = b.block(block, [READ, WRITE], [R_IN, R_OUT])
    if spec.kind == KIND_RELU:
        taken = x.reshape(-1) > 0
        after = base + 2 * np.arange(n, dtype=np.uint64)
        b.branches(SITE_RELU, taken, after)
        b.ops = n
    else:
        b.ops = 3 * n


def _gen_lrn(spec, params, x, b: _Builder):
    n, c, h, w = spec.input_shape
    local = spec.hp.get("local_size", 5)
    half = local // 2
    hw = h * w
    pos = np.arange(hw)
    for nb in range(n):
        for ci in range(c):
            lo, hi = max(0, ci - half), min(c, ci + half + 1)
            wc = hi - lo
            block = np.empty((hw, wc + 1), dtype=np.uint64)
            for j, cj in enumerate(range(lo, hi)):
                block[:, j] = addr(0, (nb * c + cj) * hw + pos)
            block[:, -1] = addr(1, (nb * c + ci) * hw + pos)
            b.block(block, [READ] * wc + [WRITE], [R_IN] * wc + [R_OUT])
            b.ops += hw * (2 * wc + 4)


def _gen_bn(spec, params, x, b: _Builder):
    n, c, h, w = spec.input_shape
    hw = h * w
    plane = np.arange(n).reshape(-1, 1) * (c * hw) + np.arange(hw)[None, :]
    for ci in range(c):
        elems = (plane + ci * hw).reshape(-1)
        b.block(addr(0, elems).reshape(-1, 1), [READ], [R_IN])
        gb = np.empty((1, 2), dtype=np.uint64)
        gb[0, 0] = addr(2, ci)
        gb[0, 1] = addr(3, ci)
        b.block(gb, [READ, READ], [R_WGH, R_WGH])
        block = np.empty((elems.size, 2), dtype=np.uint64)
        block[:, 0] = addr(0, elems)
        block[:, 1] = addr(1, elems)
        b.block(block, [READ, WRITE], [R_IN, R_OUT])
        b.ops += 7 * elems.size + 7


def _gen_deconv(spec, params, x, b: _Builder):
    n, ci, h, w = spec.input_shape
    hp = spec.hp
    co, k, s, p = hp["out_channels"], hp["kernel"], hp.get("stride", 1), hp.get("pad", 0)
    _, _, ho, wo = output_shape(spec)
    hsegs = _axis_segments_scatter(h, k, s, p, ho)
    wsegs = _axis_segments_scatter(w, k, s, p, wo)
    contribs = 0
    for nb in range(n):
        for ci_i in range(ci):
            for i0, lo_h, hi_h, hcnt in hsegs:
                for hoff in range(hcnt):
                    ih = i0 + hoff
                    for w0, lo_w, hi_w, wcnt in wsegs:
                        wis = np.arange(w0, w0 + wcnt)
                        vh, vw = hi_h - lo_h, hi_w - lo_w
                        m = co * vh * vw
                        co_ix, kh_ix, kw_ix = np.meshgrid(
                            np.arange(co), np.arange(lo_h, hi_h), np.arange(lo_w, hi_w),
                            indexing="ij",
                        )
                        w_pat = ((ci_i * co + co_ix) * k + kh_ix) * k + kw_ix
                        oh = ih * s + kh_ix - p
                        y_pat = (nb * co + co_ix) * ho * wo + oh * wo + (kw_ix - p)
                        y_rows = y_pat.reshape(1, m) + (wis * s)[:, None]
                        block = np.empty((wcnt, 1 + 3 * m), dtype=np.uint64)
                        block[:, 0] = addr(0, (nb * ci + ci_i) * h * w + ih * w + wis)
                        block[:, 1 : 1 + 3 * m : 3] = addr(2, np.tile(w_pat.reshape(1, m), (wcnt, 1)))
                        block[:, 2 : 2 + 3 * m : 3] = addr(1, y_rows)
                        block[:, 3 : 3 + 3 * m : 3] = addr(1, y_rows)
                        kinds_row = np.array([READ] + [READ, READ, WRITE] * m, np.uint8)
                        regions_row = np.array([R_IN] + [R_WGH, R_OUT, R_OUT] * m, np.uint8)
                        b.block(block, kinds_row, regions_row)
                        contribs += wcnt * m
    outs = n * co * ho * wo
    for nb in range(n):
        for co_i in range(co):
            b.block(addr(3, np.array([[co_i]])), [READ], [R_WGH])
            y_ix = (nb * co + co_i) * ho * wo + np.arange(ho * wo)
            block = np.empty((ho * wo, 2), dtype=np.uint64)
            block[:, 0] = addr(1, y_ix)
            block[:, 1] = addr(1, y_ix)
            b.block(block, [READ, WRITE], [R_OUT, R_OUT])
    b.ops = 2 * contribs + outs


def _axis_segments_scatter(extent, k, s, p, out_extent):
    segs = []
    for i in range(extent):
        lo = max(0, p - i * s)
        hi = min(k, out_extent + p - i * s)
        if hi <= lo:
            continue
        if segs and segs[-1][1] == lo and segs[-1][2] == hi \
                and segs[-1][0] + segs[-1][3] == i:
            segs[-1] = (segs[-1][0], lo, hi, segs[-1][3] + 1)
        else:
            segs.append((i, lo, hi, 1))
    return segs


def _gen_unpool(spec, params, x, b: _Builder, switches):
    n, c, h, w = spec.input_shape
    k = spec.hp["window"]
    s = spec.hp.get("stride", k)
    _, _, ho, wo = output_shape(spec)
    ins = n * c * h * w
    outs = n * c * ho * wo
    if spec.kind == KIND_UNPOOL_MAX:
        b.block(addr(1, np.arange(outs)).reshape(1, -1), [WRITE] * outs, [R_OUT] * outs)
        sw = switches.idx.reshape(-1)
        hi_ix, wi_ix = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        oh_full = np.tile((hi_ix * s).reshape(-1), n * c) + (sw // k)
        ow_full = np.tile((wi_ix * s).reshape(-1), n * c) + (sw % k)
        y_ix = np.repeat(np.arange(n * c) * (ho * wo), h * w) + oh_full * wo + ow_full
        block = np.empty((ins, 3), dtype=np.uint64)
        block[:, 0] = addr(0, np.arange(ins))
        block[:, 1] = addr(4, np.arange(ins))
        block[:, 2] = addr(1, y_ix)
        base = b.block(block, [READ, READ, WRITE], [R_IN, R_IN, R_OUT])
        taken = np.arange(k * k)[None, :] == sw[:, None]
        after = base + 3 * np.arange(ins, dtype=np.uint64)[:, None] + 1
        b.branches(SITE_UNPOOL, taken, np.broadcast_to(after, taken.shape))
        b.ops = ins
    else:
        r_ix, q_ix = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
        win = (r_ix * wo + q_ix).reshape(-1)
        hi_ix, wi_ix = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        origin = (hi_ix * s) * wo + wi_ix * s
        grid = origin.reshape(-1, 1) + win[None, :]
        chan = (np.arange(n * c) * ho * wo).reshape(-1, 1, 1)
        y_ix = (chan + grid[None, :, :]).reshape(ins, k * k)
        if s > k:
            covered = np.zeros(outs, dtype=bool)
            covered[(y_ix.reshape(-1))] = True
            gaps = np.nonzero(~covered)[0]
            if gaps.size:
                b.block(addr(1, gaps).reshape(1, -1), [WRITE] * gaps.size, [R_OUT] * gaps.size)
        block = np.empty((ins, 1 + k * k), dtype=np.uint64)
        block[:, 0] = addr(0, np.arange(ins))
        block[:, 1:] = addr(1, y_ix)
        b.block(block, [READ] + [WRITE] * (k * k), [R_IN] + [R_OUT] * (k * k))
        b.ops = ins * (1 + k * k)


def _gen_lstm(spec, params, x, b: _Builder):
    bsz, isz = spec.input_shape
    hsz, steps = spec.hp["hidden"], spec.hp["steps"]
    r = np.arange(hsz)
    for t in range(steps):
        rec = t > 0
        gl = 1 + 2 * isz + (2 * hsz if rec else 0)
        tail = 3 if rec else 2
        for nb in range(bsz):
            block = np.empty((hsz, 4 * gl + tail), dtype=np.uint64)
            colk = np.empty(4 * gl + tail, dtype=np.uint8)
            colr = np.empty(4 * gl + tail, dtype=np.uint8)
            for g in range(4):
                c0 = g * gl
                block[:, c0] = addr(3, g * hsz + r)
                colk[c0], colr[c0] = READ, R_WGH
                xa = addr(0, (t * bsz + nb) * isz + np.arange(isz))
                block[:, c0 + 1 : c0 + 1 + 2 * isz : 2] = xa[None, :]
                wxa = (g * hsz + r)[:, None] * isz + np.arange(isz)[None, :]
                block[:, c0 + 2 : c0 + 2 + 2 * isz : 2] = addr(2, wxa)
                colk[c0 + 1 : c0 + 1 + 2 * isz] = READ
                colr[c0 + 1 : c0 + 1 + 2 * isz : 2] = R_IN
                colr[c0 + 2 : c0 + 2 + 2 * isz : 2] = R_WGH
                if rec:
                    hbase = c0 + 1 + 2 * isz
                    ha = addr(1, ((t - 1) * bsz + nb) * hsz + np.arange(hsz))
                    block[:, hbase : hbase + 2 * hsz : 2] = ha[None, :]
                    wha = (g * hsz + r)[:, None] * hsz + np.arange(hsz)[None, :]
                    block[:, hbase + 1 : hbase + 1 + 2 * hsz : 2] = addr(6, wha)
                    colk[hbase : hbase + 2 * hsz] = READ
                    colr[hbase : hbase + 2 * hsz : 2] = R_OUT
                    colr[hbase + 1 : hbase + 1 + 2 * hsz : 2] = R_WGH
            ca = addr(5, nb * hsz + r)
            hw_a = addr(1, (t * bsz + nb) * hsz + r)
            if rec:
                block[:, -3], block[:, -2], block[:, -1] = ca, ca, hw_a
                colk[-3:] = [READ, WRITE, WRITE]
                colr[-3:] = [R_OUT, R_OUT, R_OUT]
            else:
                block[:, -2], block[:, -1] = ca, hw_a
                colk[-2:] = [WRITE, WRITE]
                colr[-2:] = [R_OUT, R_OUT]
            b.block(block, colk, colr)
            per_row = 4 * (2 * isz + (2 * hsz if rec else 0) + 4) + (3 if rec else 2) + 4
            b.ops += hsz * per_row


_GENERATORS = {
    KIND_CONV: _gen_conv,
    KIND_FC: _gen_fc,
    KIND_POOL_AVG: _gen_pool,
    KIND_POOL_MAX: _gen_pool,
    KIND_RELU: _gen_activation,
    KIND_SIGMOID: _gen_activation,
    KIND_LRN: _gen_lrn,
    KIND_BN: _gen_bn,
    KIND_DECONV: _gen_deconv,
    KIND_UNPOOL_AVG: _gen_unpool,
    KIND_UNPOOL_MAX: _gen_unpool,
    KIND_LSTM: _gen_lstm,
}


def predicted_events(spec: LayerSpec) -> int:
    prof = analyze(spec)
    return prof.ops + prof.touches + prof.branches


def trace_layer(spec: LayerSpec, params: Optional[dict] = None,
                x: Optional[np.ndarray] = None, seed: int = 0,
                budget: int = DEFAULT_EVENT_BUDGET,
                switches: Optional[PoolSwitches] = None) -> Trace:
    """Instrumented forward pass of one layer.

    Raises AnalyticOnlyError when the predicted event count exceeds the
    budget; such configurations are served by the analytic path.
    """
    cost = predicted_events(spec)
    if cost > budget:
        raise AnalyticOnlyError(
            f"analytic-only configuration: predicted {cost:.3g} events exceed the "
            f"budget of {budget:.3g}; use the analytic characterization path"
        )
    if params is None:
        from .registry.params import instantiate_params

        params = instantiate_params(spec, seed).layer(0)
    if x is None:
        x = generate_input(spec, seed)
    if spec.kind == KIND_UNPOOL_MAX and switches is None:
        switches = generate_unpool_switches(spec, seed)
    out = forward_layer(spec, params, x, switches=switches)
    b = _Builder()
    if spec.kind in (KIND_UNPOOL_MAX, KIND_UNPOOL_AVG):
        _GENERATORS[spec.kind](spec, params, x, b, switches)
    else:
        _GENERATORS[spec.kind](spec, params, x, b)
    return b.finish(out.y, b.ops, out.switches)


def simulate_predictor(trace: Trace) -> tuple[float, float]:
    """(PR, MPR) under per-site 2-bit saturating counters, weakly-taken init.

    PR is branch events over (branch events + arithmetic ops + access
    events), a documented instruction-count proxy.  Zero branches gives
    (0, 0).
    """
    nb = trace.branch_events
    if nb == 0:
        return 0.0, 0.0
    pr = nb / (nb + trace.op_count + trace.mem_events)
    missed = 0
    for site in np.unique(trace.br_sites):
        taken = trace.br_taken[trace.br_sites == site]
        missed += _count_mispredicts(taken)
    return pr, missed / nb


def _count_mispredicts(taken: np.ndarray) -> int:
    state = 2  # weakly taken
    miss = 0
    for t in taken.tolist():
        if (state >= 2) != t:
            miss += 1
        if t:
            state = min(3, state + 1)
        else:
            state = max(0, state - 1)
    return miss


# ---------------------------------------------------------------------------
# binary dump (docs/trace-format.md)
# ---------------------------------------------------------------------------

_DUMP_MAGIC = b"NTRC"
_TAG_ACCESS = 0x01
_TAG_BRANCH = 0x02


def dump_trace(trace: Trace, path) -> None:
    """Interleaved little-endian event records: 1-byte tag per record."""
    import struct

    order = _interleave_order(trace)
    with open(path, "wb") as f:
        f.write(_DUMP_MAGIC + struct.pack("<HHQ", 1, 0, len(order)))
        ai = bi = 0
        for is_branch in order:
            if is_branch:
                f.write(struct.pack("<BIB", _TAG_BRANCH, int(trace.br_sites[bi]),
                                    int(trace.br_taken[bi])))
                bi += 1
            else:
                f.write(struct.pack("<BQBB", _TAG_ACCESS, int(trace.addrs[ai]),
                                    int(trace.kinds[ai]), int(trace.regions[ai])))
                ai += 1


def load_trace_events(path):
    """Parse a dump back into (accesses, branches) tuples, program order."""
    import struct

    accesses, branches = [], []
    with open(path, "rb") as f:
        head = f.read(16)
        if head[:4] != _DUMP_MAGIC:
            raise SpecError(f"{path}: not a trace dump")
        (count,) = struct.unpack("<Q", head[8:16])
        for _ in range(count):
            tag = f.read(1)[0]
            if tag == _TAG_ACCESS:
                a, k, r = struct.unpack("<QBB", f.read(10))
                accesses.append((a, k, r))
            elif tag == _TAG_BRANCH:
                s, t = struct.unpack("<IB", f.read(5))
                branches.append((s, bool(t)))
            else:
                raise SpecError(f"{path}: unknown record tag {tag}")
    return accesses, branches


def _interleave_order(trace: Trace) -> np.ndarray:
    """True where a branch record goes, stably after its anchor access."""
    n_acc, n_br = trace.mem_events, trace.branch_events
    order = np.zeros(n_acc + n_br, dtype=bool)
    if n_br:
        # branch i sits after access br_after[i] and after earlier branches
        pos = np.sort(trace.br_after.astype(np.int64))
        slots = pos + 1 + np.arange(n_br)
        order[slots] = True
    return order
