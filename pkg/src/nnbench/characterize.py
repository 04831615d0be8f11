"""Architecture-independent characterization of one workload.

The ten-field characteristic vector covers memory behavior (total modeled
memory accesses, reuse-distance statistics, input/output/weight footprints),
computation (operation count, op/access ratio, computation-pattern class)
and control behavior (branch ratio and misprediction ratio under the modeled
predictor).

Reuse distance counts the DISTINCT elements accessed strictly between two
consecutive accesses to the same element.  First touches are excluded from
the average; a trace with no reuses reports the average as absent, never
zero.  Two implementations ship: an exact vectorized offline algorithm
(prefix dominance counting over previous-occurrence indices) and a
quadratic set-scan oracle used to verify it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analytic import BUFFER_ELEMS, COM_PTT, AnalyticProfile, analyze
from .kernels import AnalyticOnlyError
from .trace import DEFAULT_EVENT_BUDGET, READ, WRITE, R_IN, R_OUT, R_WGH, Trace, simulate_predictor, trace_layer
from .types import LayerSpec

# log2 histogram buckets: one for distance 0, one per power of two up to
# 2^30, and a final bucket for everything at or above 2^30.
HIST_LABELS = ["0"] + [f"2^{k}" for k in range(30)] + ["2^30+"]
N_BUCKETS = len(HIST_LABELS)


def prev_occurrence(addrs: np.ndarray) -> np.ndarray:
    """prev[i] = index of the previous access to addrs[i], or -1."""
    n = addrs.size
    prev = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return prev
    order = np.argsort(addrs, kind="stable")
    sa = addrs[order]
    same = sa[1:] == sa[:-1]
    prev[order[1:][same]] = order[:-1][same]
    return prev


def _prefix_dominance(values: np.ndarray, xs: np.ndarray, ts: np.ndarray,
                      block: int = 512) -> np.ndarray:
    """For each query q: #{j < xs[q] : values[j] <= ts[q]}.

    Offline block sweep: completed blocks are kept as sorted runs (merged in
    doubling sizes) and answered with searchsorted; the partial block is
    answered by a bounded broadcast.  xs must be nondecreasing.
    """
    n = values.size
    nq = xs.size
    res = np.zeros(nq, dtype=np.int64)
    if nq == 0:
        return res
    runs: list[np.ndarray] = []
    qi = 0
    for bs in range(0, int(xs[-1]) + 1, block):
        be = min(bs + block, n)
        qe = qi
        while qe < nq and xs[qe] < be:
            qe += 1
        if qe > qi:
            sel = slice(qi, qe)
            tq = ts[sel]
            for run in runs:
                res[sel] += np.searchsorted(run, tq, side="right")
            vb = values[bs:be]
            rel = (xs[sel] - bs).astype(np.int64)
            inside = np.arange(vb.size)[None, :] < rel[:, None]
            res[sel] += ((vb[None, :] <= tq[:, None]) & inside).sum(axis=1)
            qi = qe
        runs.append(np.sort(values[bs:be]))
        while len(runs) >= 2 and runs[-1].size >= runs[-2].size:
            b2 = runs.pop()
            b1 = runs.pop()
            runs.append(np.sort(np.concatenate([b1, b2])))
        if qi >= nq:
            break
    return res


def reuse_distances(addrs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact reuse distances of an access stream.

    Returns (positions, distances): for each access position i that reuses
    an element, the count of distinct elements accessed strictly between i
    and the element's previous access.  O(N log N) sorting plus a blocked
    O(N * block) partial count.
    """
    prev = prev_occurrence(addrs)
    pos = np.nonzero(prev >= 0)[0]
    if pos.size == 0:
        return pos, np.zeros(0, dtype=np.int64)
    a = prev[pos]
    # distinct-in-window = #{j < i : prev[j] <= a} - (a + 1); every j <= a
    # trivially satisfies prev[j] < j <= a, hence the closed correction term.
    counts = _prefix_dominance(prev, pos, a)
    return pos, counts - (a + 1)


def reuse_distances_naive(addrs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic oracle: a literal set scan per reuse."""
    last: dict[int, int] = {}
    pos, dist = [], []
    lst = addrs.tolist()
    for i, a in enumerate(lst):
        p = last.get(a)
        if p is not None:
            pos.append(i)
            dist.append(len(set(lst[p + 1 : i])))
        last[a] = i
    return np.asarray(pos, dtype=np.int64), np.asarray(dist, dtype=np.int64)


def histogram(distances: np.ndarray) -> np.ndarray:
    """Counts per HIST_LABELS bucket."""
    h = np.zeros(N_BUCKETS, dtype=np.int64)
    if distances.size == 0:
        return h
    d = distances
    h[0] = int((d == 0).sum())
    nz = d[d > 0]
    if nz.size:
        exp = np.minimum(np.log2(nz.astype(np.float64)).astype(np.int64), 30)
        np.add.at(h, exp + 1, 1)
    return h


@dataclass
class ReuseProfile:
    count: int
    avg: Optional[float]
    hist: np.ndarray

    @classmethod
    def from_distances(cls, distances: np.ndarray) -> "ReuseProfile":
        if distances.size == 0:
            return cls(0, None, histogram(distances))
        return cls(int(distances.size), float(distances.mean()), histogram(distances))


def reuse_profile(trace: Trace) -> ReuseProfile:
    """Per-reuse distances of a trace's access stream, summarized."""
    _, dists = reuse_distances(trace.addrs)
    return ReuseProfile.from_distances(dists)


def memacc_from_trace(trace: Trace, buffer_elems: int = BUFFER_ELEMS) -> int:
    """Modeled memory traffic of a trace (see analytic module docstring).

    Reads miss when first-touch or when their reuse distance reaches the
    buffer capacity; every distinct written element flushes once.
    """
    addrs, kinds = trace.addrs, trace.kinds
    prev = prev_occurrence(addrs)
    reads = kinds == READ
    misses = int((reads & (prev < 0)).sum())
    idx = np.arange(addrs.size, dtype=np.int64)
    wide = reads & (prev >= 0) & ((idx - prev - 1) >= buffer_elems)
    for i in np.nonzero(wide)[0]:
        window = addrs[prev[i] + 1 : i]
        if np.unique(window).size >= buffer_elems:
            misses += 1
    distinct_writes = int(np.unique(addrs[kinds == WRITE]).size)
    return misses + distinct_writes


@dataclass
class CharacteristicVector:
    """The ten-field characterization of one workload instance."""

    kind: str
    com_ptt: str
    mem_acc: int
    ops: int
    in_mem: int
    out_mem: int
    wgh_mem: int
    op_mem: float
    redist_avg: Optional[float] = None
    redist_hist: Optional[np.ndarray] = None
    pr: Optional[float] = None
    mpr: Optional[float] = None
    source: str = "trace"
    benchmark: str = ""
    config: str = ""
    variant: str = "dense"

    CSV_COLUMNS = (
        ["benchmark", "kind", "config", "variant", "source", "com_ptt",
         "mem_acc", "redist_avg", "in_mem", "out_mem", "wgh_mem", "ops",
         "op_mem", "pr", "mpr"]
        + [f"redist_h_{lbl}" for lbl in HIST_LABELS]
    )

    def to_csv_row(self) -> list:
        def cell(v):
            return "" if v is None else v

        hist = [""] * N_BUCKETS if self.redist_hist is None else [int(x) for x in self.redist_hist]
        return [
            self.benchmark, self.kind, self.config, self.variant, self.source,
            self.com_ptt, self.mem_acc, cell(self.redist_avg), self.in_mem,
            self.out_mem, self.wgh_mem, self.ops, self.op_mem, cell(self.pr),
            cell(self.mpr),
        ] + hist

    def to_json_obj(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "kind": self.kind,
            "config": self.config,
            "variant": self.variant,
            "source": self.source,
            "com_ptt": self.com_ptt,
            "mem_acc": self.mem_acc,
            "redist_avg": self.redist_avg,
            "redist_hist": None if self.redist_hist is None else {
                lbl: int(c) for lbl, c in zip(HIST_LABELS, self.redist_hist)
            },
            "in_mem": self.in_mem,
            "out_mem": self.out_mem,
            "wgh_mem": self.wgh_mem,
            "ops": self.ops,
            "op_mem": self.op_mem,
            "pr": self.pr,
            "mpr": self.mpr,
        }


def analytic_characteristics(spec: LayerSpec, profile: Optional[AnalyticProfile] = None) -> CharacteristicVector:
    """Closed-form partial vector; trace-dependent fields stay absent."""
    prof = profile or analyze(spec)
    return CharacteristicVector(
        kind=spec.kind,
        com_ptt=COM_PTT[spec.kind],
        mem_acc=prof.mem_acc,
        ops=prof.ops,
        in_mem=prof.in_mem,
        out_mem=prof.out_mem,
        wgh_mem=prof.wgh_mem,
        op_mem=prof.op_mem,
        source="analytic",
    )


def characterize_trace(trace: Trace, kind: str) -> CharacteristicVector:
    """Full vector measured from an instrumented execution."""
    mem_acc = memacc_from_trace(trace)
    reuse = reuse_profile(trace)
    pr, mpr = simulate_predictor(trace)
    footprints = {
        rg: int(np.unique(trace.addrs[trace.regions == rg]).size)
        for rg in (R_IN, R_OUT, R_WGH)
    }
    return CharacteristicVector(
        kind=kind,
        com_ptt=COM_PTT[kind],
        mem_acc=mem_acc,
        ops=trace.op_count,
        in_mem=footprints[R_IN],
        out_mem=footprints[R_OUT],
        wgh_mem=footprints[R_WGH],
        op_mem=trace.op_count / mem_acc if mem_acc else float("nan"),
        redist_avg=reuse.avg,
        redist_hist=reuse.hist,
        pr=pr,
        mpr=mpr,
        source="trace",
    )


def characterize(spec: LayerSpec, params: Optional[dict] = None,
                 x: Optional[np.ndarray] = None, seed: int = 0,
                 budget: int = DEFAULT_EVENT_BUDGET) -> CharacteristicVector:
    """Trace-based vector when the spec fits the budget, analytic otherwise."""
    try:
        tr = trace_layer(spec, params=params, x=x, seed=seed, budget=budget)
    except AnalyticOnlyError:
        return analytic_characteristics(spec)
    return characterize_trace(tr, spec.kind)
