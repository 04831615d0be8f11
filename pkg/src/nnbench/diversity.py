"""Suite-level diversity analyses.

Macro networks become 12-slot feature vectors (analytic operation amounts
summed per layer kind, density-scaled for sparse variants) which feed
Euclidean-distance agglomerative clustering and a Pearson correlation
heatmap.  Micro characterization vectors are min-max rescaled per axis for
radar-style rendering.

Clustering is deterministic: cluster distances accumulate leaf pairs in
lexicographic name order and ties break on the lexicographically smallest
pair of cluster keys, so permuting the input never changes the topology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analytic import analyze
from .characterize import CharacteristicVector
from .types import ALL_KINDS, NetworkDescriptor, SpecError

FEATURE_SLOTS = ALL_KINDS  # fixed, documented slot order


@dataclass
class FeatureVector:
    name: str
    values: np.ndarray  # float64, len(FEATURE_SLOTS), nonnegative

    def as_dict(self) -> dict:
        return {"name": self.name,
                "values": {k: float(v) for k, v in zip(FEATURE_SLOTS, self.values)}}


def feature_vector(desc: NetworkDescriptor) -> FeatureVector:
    """Per-kind analytic operation amounts of one network."""
    slots = np.zeros(len(FEATURE_SLOTS), dtype=np.float64)
    index = {k: i for i, k in enumerate(FEATURE_SLOTS)}
    for spec in desc.layers:
        slots[index[spec.kind]] += analyze(spec).ops
    return FeatureVector(desc.name, slots)


@dataclass
class Dendrogram:
    """Binary merge tree; heights are linkage distances."""

    name: Optional[str] = None            # leaf label
    height: float = 0.0
    children: tuple = ()                  # () for leaves, (left, right) for merges
    members: tuple[str, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> list[str]:
        return list(self.members)

    def merges(self) -> list["Dendrogram"]:
        out = []
        if self.children:
            out.append(self)
            for c in self.children:
                out.extend(c.merges())
        return out

    def to_json_obj(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.name}
        return {"height": self.height,
                "children": [c.to_json_obj() for c in self.children]}

    def to_newick(self) -> str:
        def render(node, parent_height):
            length = parent_height - node.height
            if node.is_leaf:
                return f"{node.name}:{length:.17g}"
            inner = ",".join(render(c, node.height) for c in node.children)
            return f"({inner}):{length:.17g}"

        if self.is_leaf:
            return f"{self.name};"
        inner = ",".join(render(c, self.height) for c in self.children)
        return f"({inner}):0;"

    def first_merge_of(self, leaf: str) -> "Dendrogram":
        """The first (innermost) merge involving `leaf`."""
        holding = [m for m in self.merges() if leaf in m.members]
        if not holding:
            raise SpecError(f"leaf {leaf!r} not in dendrogram")
        return min(holding, key=lambda m: len(m.members))


def _leaf(name: str) -> Dendrogram:
    return Dendrogram(name=name, height=0.0, children=(), members=(name,))


def hierarchical_cluster(vectors: list[FeatureVector],
                         linkage: str = "average") -> Dendrogram:
    """Agglomerative clustering on Euclidean distances.

    linkage: average (default), complete, or single.
    """
    if linkage not in ("average", "complete", "single"):
        raise SpecError(f"unknown linkage {linkage!r}")
    if len(vectors) < 2:
        raise SpecError("clustering needs at least 2 vectors")
    names = [v.name for v in vectors]
    if len(set(names)) != len(names):
        raise SpecError("duplicate vector names")
    by_name = {v.name: np.asarray(v.values, dtype=np.float64) for v in vectors}
    ordered = sorted(names)
    dist = {}
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            dist[(a, b)] = float(np.linalg.norm(by_name[a] - by_name[b]))

    def leaf_dist(a, b):
        return dist[(a, b) if a < b else (b, a)]

    def cluster_dist(ca: Dendrogram, cb: Dendrogram) -> float:
        # members are kept sorted, so accumulation order is canonical
        pairs = [leaf_dist(a, b) for a in ca.members for b in cb.members]
        if linkage == "single":
            return min(pairs)
        if linkage == "complete":
            return max(pairs)
        return math.fsum(pairs) / len(pairs)

    active = [_leaf(n) for n in ordered]
    while len(active) > 1:
        best = None
        for i in range(len(active)):
            for j in range(i + 1, len(active)):
                d = cluster_dist(active[i], active[j])
                key = tuple(sorted((active[i].members[0], active[j].members[0])))
                cand = (d, key, i, j)
                if best is None or cand[:2] < best[:2]:
                    best = cand
        d, _, i, j = best
        left, right = active[i], active[j]
        if right.members[0] < left.members[0]:
            left, right = right, left
        merged = Dendrogram(
            name=None, height=d, children=(left, right),
            members=tuple(sorted(left.members + right.members)),
        )
        active = [c for k, c in enumerate(active) if k not in (i, j)] + [merged]
    return active[0]


def diversity_summary(tree: Dendrogram) -> dict:
    """Geometric-mean / max merge height and the share of leaves whose first
    merge sits strictly above the geometric mean."""
    merges = tree.merges()
    if not merges:
        raise SpecError("summary needs at least one merge")
    heights = [m.height for m in merges]
    positive = [h for h in heights if h > 0]
    if positive:
        geo = math.exp(math.fsum(math.log(h) for h in positive) / len(positive))
    else:
        geo = 0.0
    leaves = tree.leaves()
    above = sum(1 for leaf in leaves if tree.first_merge_of(leaf).height > geo)
    return {
        "geomean_height": geo,
        "max_height": max(heights),
        "geomean_fraction_of_max": geo / max(heights) if max(heights) else None,
        "fraction_first_merge_above_geomean": above / len(leaves),
        "n_leaves": len(leaves),
    }


def correlation_matrix(vectors: list[FeatureVector]):
    """Symmetric Pearson correlation matrix; zero-variance rows are null."""
    n = len(vectors)
    mat: list[list[Optional[float]]] = [[None] * n for _ in range(n)]
    arrs = [np.asarray(v.values, dtype=np.float64) for v in vectors]
    stds = [float(a.std()) for a in arrs]
    for i in range(n):
        if stds[i] == 0.0:
            continue
        mat[i][i] = 1.0
        for j in range(i + 1, n):
            if stds[j] == 0.0:
                continue
            ai, aj = arrs[i], arrs[j]
            c = float(((ai - ai.mean()) * (aj - aj.mean())).mean() / (stds[i] * stds[j]))
            c = max(-1.0, min(1.0, c))
            mat[i][j] = mat[j][i] = c
    return mat


# Radar axes: the ten characteristics minus the categorical pattern class.
KIVIAT_AXES = ("mem_acc", "redist_avg", "in_mem", "out_mem", "wgh_mem",
               "ops", "op_mem", "pr", "mpr")
_LOG_AXES = {"mem_acc", "redist_avg", "in_mem", "out_mem", "wgh_mem", "ops", "op_mem"}


def kiviat_normalize(vectors: list[CharacteristicVector]) -> list[dict]:
    """Per-axis [0,1] min-max rescaling over the supplied set.

    Count-valued axes rescale on a log1p scale; absent values are excluded
    from scaling and emitted as None.  A degenerate axis (min == max, e.g. a
    single vector) maps to 0.
    """
    if not vectors:
        raise SpecError("kiviat_normalize needs at least one vector")
    raw = {ax: [] for ax in KIVIAT_AXES}
    for v in vectors:
        for ax in KIVIAT_AXES:
            val = getattr(v, ax)
            if val is None:
                raw[ax].append(None)
            else:
                x = float(val)
                raw[ax].append(math.log1p(x) if ax in _LOG_AXES else x)
    spans = {}
    for ax in KIVIAT_AXES:
        present = [x for x in raw[ax] if x is not None]
        spans[ax] = (min(present), max(present)) if present else (0.0, 0.0)
    rows = []
    for i, v in enumerate(vectors):
        row = {"benchmark": v.benchmark, "kind": v.kind, "config": v.config,
               "variant": v.variant}
        for ax in KIVIAT_AXES:
            x = raw[ax][i]
            if x is None:
                row[ax] = None
            else:
                lo, hi = spans[ax]
                row[ax] = 0.0 if hi == lo else (x - lo) / (hi - lo)
        rows.append(row)
    return rows
