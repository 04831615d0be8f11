"""Efficiency metrics and the synthesized efficiency score.

Per benchmark: GOPS (giga-operations per second), GOPJ (per Joule, absent
without an energy source), and silicon efficiency ((acc/ref_acc)/area,
absent without a self-reported area).  The synthesized score is the
geometric mean over benchmarks of f(GOPJ) * g(GOPS) * h(silicon) with
user-pluggable monotone hooks defaulting to identity.  It is an efficiency
score, not a ranking verdict; any missing operand nullifies dependent
aggregates rather than being fabricated.

Accuracy is the fraction of output elements within absolute tolerance 1e-3
of the golden output, so the reference backend scores exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .types import RunResult, SpecError

ACC_TOLERANCE = 1e-3


def gops(ops_giga: float, time_s: float) -> float:
    """Giga-operations per second."""
    if time_s <= 0:
        raise SpecError(f"time must be positive, got {time_s}")
    return ops_giga / time_s


def gopj(ops_giga: float, energy_j: Optional[float]) -> Optional[float]:
    """Giga-operations per Joule; None propagates when energy is absent."""
    if energy_j is None:
        return None
    if energy_j <= 0:
        raise SpecError(f"energy must be positive, got {energy_j}")
    return ops_giga / energy_j


def silicon_eff(acc: float, ref_acc: float, area: Optional[float]) -> Optional[float]:
    """Accuracy ratio per unit area: (acc/ref_acc)/area."""
    if area is None:
        return None
    if area <= 0:
        raise SpecError(f"area must be positive, got {area}")
    if not (0 <= acc <= 1) or not (0 < ref_acc <= 1):
        raise SpecError(f"accuracies must lie in [0,1] with ref_acc > 0")
    return (acc / ref_acc) / area


def accuracy_score(output, golden, tolerance: float = ACC_TOLERANCE) -> float:
    """Fraction of elements within absolute tolerance of the golden output."""
    import numpy as np

    if output.shape != golden.shape:
        raise SpecError(f"shapes differ: {output.shape} vs {golden.shape}")
    return float(np.mean(np.abs(output.astype(np.float64) - golden.astype(np.float64))
                         <= tolerance))


@dataclass
class ScalingHooks:
    """Monotone nonnegative scalings of the three efficiency terms."""

    f: Callable[[float], float] = lambda v: v  # energy efficiency
    g: Callable[[float], float] = lambda v: v  # performance efficiency
    h: Callable[[float], float] = lambda v: v  # silicon efficiency


IDENTITY_HOOKS = ScalingHooks()


@dataclass
class ScoreInput:
    """Operands of one benchmark's score terms."""

    benchmark: str
    ops_giga: float
    time_s: float
    energy_j: Optional[float] = None
    acc: float = 1.0
    ref_acc: float = 1.0
    area_mm2: Optional[float] = None

    def __post_init__(self):
        if self.ops_giga <= 0 or self.time_s <= 0:
            raise SpecError(f"{self.benchmark}: ops and time must be positive")
        if not (0 <= self.acc <= 1) or not (0 < self.ref_acc <= 1):
            raise SpecError(f"{self.benchmark}: accuracies out of range")


@dataclass
class ScoreCard:
    backend: str
    rows: list[dict]
    geomean_gops: Optional[float]
    geomean_gopj: Optional[float]
    geomean_silicon: Optional[float]
    synthesized_score: Optional[float]
    synthesized_included: list[str]
    note: str = ""

    COLUMNS = ["benchmark", "ops_giga", "time_s", "gops", "gopj",
               "silicon_eff", "mse_vs_golden", "acc"]

    def to_json_obj(self) -> dict:
        return {
            "backend": self.backend,
            "rows": self.rows,
            "geomean_gops": self.geomean_gops,
            "geomean_gopj": self.geomean_gopj,
            "geomean_silicon": self.geomean_silicon,
            "synthesized_score": self.synthesized_score,
            "synthesized_included": self.synthesized_included,
            "note": self.note,
        }


def _geomean(values: list[float]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    if any(v <= 0 for v in vals):
        return 0.0
    return math.exp(math.fsum(math.log(v) for v in vals) / len(vals))


def synthesized_score(inputs: list[ScoreInput],
                      hooks: ScalingHooks = IDENTITY_HOOKS) -> Optional[float]:
    """GeoMean over benchmarks of f(ops/energy) * g(ops/time) * h((acc/ref)/area).

    Only benchmarks with every operand present are included; an empty
    inclusion set yields None (the caller reports the diagnostic).
    """
    products = []
    for si in inputs:
        ej = gopj(si.ops_giga, si.energy_j)
        se = silicon_eff(si.acc, si.ref_acc, si.area_mm2)
        if ej is None or se is None:
            continue
        products.append(hooks.f(ej) * hooks.g(gops(si.ops_giga, si.time_s)) * hooks.h(se))
    return _geomean(products)


def score_results(results: list[RunResult], area_mm2: Optional[float] = None,
                  hooks: ScalingHooks = IDENTITY_HOOKS,
                  golden_accs: Optional[dict] = None) -> ScoreCard:
    """Build a ScoreCard from a backend's RunResults.

    golden_accs maps benchmark id to the measured accuracy score; absent
    entries fall back to 1 - (failed) or the MSE-gated default of 1.0 for
    exact reference runs.
    """
    rows = []
    inputs = []
    backend = results[0].backend if results else ""
    included = []
    for r in results:
        if r.status != "ok":
            rows.append({"benchmark": r.benchmark, "status": r.status, "note": r.note})
            continue
        og = r.ops / 1e9
        acc = (golden_accs or {}).get(r.benchmark, 1.0)
        row = {
            "benchmark": r.benchmark,
            "status": "ok",
            "ops_giga": og,
            "time_s": r.wall_time,
            "energy_j": r.energy,
            "gops": gops(og, r.wall_time),
            "gopj": gopj(og, r.energy),
            "silicon_eff": silicon_eff(acc, 1.0, area_mm2),
            "mse_vs_golden": r.mse_vs_golden,
            "acc": acc,
        }
        rows.append(row)
        si = ScoreInput(r.benchmark, og, r.wall_time, r.energy, acc, 1.0, area_mm2)
        inputs.append(si)
        if r.energy is not None and area_mm2 is not None:
            included.append(r.benchmark)
    ok_rows = [r for r in rows if r.get("status") == "ok"]
    score = synthesized_score(inputs, hooks)
    note = "" if included else "synthesized score absent: missing energy or area operands"
    return ScoreCard(
        backend=backend,
        rows=rows,
        geomean_gops=_geomean([r["gops"] for r in ok_rows]),
        geomean_gopj=_geomean([r["gopj"] for r in ok_rows]),
        geomean_silicon=_geomean([r["silicon_eff"] for r in ok_rows]),
        synthesized_score=score,
        synthesized_included=included,
        note=note,
    )


def comparison_table(cards: dict[str, ScoreCard], baseline: str) -> dict:
    """Per-benchmark speedups and normalized energy versus a baseline backend.

    speedup = time(baseline) / time(backend);
    normalized energy = energy(backend) / energy(baseline).
    Geometric-mean rows are appended; cells without both operands are null.
    """
    if baseline not in cards:
        raise SpecError(f"baseline backend {baseline!r} not in results")
    base_rows = {r["benchmark"]: r for r in cards[baseline].rows if r.get("status") == "ok"}
    table = {"baseline": baseline, "backends": {}}
    for name, card in cards.items():
        rows = {}
        for r in card.rows:
            if r.get("status") != "ok":
                continue
            b = base_rows.get(r["benchmark"])
            speedup = None
            norm_energy = None
            if b is not None:
                speedup = b["time_s"] / r["time_s"]
                if b.get("energy_j") is not None and r.get("energy_j") is not None:
                    norm_energy = r["energy_j"] / b["energy_j"]
            rows[r["benchmark"]] = {"speedup": speedup, "normalized_energy": norm_energy}
        table["backends"][name] = {
            "rows": rows,
            "geomean_speedup": _geomean([v["speedup"] for v in rows.values()]),
            "geomean_normalized_energy": _geomean(
                [v["normalized_energy"] for v in rows.values()]),
        }
    return table
