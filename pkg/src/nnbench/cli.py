"""Command-line front door.

    nnbench list         [--suite all] [--json]
    nnbench characterize [--kind K] [--config C] [--variant V] [--budget N] ...
    nnbench run          --backend NAME [--backend NAME2] --suite micro ...
    nnbench cluster      [--linkage average] ...
    nnbench score        --input results.json [--baseline NAME] ...

Outputs land under <out-root>/<timestamp>/{characteristics,results,scores,
cluster}/ (or a fixed directory with --out).  The default out-root is ./out,
overridable via NNBENCH_OUT.  Exit codes: 0 success, 1 benchmark failure
(non-finite output or MSE breach), 2 usage/configuration error, 3 backend
load error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .characterize import CharacteristicVector, characterize
from .diversity import (
    KIVIAT_AXES,
    correlation_matrix,
    diversity_summary,
    feature_vector,
    hierarchical_cluster,
    kiviat_normalize,
)
from .harness import (
    BackendError,
    ConstantPowerModel,
    GoldenStore,
    all_benchmarks,
    filter_benchmarks,
    load_backend,
    run_suite,
)
from .registry.networks import macro_networks
from .report import RunManifest, write_csv, write_json
from .scoring import comparison_table, score_results
from .trace import DEFAULT_EVENT_BUDGET
from .types import RunResult

EXIT_OK = 0
EXIT_BENCH_FAILURE = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3

MSE_TOLERANCE = 1e-3


def _out_dir(args, section: str) -> Path:
    if args.out:
        root = Path(args.out)
    else:
        base = Path(os.environ.get("NNBENCH_OUT", "out"))
        root = base / time.strftime("%Y%m%dT%H%M%S")
    d = root / section
    d.mkdir(parents=True, exist_ok=True)
    return d


def _manifest(args, backends=()) -> RunManifest:
    return RunManifest(
        command=["nnbench"] + list(args.argv),
        seed=args.seed,
        budget=getattr(args, "budget", DEFAULT_EVENT_BUDGET),
        backends=[b.descriptor().as_dict() for b in backends],
    )


def _emit_manifest(manifest: RunManifest, out: Path):
    write_json(out / "manifest.json", manifest.full_obj())


def _selection(args):
    benches = all_benchmarks(args.suite)
    return filter_benchmarks(
        benches, kind=args.kind, config=args.config, variant=args.variant,
        name=args.name,
    )


def cmd_list(args) -> int:
    benches = _selection(args)
    if args.json:
        obj = [
            {
                "benchmark": b.bench_id,
                "kind": b.layer_kind or "network",
                "config": b.config,
                "variant": b.variant,
                "executable": b.executable,
                "ops": b.analytic_ops(),
            }
            for b in benches
        ]
        print(json.dumps(obj, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"{'benchmark':34s} {'variant':8s} {'exec':5s} {'ops':>12s}")
    for b in benches:
        print(f"{b.bench_id:34s} {b.variant:8s} {str(b.executable):5s} "
              f"{b.analytic_ops():12.4g}")
    print(f"{len(benches)} benchmarks")
    return EXIT_OK


def cmd_characterize(args) -> int:
    benches = [b for b in _selection(args) if b.kind == "micro"]
    if not benches:
        print("error: no micro benchmarks match the selection", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(args, "characteristics")
    manifest = _manifest(args)
    _emit_manifest(manifest, out)
    rows = []
    for b in benches:
        cv = characterize(b.spec, seed=b.data_seed(args.seed), budget=args.budget)
        cv.benchmark = b.bench_id
        cv.config = b.config
        cv.variant = b.variant
        rows.append(cv)
        if args.verbose:
            print(f"{b.bench_id}: source={cv.source} ops={cv.ops:.4g} "
                  f"op_mem={cv.op_mem:.4g}")
    fmts = args.format.split(",")
    if "csv" in fmts:
        write_csv(out / "characteristics.csv", CharacteristicVector.CSV_COLUMNS,
                  [cv.to_csv_row() for cv in rows])
    if "json" in fmts:
        write_json(out / "characteristics.json", {
            "manifest": manifest.stable_obj(),
            "rows": [cv.to_json_obj() for cv in rows],
        })
    kiviat = kiviat_normalize(rows)
    write_csv(
        out / "kiviat.csv",
        ["benchmark", "kind", "config", "variant"] + list(KIVIAT_AXES),
        [[r["benchmark"], r["kind"], r["config"], r["variant"]]
         + [r[a] for a in KIVIAT_AXES] for r in kiviat],
    )
    if not args.no_plots:
        from . import plots

        plots.kiviat_figure(kiviat, out / "kiviat.png")
        plots.mpr_bar_figure([cv.to_json_obj() for cv in rows], out / "mpr.png")
    print(f"characterized {len(rows)} configurations -> {out}")
    return EXIT_OK


def _pregenerate_goldens(store: GoldenStore, args) -> None:
    """Non-timed golden production in parallel; timed runs stay serial."""
    from concurrent.futures import ThreadPoolExecutor

    benches = [
        b for b in filter_benchmarks(
            all_benchmarks(args.suite), kind=args.kind, config=args.config,
            variant=args.variant, name=args.name)
        if b.executable
    ]
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        list(pool.map(lambda b: store.get_or_create(b, args.seed), benches))


def cmd_run(args) -> int:
    try:
        backends = [load_backend(name) for name in args.backend]
    except KeyError as e:
        print(f"error: {e.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BACKEND
    out_results = _out_dir(args, "results")
    out_scores = _out_dir(args, "scores")
    manifest = _manifest(args, backends)
    _emit_manifest(manifest, out_results)
    store = GoldenStore(args.goldens or (out_results.parent / "goldens"))
    power = ConstantPowerModel(args.power_model) if args.power_model else None
    if args.jobs > 1:
        _pregenerate_goldens(store, args)
    all_results: dict[str, list[RunResult]] = {}
    failed = False
    for backend in backends:
        name = backend.descriptor().name
        results = run_suite(
            backend, suite=args.suite, repetitions=args.reps, warmup=args.warmup,
            seed=args.seed, golden_store=store, power_model=power,
            filters={"kind": args.kind, "config": args.config,
                     "variant": args.variant, "name": args.name},
        )
        all_results[name] = results
        for r in results:
            if r.status == "failed":
                failed = True
            if r.mse_vs_golden is not None and r.mse_vs_golden > args.mse_tolerance:
                failed = True
                r.status = "failed"
                r.note = f"mse {r.mse_vs_golden:.3g} exceeds tolerance {args.mse_tolerance:g}"
    stable = {
        "manifest": manifest.stable_obj(),
        "results": {
            name: [
                {k: v for k, v in r.as_dict().items()
                 if k not in ("wall_time", "energy")}
                for r in results
            ]
            for name, results in all_results.items()
        },
    }
    write_json(out_results / "results.json", stable)
    write_json(out_results / "timings.json", {
        name: [
            {"benchmark": r.benchmark, "wall_time": r.wall_time, "energy": r.energy}
            for r in results
        ]
        for name, results in all_results.items()
    })
    areas = {b.descriptor().name: b.descriptor().area_mm2 for b in backends}
    cards = {}
    for name, results in all_results.items():
        card = score_results(results, area_mm2=areas.get(name) or args.area)
        cards[name] = card
        write_json(out_scores / f"scorecard_{name.replace(':', '_')}.json",
                   {"manifest": manifest.stable_obj(), **card.to_json_obj()})
        write_csv(
            out_scores / f"scorecard_{name.replace(':', '_')}.csv",
            ["benchmark", "status", "ops_giga", "time_s", "gops", "gopj",
             "silicon_eff", "mse_vs_golden", "acc"],
            [[r.get("benchmark"), r.get("status"), r.get("ops_giga"),
              r.get("time_s"), r.get("gops"), r.get("gopj"),
              r.get("silicon_eff"), r.get("mse_vs_golden"), r.get("acc")]
             for r in card.rows],
        )
    if len(backends) > 1:
        baseline = args.baseline or backends[0].descriptor().name
        table = comparison_table(cards, baseline)
        write_json(out_scores / "comparison.json", table)
    if not args.no_plots:
        from . import plots

        plots.gops_bar_figure(cards, out_scores / "gops.png")
    n_ok = sum(r.status == "ok" for rs in all_results.values() for r in rs)
    n_skip = sum(r.status == "skipped" for rs in all_results.values() for r in rs)
    n_fail = sum(r.status == "failed" for rs in all_results.values() for r in rs)
    print(f"ran {n_ok} benchmarks ({n_skip} skipped, {n_fail} failed) -> {out_results.parent}")
    return EXIT_BENCH_FAILURE if failed else EXIT_OK


def cmd_cluster(args) -> int:
    out = _out_dir(args, "cluster")
    manifest = _manifest(args)
    _emit_manifest(manifest, out)
    nets = macro_networks()
    vecs = [feature_vector(d) for d in nets.values()]
    if args.normalized:
        for v in vecs:
            total = v.values.sum()
            if total > 0:
                v.values = v.values / total
    tree = hierarchical_cluster(vecs, linkage=args.linkage)
    write_json(out / "dendrogram.json", {
        "manifest": manifest.stable_obj(),
        "linkage": args.linkage,
        "tree": tree.to_json_obj(),
    })
    (out / "dendrogram.newick").write_text(tree.to_newick() + "\n", encoding="utf-8")
    names = sorted(nets)
    by_name = {v.name: v for v in vecs}
    matrix = correlation_matrix([by_name[n] for n in names])
    write_csv(out / "heatmap.csv", ["network"] + names,
              [[names[i]] + list(matrix[i]) for i in range(len(names))])
    write_json(out / "summary.json", {
        "manifest": manifest.stable_obj(),
        "summary": diversity_summary(tree),
    })
    write_csv(out / "features.csv", ["network"] + list(vecs[0].as_dict()["values"]),
              [[v.name] + [float(x) for x in v.values] for v in sorted(vecs, key=lambda v: v.name)])
    if not args.no_plots:
        from . import plots

        plots.dendrogram_figure(tree, out / "dendrogram.png")
        plots.heatmap_figure(matrix, names, out / "heatmap.png")
    print(f"clustered {len(vecs)} networks -> {out}")
    return EXIT_OK


def cmd_score(args) -> int:
    with open(args.input, "r", encoding="utf-8") as f:
        payload = json.load(f)
    results_by_backend = payload.get("results", payload)
    out = _out_dir(args, "scores")
    manifest = _manifest(args)
    _emit_manifest(manifest, out)
    timings = {}
    if args.timings:
        with open(args.timings, "r", encoding="utf-8") as f:
            traw = json.load(f)
        timings = {
            name: {row["benchmark"]: row for row in rows}
            for name, rows in traw.items()
        }
    cards = {}
    for name, rows in results_by_backend.items():
        results = []
        for row in rows:
            t = timings.get(name, {}).get(row["benchmark"], {})
            results.append(RunResult(
                benchmark=row["benchmark"], backend=name, status=row["status"],
                wall_time=row.get("wall_time", t.get("wall_time")),
                energy=row.get("energy", t.get("energy")),
                mse_vs_golden=row.get("mse_vs_golden"),
                ops=row.get("ops"), repetitions=row.get("repetitions", 0),
            ))
        usable = [r for r in results if r.status != "ok" or
                  (r.wall_time is not None and r.ops is not None)]
        cards[name] = score_results([r for r in usable], area_mm2=args.area)
        write_json(out / f"scorecard_{name.replace(':', '_')}.json",
                   {"manifest": manifest.stable_obj(), **cards[name].to_json_obj()})
    if args.baseline:
        write_json(out / "comparison.json", comparison_table(cards, args.baseline))
    if not args.no_plots:
        from . import plots

        plots.gops_bar_figure(cards, out / "gops.png")
    print(f"scored {len(cards)} backends -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nnbench",
        description="Layer-level neural network benchmarking and characterization",
    )
    p.add_argument("--version", action="version", version=f"nnbench {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, with_budget=False):
        sp.add_argument("--suite", choices=["micro", "macro", "all"], default="all")
        sp.add_argument("--kind", help="filter: layer kind or network name")
        sp.add_argument("--config", help="filter: configuration label A..G")
        sp.add_argument("--variant", choices=["dense", "sparse", "fx16"])
        sp.add_argument("--name", help="filter: substring of the benchmark id")
        sp.add_argument("--seed", type=int, default=2024)
        sp.add_argument("--out", help="fixed output directory (default: timestamped)")
        sp.add_argument("--no-plots", action="store_true",
                        help="skip matplotlib figure rendering")
        sp.add_argument("--verbose", action="store_true")
        if with_budget:
            sp.add_argument("--budget", type=int, default=DEFAULT_EVENT_BUDGET,
                            help="trace event budget; larger configs go analytic")

    sp = sub.add_parser("list", help="catalog benchmarks and configurations")
    common(sp)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_list)

    sp = sub.add_parser("characterize", help="characteristic tables + radar data")
    common(sp, with_budget=True)
    sp.set_defaults(suite="micro")
    sp.add_argument("--format", default="csv,json", help="csv,json")
    sp.set_defaults(func=cmd_characterize)

    sp = sub.add_parser("run", help="execute benchmarks on backends")
    common(sp)
    sp.set_defaults(suite="micro")
    sp.add_argument("--backend", action="append", required=True,
                    help="backend name, module:Class plugin, or worker:<name>")
    sp.add_argument("--reps", type=int, default=3)
    sp.add_argument("--warmup", type=int, default=1)
    sp.add_argument("--power-model", type=float, default=None,
                    help="constant power in watts for the energy fallback")
    sp.add_argument("--area", type=float, default=None,
                    help="self-reported die area in mm^2 for silicon efficiency")
    sp.add_argument("--baseline", help="baseline backend for the comparison table")
    sp.add_argument("--goldens", help="golden store directory (default: per-run)")
    sp.add_argument("--mse-tolerance", type=float, default=MSE_TOLERANCE)
    sp.add_argument("--jobs", type=int, default=1,
                    help="parallel non-timed validation (timed runs stay serial)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("cluster", help="macro feature vectors, dendrogram, heatmap")
    common(sp)
    sp.add_argument("--linkage", choices=["average", "complete", "single"],
                    default="average")
    sp.add_argument("--normalized", action="store_true",
                    help="scale feature vectors to unit total ops")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("score", help="scorecards from a results.json")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--timings", help="optional timings.json for wall times")
    sp.add_argument("--baseline")
    sp.add_argument("--area", type=float, default=None)
    sp.set_defaults(func=cmd_score)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(argv) if argv is not None else sys.argv[1:]
    try:
        return args.func(args)
    except BackendError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
