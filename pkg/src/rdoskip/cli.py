"""Command-line pipeline: generate, extract, train, prune, bench, correlate.

Every command records a manifest (argv, config, inputs, outputs) next to
its primary output; `rdoskip rerun <manifest>` replays it bit-identically.
State flows between stages through files only.

Exit codes: 0 success, 1 data error, 2 usage error, 3 pruning produced no
criteria (lower the thresholds).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .bench import render_report, run_benchmark, write_points_csv, \
    write_report_csv
from .cart import load_model, save_model
from .criteria import CriteriaBundle, load_criteria_bundle, \
    write_criteria_file
from .features import correlation_table, export_dataset, import_dataset, \
    render_correlation_table, write_correlation_csv
from .pipeline import DEFAULT_QPS, collect_dataset, train_models
from .pruning import PruneThresholds, select_bundle, write_plot_files
from .sequences import generate_sequence, parse_sequence_spec, read_sequence, \
    write_sequence

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE = 2
EXIT_EMPTY_PRUNE = 3


def _write_manifest(path, command: str, argv: list[str],
                    inputs: list[str], outputs: list[str],
                    config: dict) -> None:
    payload = {
        "tool": "rdoskip",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "inputs": sorted(str(p) for p in inputs),
        "outputs": sorted(str(p) for p in outputs),
        "config": config,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sequence_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def cmd_generate(args) -> int:
    spec = parse_sequence_spec(args.spec)
    frames = generate_sequence(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    out_path = os.path.join(args.out_dir, f"{spec.name}.luma")
    write_sequence(out_path, frames)
    _write_manifest(
        out_path + ".manifest.json", "generate", args._argv,
        inputs=[args.spec], outputs=[out_path],
        config={"spec": spec.__dict__})
    print(f"wrote {len(frames)} frames to {out_path}")
    return EXIT_OK


def cmd_extract(args) -> int:
    if not args.sequences:
        raise ValueError("no sequence files given")
    if os.path.exists(args.out) and not args.force:
        raise ValueError(
            f"output {args.out} exists; pass --force to overwrite")
    qps = tuple(args.qps)
    named = [(_sequence_name(p), read_sequence(p)) for p in args.sequences]
    dataset = collect_dataset(named, qps)
    export_dataset(dataset, args.out)
    _write_manifest(
        args.out + ".manifest.json", "extract", args._argv,
        inputs=list(args.sequences), outputs=[args.out],
        config={"qps": list(qps), "sequences": [n for n, _ in named]})
    print(f"extracted {len(dataset)} samples from "
          f"{len(named)} sequence(s) x {len(qps)} QP(s) -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = import_dataset(args.dataset)
    models, warnings = train_models(
        dataset, max_depth=args.max_depth,
        min_leaf_fraction=args.min_leaf_fraction,
        bin_count=args.bin_count, kfold_k=args.kfold, kfold_seed=args.seed)
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    kfold_summary = {}
    for depth, model in sorted(models.items()):
        path = os.path.join(args.out_dir, f"model_d{depth}.json")
        save_model(model, path)
        outputs.append(path)
        kfold_summary[str(depth)] = model.kfold
        mean = (f"{model.kfold['mean_accuracy']:.4f}"
                if model.kfold else "n/a")
        print(f"depth {depth}: {model.provenance['n_samples']} samples, "
              f"k-fold mean accuracy {mean} -> {path}")
    report_path = os.path.join(args.out_dir, "kfold_report.json")
    with open(report_path, "w") as fh:
        json.dump({"kfold": kfold_summary, "warnings": warnings}, fh,
                  indent=1, sort_keys=True)
        fh.write("\n")
    outputs.append(report_path)
    _write_manifest(
        os.path.join(args.out_dir, "train.manifest.json"), "train",
        args._argv, inputs=[args.dataset], outputs=outputs,
        config={"max_depth": args.max_depth,
                "min_leaf_fraction": args.min_leaf_fraction,
                "bin_count": args.bin_count, "kfold": args.kfold,
                "seed": args.seed})
    return EXIT_OK


def cmd_prune(args) -> int:
    thresholds = PruneThresholds(args.min_accuracy, args.min_coverage)
    models = {}
    for path in args.models:
        model = load_model(path)
        if model.cu_depth in models:
            raise ValueError(
                f"duplicate model for depth {model.cu_depth}: {path}")
        models[model.cu_depth] = model
    training = sorted({
        name for model in models.values()
        for name in model.provenance.get("sequences", [])})
    bundle = select_bundle(models, thresholds, tuple(training))
    write_criteria_file(bundle, args.out)
    outputs = [args.out]
    out_dir = os.path.dirname(os.path.abspath(args.out))
    for depth, model in sorted(models.items()):
        dat = os.path.join(out_dir, f"plot_d{depth}.dat")
        grid = os.path.join(out_dir, f"plot_d{depth}.csv")
        write_plot_files(model, dat, grid)
        outputs.extend([dat, grid])
    _write_manifest(
        args.out + ".manifest.json", "prune", args._argv,
        inputs=list(args.models), outputs=outputs,
        config={"min_accuracy": args.min_accuracy,
                "min_coverage": args.min_coverage})
    if not len(bundle):
        print("no tree node met the accuracy/coverage thresholds; "
              "lower the thresholds", file=sys.stderr)
        return EXIT_EMPTY_PRUNE
    for depth in sorted(bundle.by_depth):
        c = bundle.by_depth[depth]
        print(f"depth {depth}: {c.render_rule()}  "
              f"(accuracy {c.accuracy * 100:.2f}%, "
              f"coverage {c.coverage * 100:.2f}%)")
    return EXIT_OK


def cmd_bench(args) -> int:
    bundle = (load_criteria_bundle(args.criteria)
              if args.criteria else CriteriaBundle.empty())
    named = [(_sequence_name(p), read_sequence(p)) for p in args.sequences]
    report = run_benchmark(named, bundle, tuple(args.qps))
    os.makedirs(args.out_dir, exist_ok=True)
    text_path = os.path.join(args.out_dir, "report.txt")
    with open(text_path, "w") as fh:
        fh.write(render_report(report))
    csv_path = os.path.join(args.out_dir, "report.csv")
    write_report_csv(report, csv_path)
    points_path = os.path.join(args.out_dir, "points.csv")
    write_points_csv(report, points_path)
    _write_manifest(
        os.path.join(args.out_dir, "bench.manifest.json"), "bench",
        args._argv,
        inputs=list(args.sequences) + ([args.criteria] if args.criteria
                                       else []),
        outputs=[text_path, csv_path, points_path],
        config={"qps": list(args.qps)})
    sys.stdout.write(render_report(report, include_wall_time=False))
    return EXIT_OK


def cmd_correlate(args) -> int:
    dataset = import_dataset(args.dataset)
    table = correlation_table(dataset)
    text = render_correlation_table(table)
    outputs = []
    if args.out:
        with open(args.out + ".txt", "w") as fh:
            fh.write(text)
        write_correlation_csv(table, args.out + ".csv")
        outputs = [args.out + ".txt", args.out + ".csv"]
        _write_manifest(
            args.out + ".manifest.json", "correlate", args._argv,
            inputs=[args.dataset], outputs=outputs, config={})
    sys.stdout.write(text)
    return EXIT_OK


def cmd_rerun(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    argv = manifest["argv"]
    parser = build_parser()
    replay = parser.parse_args(argv)
    replay._argv = argv
    if hasattr(replay, "force"):
        replay.force = True  # a rerun overwrites its own previous outputs
    return replay.func(replay)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdoskip",
        description="Toy quad-tree encoder with decision-tree RDO skipping")
    parser.add_argument("--version", action="version",
                        version=f"rdoskip {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render a synthetic sequence")
    p.add_argument("spec", help="sequence spec file (key = value lines)")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("extract",
                       help="collect the labelled feature dataset")
    p.add_argument("sequences", nargs="+", help="input .luma files")
    p.add_argument("--qps", type=int, nargs="+", default=list(DEFAULT_QPS))
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing dataset")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit the per-depth split classifiers")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--min-leaf-fraction", type=float, default=0.001)
    p.add_argument("--bin-count", type=int, default=32)
    p.add_argument("--kfold", type=int, default=5)
    p.add_argument("--seed", type=int, default=0,
                   help="shuffle seed for cross-validation folds")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("prune",
                       help="harvest skip criteria above the thresholds")
    p.add_argument("models", nargs="+", help="model JSON files")
    p.add_argument("--min-accuracy", type=float, default=97.0,
                   help="percent accuracy threshold")
    p.add_argument("--min-coverage", type=float, default=17.0,
                   help="percent coverage threshold")
    p.add_argument("--out", required=True, help="output criteria file")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("bench", help="anchor vs. skip-enabled comparison")
    p.add_argument("sequences", nargs="+", help="held-out .luma files")
    p.add_argument("--criteria", help="criteria file (omit for anchor only)")
    p.add_argument("--qps", type=int, nargs="+", default=list(DEFAULT_QPS))
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("correlate",
                       help="per-depth feature/label correlation table")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="output path prefix (.txt and .csv)")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("rerun", help="replay a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = list(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
