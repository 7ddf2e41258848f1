"""Command-line entry point orchestrating the pipeline.

Subcommands: ingest, train, sanity, drift, timeseries, synth. All randomness
flows from --seed; re-running a subcommand with unchanged inputs and seed
produces byte-identical reports (reports carry no timestamps). Exit codes:
0 success, 1 usage or configuration error, 2 data error, 3 sanity-gate
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .analogy import load_suite, run_suite
from .config import RunConfig
from .drift import compare_models
from .ingest import Normalizer, SliceKey, Tokenizer, partition, read_posts
from .series import classify_pattern, cohesiveness, linear_trend, neighbor_overlap, similarity_series
from .synth import Benchmark, GeneratorConfig, run_benchmark
from .trainer import load_model, save_model, train_skipgram
from .vocab import build_vocab

USAGE_ERROR, DATA_ERROR, GATE_FAILURE = 1, 2, 3
WORKDIR_ENV = "EMODRIFT_WORKDIR"


class CliError(Exception):
    def __init__(self, message: str, code: int = DATA_ERROR):
        super().__init__(message)
        self.code = code


def _workdir(path: str | Path) -> Path:
    """Resolve a relative path under $EMODRIFT_WORKDIR when it is set."""
    path = Path(path)
    base = os.environ.get(WORKDIR_ENV)
    if base and not path.is_absolute():
        return Path(base) / path
    return path


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _write_report(path: str | Path, report: dict) -> None:
    text = json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _provenance(cfg: RunConfig) -> dict:
    return {"config": cfg.as_dict(), "version": __version__}


def _load_config(args, **overrides) -> RunConfig:
    try:
        return RunConfig.from_sources(getattr(args, "config", None), **overrides)
    except (ValueError, OSError) as exc:
        raise CliError(f"configuration error: {exc}", USAGE_ERROR) from exc


def _model_paths(models_dir: str | Path) -> dict[str, Path]:
    paths = {
        p.stem: p
        for p in sorted(Path(models_dir).glob("*.txt"))
        if p.name != "manifest.json"
    }
    if not paths:
        raise CliError(f"no model files found in {models_dir}")
    return paths


def _load_models(models_dir: str | Path) -> dict[str, "object"]:
    models = {}
    for label, path in _model_paths(models_dir).items():
        try:
            models[label] = load_model(path)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    vocabs = {tuple(m.tokens) for m in models.values()}
    if len(vocabs) > 1:
        raise CliError("model files do not share one vocabulary")
    return models


def _slice_files(slices_dir: str | Path) -> dict[str, Path]:
    files = {p.stem: p for p in sorted(Path(slices_dir).glob("*.txt"))}
    if not files:
        raise CliError(f"no slice files found in {slices_dir}")
    return files


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = _load_config(
        args,
        grid_start=args.grid_start,
        grid_end=args.grid_end,
        platforms=args.platforms,
        require_emoji=False if args.no_require_emoji else None,
        collapse_skin_tones=True if args.collapse_skin_tones else None,
    )
    normalizer = Normalizer(
        Tokenizer(collapse_skin_tones=cfg.collapse_skin_tones),
        require_emoji=cfg.require_emoji,
    )
    out_dir = _workdir(args.out)
    try:
        if args.input == "-":
            manifest = partition(read_posts(sys.stdin), cfg.grid(), out_dir, normalizer)
        else:
            with open(_workdir(args.input), encoding="utf-8") as fh:
                manifest = partition(read_posts(fh), cfg.grid(), out_dir, normalizer)
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"ingest failed: {exc}") from exc
    manifest.update(_provenance(cfg))
    _write_report(out_dir / "manifest.json", manifest)
    total = sum(v["documents"] for v in manifest["slices"].values())
    print(f"ingested {total} documents into {out_dir} ({len(manifest['slices'])} slices)")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(
        args, dim=args.dim, window=args.window, negatives=args.negatives,
        epochs=args.epochs, alpha=args.alpha, subsample=args.subsample,
        min_count=args.min_count, seed=args.seed, workers=args.workers,
    )
    slices = _slice_files(_workdir(args.slices))
    try:
        vocab = build_vocab(slices, min_count=cfg.min_count)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out_dir = _workdir(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    hp = cfg.hyperparams()
    report: dict = {"vocab_size": len(vocab), "slices": {}}
    for label, path in slices.items():
        try:
            model = train_skipgram(
                path, vocab, hp, slice_key=SliceKey.parse(label), workers=cfg.workers
            )
        except ValueError as exc:
            raise CliError(f"slice {label}: {exc}") from exc
        save_model(model, out_dir / f"{label}.txt")
        report["slices"][label] = {
            "tokens": int(vocab.slice_counts[label].sum()),
            "epoch_losses": model.epoch_losses,
        }
        print(f"trained {label}: final loss {model.epoch_losses[-1]:.4f}")
    report.update(_provenance(cfg))
    _write_report(out_dir / "train_report.json", report)
    return 0


def cmd_sanity(args) -> int:
    cfg = _load_config(args, analogy_gate=args.gate, analogy_top_k=args.top_k)
    suite_path = args.suite
    if suite_path is None:
        import importlib.resources

        suite_path = str(importlib.resources.files("emodrift") / "data" / "analogies.txt")
    try:
        items = load_suite(suite_path)
        models = _load_models(_workdir(args.models))
        reports = {
            label: run_suite(m, items, top_k=cfg.analogy_top_k, gate=cfg.analogy_gate).as_dict()
            for label, m in models.items()
        }
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = {"suite": str(suite_path), "models": reports}
    out.update(_provenance(cfg))
    if args.out:
        _write_report(_workdir(args.out), out)
    rejected = [label for label, r in reports.items() if r["verdict"] == "REJECTED"]
    for label, r in sorted(reports.items()):
        print(f"{label}: {r['verdict']} (hits@{cfg.analogy_top_k} {r['hits_at_k']}/{r['scored']})")
    return GATE_FAILURE if rejected else 0


def cmd_drift(args) -> int:
    cfg = _load_config(
        args, beta=args.beta, distance=args.distance,
        shapiro_max_n=args.shapiro_max_n, seed=args.seed,
    )
    if cfg.beta < 2.0 and not args.unsafe_beta:
        raise CliError(
            f"beta {cfg.beta} below the conforming minimum of 2; pass --unsafe-beta to override",
            USAGE_ERROR,
        )
    models = _load_models(_workdir(args.models))
    if args.sweep:
        pairs = []
        by_platform: dict[str, list[str]] = {}
        for label in models:
            by_platform.setdefault(label.split("_", 1)[1] if "_" in label else "", []).append(label)
        for labels in by_platform.values():
            ordered = sorted(labels, key=lambda lb: SliceKey.parse(lb).month_index())
            pairs.extend((a, b) for a, b in zip(ordered, ordered[1:]))
    else:
        if not args.from_slice or not args.to_slice:
            raise CliError("need --from-slice and --to-slice (or --sweep)", USAGE_ERROR)
        for label in (args.from_slice, args.to_slice):
            if label not in models:
                raise CliError(f"no model for slice {label!r}")
        pairs = [(args.from_slice, args.to_slice)]

    comparisons = []
    for a, b in pairs:
        cmp = compare_models(
            models[a], models[b], beta=cfg.beta, metric=cfg.distance,
            max_shapiro_n=cfg.shapiro_max_n, seed=cfg.seed,
            allow_nonconforming=args.unsafe_beta,
        )
        comparisons.append(cmp.report())
        print(
            f"{a} -> {b}: mu={cmp.mu:.6f} sigma={cmp.sigma:.6f} "
            f"flagged={len(cmp.flagged)} drifted={len(cmp.evidence)}"
        )
    report = {"comparisons": comparisons}
    report.update(_provenance(cfg))
    if args.out:
        _write_report(_workdir(args.out), report)
    if args.csv:
        with open(_workdir(args.csv), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["from_slice", "to_slice", "a", "b", "shift"])
            for comp in comparisons:
                for pair in comp["flagged_pairs"]:
                    writer.writerow(
                        [comp["from_slice"], comp["to_slice"], pair["a"], pair["b"], pair["shift"]]
                    )
    return 0


def cmd_timeseries(args) -> int:
    cfg = _load_config(
        args, k=args.k, epsilon=args.epsilon,
        slope_threshold=args.slope_threshold, r2_floor=args.r2_floor,
    )
    models = _load_models(_workdir(args.models))
    ordered = [models[lb] for lb in sorted(models, key=lambda lb: SliceKey.parse(lb).month_index())]
    report: dict = {"pairs": {}, "tokens": {}}
    csv_rows: list[tuple] = []
    try:
        for spec in args.pair or []:
            a, _, b = spec.partition(",")
            if not b:
                raise CliError(f"--pair wants 'a,b', got {spec!r}", USAGE_ERROR)
            series = similarity_series(ordered, a, b)
            fit = linear_trend(series) if len(series.points) >= 2 else None
            entry = {
                "points": [{"slice": str(k), "similarity": v} for k, v in series.points],
                "trend": None if fit is None else {
                    "slope": fit.slope, "intercept": fit.intercept,
                    "r_squared": fit.r_squared, "n": fit.n,
                },
            }
            if fit is not None and len(series.points) >= 4:
                entry["pattern"] = classify_pattern(
                    series, fit, epsilon=cfg.epsilon,
                    slope_threshold=cfg.slope_threshold, r2_floor=cfg.r2_floor,
                ).value
            report["pairs"][spec] = entry
            csv_rows.extend((a, b, str(k), v) for k, v in series.points)
        for token in args.token or []:
            first, last = ordered[0], ordered[-1]
            report["tokens"][token] = {
                "cohesiveness_first": cohesiveness(first, token, k=cfg.k),
                "neighbor_overlap_first_last": neighbor_overlap(first, last, token, k=cfg.k),
            }
    except (KeyError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    report.update(_provenance(cfg))
    if args.out:
        _write_report(_workdir(args.out), report)
    if args.csv:
        with open(_workdir(args.csv), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["a", "b", "slice", "similarity"])
            writer.writerows(csv_rows)
    if not args.out:
        print(json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    cfg = _load_config(args, seed=args.seed, workers=args.workers, beta=args.beta)
    if cfg.beta < 2.0 and not args.unsafe_beta:
        raise CliError(
            f"beta {cfg.beta} below the conforming minimum of 2; pass --unsafe-beta to override",
            USAGE_ERROR,
        )
    generator = GeneratorConfig(seed=cfg.seed)
    if args.slices:
        generator.n_slices = args.slices
    benchmark = Benchmark(config=generator)
    beta = cfg.beta if args.beta is not None else benchmark.beta
    out_dir = _workdir(args.out)
    result = run_benchmark(out_dir, benchmark=benchmark, beta=beta, workers=cfg.workers)
    result.update(_provenance(cfg))
    _write_report(out_dir / "benchmark_report.json", result)
    s = result["score"]
    print(f"precision={s['precision']:.3f} recall={s['recall']:.3f} "
          f"recovered={len(s['recovered'])}/{len(s['planted'])}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emodrift", description=__doc__)
    parser.add_argument("--version", action="version", version=f"emodrift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean raw posts into per-slice corpus files")
    p.add_argument("--input", required=True, help="newline-delimited JSON posts, or - for stdin")
    p.add_argument("--out", required=True, help="slice output directory")
    p.add_argument("--config")
    p.add_argument("--grid-start", dest="grid_start")
    p.add_argument("--grid-end", dest="grid_end")
    p.add_argument("--platforms")
    p.add_argument("--no-require-emoji", action="store_true")
    p.add_argument("--collapse-skin-tones", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="build the shared vocabulary and train per-slice models")
    p.add_argument("--slices", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--subsample", type=float)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sanity", help="run the analogy suite against trained models")
    p.add_argument("--models", required=True)
    p.add_argument("--suite", help="analogy file; defaults to the bundled suite")
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--gate", type=float)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.set_defaults(func=cmd_sanity)

    p = sub.add_parser("drift", help="pairwise-distance drift report for a slice pair")
    p.add_argument("--models", required=True)
    p.add_argument("--from-slice", dest="from_slice")
    p.add_argument("--to-slice", dest="to_slice")
    p.add_argument("--sweep", action="store_true", help="all adjacent-month pairs per platform")
    p.add_argument("--beta", type=float)
    p.add_argument("--unsafe-beta", action="store_true",
                   help="allow beta < 2 (marks the report non-conforming)")
    p.add_argument("--distance", choices=["cosine", "similarity"])
    p.add_argument("--shapiro-max-n", dest="shapiro_max_n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--config")
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("timeseries", help="similarity series, trends and cohesiveness")
    p.add_argument("--models", required=True)
    p.add_argument("--pair", action="append", help="token pair 'a,b'; repeatable")
    p.add_argument("--token", action="append", help="token for cohesiveness; repeatable")
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--slope-threshold", dest="slope_threshold", type=float)
    p.add_argument("--r2-floor", dest="r2_floor", type=float)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--config")
    p.set_defaults(func=cmd_timeseries)

    p = sub.add_parser("synth", help="generate the planted-drift benchmark and score the detector")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--slices", type=int, help="override the number of generated months")
    p.add_argument("--beta", type=float)
    p.add_argument("--unsafe-beta", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"emodrift: error: {exc}", file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
