"""Command line front end.

Every verb reads the same JSON config (--config) and applies a handful of
focused overrides, so a grid sweep and a one-off cluster run share their
settings. Exit codes: 0 success, 1 input/validation problems, 2 anything
else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import clustering, flows as flows_mod, manifold, summarize as summarize_mod
from .corpus import (
    convert_multiwoz,
    corpus_stats,
    domain_combination_histogram,
    load_corpus,
    write_corpus,
)
from .embed import load_embeddings
from .errors import ValidationError
from .evaluate import LabeledItem, bcubed
from .mask import mask_corpus
from .pipeline import (
    PipelineConfig,
    _build_gazetteer,
    _working_set,
    emit_plot_data,
    grid_search,
    run_pipeline,
    _write_csv,
)


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline config JSON")


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config)
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "min_samples", None) is not None:
        cfg.cluster.min_samples = args.min_samples
    if getattr(args, "min_cluster_size", None) is not None:
        cfg.cluster.min_cluster_size = args.min_cluster_size
    if getattr(args, "level", None):
        cfg.eval.levels = [args.level]
    if getattr(args, "mode", None):
        cfg.eval.modes = [args.mode]
    if getattr(args, "topk", None) is not None:
        cfg.flows.topk = args.topk
    if getattr(args, "min_support", None) is not None:
        cfg.flows.min_support = args.min_support
    if getattr(args, "seed", None) is not None:
        cfg.reduce.seed = args.seed
        cfg.study.seed = args.seed
    if getattr(args, "workers", None) is not None:
        cfg.grid.workers = args.workers
    return cfg


def _prepare(cfg: PipelineConfig):
    """Shared front of the single-stage verbs: load, mask, filter, reduce."""
    corpus = load_corpus(cfg.corpus)
    if cfg.mask.enabled:
        corpus = mask_corpus(_build_gazetteer(cfg.mask), corpus)
    emb = load_embeddings(cfg.emb_matrix, cfg.emb_keys)
    work = _working_set(cfg, corpus, emb)
    if cfg.reduce.enabled:
        points = manifold.reduce(work.vectors, cfg.reduce.params())
    else:
        points = work.vectors
    return work, points


def _cluster_once(cfg: PipelineConfig, work, points) -> clustering.ClusterResult:
    return clustering.cluster(
        points,
        clustering.ClusterParams(
            min_cluster_size=cfg.cluster.min_cluster_size,
            min_samples=cfg.cluster.min_samples,
        ),
    )


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_convert(args: argparse.Namespace) -> int:
    corpus = convert_multiwoz(args.data, acts_path=args.acts)
    write_corpus(corpus, args.out)
    print(f"wrote {corpus.n_utterances} utterances to {args.out}")
    return 0


def cmd_mask(args: argparse.Namespace) -> int:
    cfg = PipelineConfig.from_file(args.config)
    corpus = load_corpus(cfg.corpus if args.corpus is None else args.corpus)
    masked = mask_corpus(_build_gazetteer(cfg.mask), corpus)
    write_corpus(masked, args.out)
    print(f"wrote masked corpus to {args.out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    stats = corpus_stats(corpus)
    hist = domain_combination_histogram(corpus, min_count=args.min_count)
    blob = {
        "n_dialogues": stats.n_dialogues,
        "n_utterances": stats.n_utterances,
        "n_single_domain": stats.n_single_domain,
        "n_multi_domain": stats.n_multi_domain,
        "mean_turns_single_domain": stats.mean_turns_single_domain,
        "mean_turns_multi_domain": stats.mean_turns_multi_domain,
        "domain_combinations": [
            {"domains": sorted(combo), "count": count} for combo, count in hist
        ],
    }
    print(json.dumps(blob, indent=2, sort_keys=True))
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    work, points = _prepare(cfg)
    result = _cluster_once(cfg, work, points)
    out = _out_dir(cfg)
    soft = (
        np.argmax(result.memberships, axis=1)
        if result.k > 0
        else np.full(len(work.keys), -1)
    )
    _write_csv(
        out / "clusters.csv",
        ["key", "label", "probability", "outlier_score", "soft_argmax"],
        [
            (
                work.keys[i],
                int(result.labels[i]),
                float(result.probabilities[i]),
                float(result.outlier_scores[i]),
                int(soft[i]),
            )
            for i in range(len(work.keys))
        ],
    )
    noise = int(np.sum(result.labels == -1))
    validity = "" if result.relative_validity is None else repr(result.relative_validity)
    print(
        f"k={result.k} noise={noise}/{len(work.keys)} validity={validity} "
        f"-> {out / 'clusters.csv'}"
    )
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    work, points = _prepare(cfg)
    result = grid_search(points, cfg.grid)
    out = _out_dir(cfg)
    _write_csv(
        out / "grid.csv",
        ["min_samples", "min_cluster_size", "k", "validity", "error", "best"],
        [
            (c.min_samples, c.min_cluster_size, c.k, c.validity, c.error, c.best)
            for c in result.cells
        ],
    )
    print(f"best cell: {result.best_cell} -> {out / 'grid.csv'}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    work, points = _prepare(cfg)
    result = _cluster_once(cfg, work, points)
    params = clustering.ClusterParams(
        min_cluster_size=cfg.cluster.min_cluster_size,
        min_samples=cfg.cluster.min_samples,
    )
    out = _out_dir(cfg)
    rows = []
    for level in cfg.eval.levels:
        annotations = work.annotations(level)
        annotated = [i for i, cats in enumerate(annotations) if cats]
        if not annotated:
            print(f"level={level}: no annotations, skipped", file=sys.stderr)
            continue
        for mode in cfg.eval.modes:
            if mode == "hard":
                labels = result.labels
            else:
                if result.k == 0:
                    print(
                        f"mode={mode}: no clusters, skipped", file=sys.stderr
                    )
                    continue
                labels = np.argmax(result.memberships, axis=1)
            items = [
                LabeledItem(work.keys[i], int(labels[i]), annotations[i])
                for i in annotated
            ]
            scores = bcubed(
                items, noise_policy=cfg.eval.noise_policy, variant=cfg.eval.variant
            )
            rows.append(
                (
                    level,
                    mode,
                    params.resolved_min_samples(),
                    params.min_cluster_size,
                    scores.precision,
                    scores.recall,
                    scores.harmonic_mean,
                    result.k,
                )
            )
    _write_csv(
        out / "eval.csv",
        [
            "level",
            "mode",
            "min_samples",
            "min_cluster_size",
            "precision",
            "recall",
            "harmonic_mean",
            "k",
        ],
        rows,
    )
    print(f"wrote {len(rows)} rows -> {out / 'eval.csv'}")
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    work, points = _prepare(cfg)
    result = _cluster_once(cfg, work, points)
    out = _out_dir(cfg)
    summaries = summarize_mod.summarize_clusters(
        result.labels,
        work.texts,
        work.annotations(cfg.summarize.label_level),
        result.persistence,
        n_words=cfg.summarize.n_words,
    )
    _write_csv(
        out / "summary.csv",
        ["cluster", "length", "persistence", "top_words", "reference_label"],
        [
            (
                s.cluster,
                s.length,
                s.persistence,
                ";".join(w for w, _ in s.top_words),
                s.reference_label,
            )
            for s in summaries
        ],
    )
    print(f"wrote {len(summaries)} clusters -> {out / 'summary.csv'}")
    return 0


def cmd_flows(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    work, points = _prepare(cfg)
    result = _cluster_once(cfg, work, points)
    out = _out_dir(cfg)
    db = flows_mod.build_sequence_db(
        result,
        work.corpus,
        work.keys,
        source=cfg.flows.source,
        include_noise=cfg.flows.include_noise,
        collapse_repeats=cfg.flows.collapse_repeats,
    )
    if cfg.flows.min_support is not None:
        patterns = flows_mod.frequent(
            db,
            cfg.flows.min_support,
            min_len=cfg.flows.min_len,
            max_len=cfg.flows.max_len,
            count=cfg.flows.count,
        )
    else:
        patterns = flows_mod.topk(
            db,
            cfg.flows.topk,
            min_len=cfg.flows.min_len,
            max_len=cfg.flows.max_len,
            count=cfg.flows.count,
        )
    _write_csv(
        out / "flows.csv",
        ["n", "sequence", "frequency"],
        [
            (len(p.pattern), "->".join(str(s) for s in p.pattern), p.support)
            for p in patterns
        ],
    )
    print(f"wrote {len(patterns)} patterns -> {out / 'flows.csv'}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    work, points = _prepare(cfg)
    result = _cluster_once(cfg, work, points)
    out = _out_dir(cfg)
    coords = manifold.reduce(work.vectors, cfg.reduce.params(cfg.plot.target_dim))
    emit_plot_data(out / "plot2d.csv", coords, result.labels, work.keys)
    print(f"wrote layout -> {out / 'plot2d.csv'}")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = run_pipeline(cfg)
    print(f"pipeline finished -> {out / 'manifest.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intentflow",
        description="batch intent induction over dialogue corpora",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("convert", help="convert raw MultiWOZ JSON to corpus format")
    p.add_argument("--data", required=True, help="MultiWOZ data.json")
    p.add_argument("--acts", default=None, help="dialogue acts JSON (older layouts)")
    p.add_argument("--out", required=True, help="output corpus JSON")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("mask", help="apply entity masking to a corpus")
    _add_config(p)
    p.add_argument("--corpus", default=None, help="override corpus path")
    p.add_argument("--out", required=True, help="output corpus JSON")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("stats", help="corpus statistics as JSON")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.set_defaults(func=cmd_stats)

    for name, func, extras in (
        ("cluster", cmd_cluster, ("cell", "seed")),
        ("grid", cmd_grid, ("seed", "workers")),
        ("eval", cmd_eval, ("cell", "seed", "eval")),
        ("summarize", cmd_summarize, ("cell", "seed")),
        ("flows", cmd_flows, ("cell", "seed", "flows")),
        ("plot", cmd_plot, ("cell", "seed")),
        ("pipeline", cmd_pipeline, ("seed", "workers")),
    ):
        p = sub.add_parser(name, help=f"run the {name} stage")
        _add_config(p)
        p.add_argument("--out", default=None, help="override output directory")
        if "cell" in extras:
            p.add_argument("--min-samples", type=int, default=None)
            p.add_argument("--min-cluster-size", type=int, default=None)
        if "eval" in extras:
            p.add_argument("--level", default=None, choices=("domain", "intent"))
            p.add_argument("--mode", default=None, choices=("hard", "soft_argmax"))
        if "flows" in extras:
            p.add_argument("--topk", type=int, default=None)
            p.add_argument("--min-support", type=int, default=None)
        if "seed" in extras:
            p.add_argument("--seed", type=int, default=None)
        if "workers" in extras:
            p.add_argument("--workers", type=int, default=None)
        p.set_defaults(func=func)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        raise
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
