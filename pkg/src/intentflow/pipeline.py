"""End-to-end batch pipeline and its JSON configuration.

One config file holds every knob. A run loads the corpus, optionally masks
it, loads externally produced embeddings, runs the pair-similarity study,
filters by domain, reduces once, sweeps the clustering grid, then derives
evaluation rows, cluster summaries, intent flows and 2-d plot data from
the best grid cell. Artifacts are plain CSV plus a manifest with content
hashes; two runs of the same config produce byte-identical files (no
timestamps, no wall-clock anything, fixed float formatting).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clustering, flows as flows_mod, manifold, summarize as summarize_mod
from .corpus import Corpus, Dialogue, load_corpus
from .embed import EmbeddingMatrix, load_embeddings
from .errors import ConfigError, ValidationError
from .evaluate import LEVELS, MODES, NOISE_POLICIES, VARIANTS, LabeledItem, bcubed
from .mask import (
    DbFileSpec,
    Gazetteer,
    build_gazetteer,
    mask_corpus,
    pair_similarity_study,
)

ARTIFACTS = (
    "grid.csv",
    "clusters.csv",
    "summary.csv",
    "flows.csv",
    "plot2d.csv",
    "manifest.json",
)


# -- configuration -----------------------------------------------------------

def _take(section: dict, where: str, allowed: dict):
    """Pop known keys with defaults; anything left over is a typo."""
    out = {}
    for key, default in allowed.items():
        out[key] = section.pop(key, default)
    if section:
        raise ConfigError(f"{where}: unknown keys {sorted(section)}")
    return out


@dataclass
class MaskConfig:
    enabled: bool = True
    db_files: list[DbFileSpec] = field(default_factory=list)
    extra_lexicons: dict[str, list[str]] = field(default_factory=dict)
    include_builtins: bool = True

    @classmethod
    def from_dict(cls, raw: dict) -> "MaskConfig":
        vals = _take(
            dict(raw),
            "mask",
            {
                "enabled": True,
                "db_files": [],
                "extra_lexicons": {},
                "include_builtins": True,
            },
        )
        specs = []
        for entry in vals["db_files"]:
            entry = dict(entry)
            spec = _take(entry, "mask.db_files[]", {"path": None, "fields": {}})
            if not spec["path"]:
                raise ConfigError("mask.db_files[]: path is required")
            specs.append(DbFileSpec(path=spec["path"], fields=dict(spec["fields"])))
        vals["db_files"] = specs
        return cls(**vals)


@dataclass
class FilterConfig:
    keep_domains: list[str] | None = None
    drop_domains: list[str] | None = field(default_factory=lambda: ["general"])

    @classmethod
    def from_dict(cls, raw: dict) -> "FilterConfig":
        raw = dict(raw)
        # the drop default only applies when keep is not in play
        default_drop = None if raw.get("keep_domains") else ["general"]
        vals = _take(
            dict(raw), "filter", {"keep_domains": None, "drop_domains": default_drop}
        )
        if vals["keep_domains"] is not None and vals["drop_domains"] is not None:
            raise ConfigError("filter: keep_domains and drop_domains are exclusive")
        return cls(**vals)


@dataclass
class ReduceConfig:
    enabled: bool = True
    target_dim: int = 5
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int = 200
    metric: str = "cosine"
    seed: int = 42

    @classmethod
    def from_dict(cls, raw: dict) -> "ReduceConfig":
        defaults = {f.name: f.default for f in dataclasses.fields(cls)}
        return cls(**_take(dict(raw), "reduce", defaults))

    def params(self, target_dim: int | None = None) -> manifold.ReductionParams:
        return manifold.ReductionParams(
            n_neighbors=self.n_neighbors,
            min_dist=self.min_dist,
            n_epochs=self.n_epochs,
            target_dim=self.target_dim if target_dim is None else target_dim,
            metric=self.metric,
            seed=self.seed,
        )


@dataclass
class PlotConfig:
    enabled: bool = True
    target_dim: int = 2

    @classmethod
    def from_dict(cls, raw: dict) -> "PlotConfig":
        return cls(**_take(dict(raw), "plot", {"enabled": True, "target_dim": 2}))


@dataclass
class GridSpec:
    min_samples: list[int] = field(default_factory=lambda: list(range(10, 101, 10)))
    min_cluster_size: list[int] = field(
        default_factory=lambda: list(range(25, 301, 25))
    )
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "GridSpec":
        defaults = {
            "min_samples": list(range(10, 101, 10)),
            "min_cluster_size": list(range(25, 301, 25)),
            "workers": 1,
        }
        return cls(**_take(dict(raw), "grid", defaults))

    def validate(self) -> None:
        for name, axis, floor in (
            ("min_samples", self.min_samples, 1),
            ("min_cluster_size", self.min_cluster_size, 2),
        ):
            if not axis:
                raise ConfigError(f"grid.{name} must be non-empty")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ConfigError(f"grid.{name} must be strictly increasing")
            if axis[0] < floor:
                raise ConfigError(f"grid.{name} values must be >= {floor}")
        if self.workers < 1:
            raise ConfigError("grid.workers must be >= 1")

    def cells(self) -> list[tuple[int, int]]:
        return [(ms, mcs) for ms in self.min_samples for mcs in self.min_cluster_size]


@dataclass
class ClusterConfig:
    min_cluster_size: int = 25
    min_samples: int | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ClusterConfig":
        return cls(
            **_take(dict(raw), "cluster", {"min_cluster_size": 25, "min_samples": None})
        )


@dataclass
class EvalConfig:
    levels: list[str] = field(default_factory=lambda: ["domain", "intent"])
    modes: list[str] = field(default_factory=lambda: ["hard", "soft_argmax"])
    noise_policy: str = "exclude"
    variant: str = "extended"

    @classmethod
    def from_dict(cls, raw: dict) -> "EvalConfig":
        vals = _take(
            dict(raw),
            "eval",
            {
                "levels": ["domain", "intent"],
                "modes": ["hard", "soft_argmax"],
                "noise_policy": "exclude",
                "variant": "extended",
            },
        )
        cfg = cls(**vals)
        for level in cfg.levels:
            if level not in LEVELS:
                raise ConfigError(f"eval.levels: unknown level {level!r}")
        for mode in cfg.modes:
            if mode not in MODES:
                raise ConfigError(f"eval.modes: unknown mode {mode!r}")
        if cfg.noise_policy not in NOISE_POLICIES:
            raise ConfigError(f"eval.noise_policy: {cfg.noise_policy!r}")
        if cfg.variant not in VARIANTS:
            raise ConfigError(f"eval.variant: {cfg.variant!r}")
        return cfg


@dataclass
class SummarizeConfig:
    n_words: int = 5
    label_level: str = "domain"

    @classmethod
    def from_dict(cls, raw: dict) -> "SummarizeConfig":
        vals = _take(
            dict(raw), "summarize", {"n_words": 5, "label_level": "domain"}
        )
        if vals["label_level"] not in LEVELS:
            raise ConfigError(f"summarize.label_level: {vals['label_level']!r}")
        return cls(**vals)


@dataclass
class FlowsConfig:
    source: str = "soft_argmax"
    include_noise: bool = False
    collapse_repeats: bool = False
    min_len: int = 2
    max_len: int | None = 3
    topk: int = 20
    min_support: int | None = None
    count: str = "sequences"

    @classmethod
    def from_dict(cls, raw: dict) -> "FlowsConfig":
        defaults = {f.name: f.default for f in dataclasses.fields(cls)}
        defaults["max_len"] = 3
        vals = _take(dict(raw), "flows", defaults)
        if vals["source"] not in flows_mod.SOURCES:
            raise ConfigError(f"flows.source: {vals['source']!r}")
        if vals["count"] not in flows_mod.COUNT_SEMANTICS:
            raise ConfigError(f"flows.count: {vals['count']!r}")
        return cls(**vals)


@dataclass
class StudyConfig:
    enabled: bool = True
    n_pairs: int = 1000
    seed: int = 7
    match_mode: str = "identical"

    @classmethod
    def from_dict(cls, raw: dict) -> "StudyConfig":
        return cls(
            **_take(
                dict(raw),
                "study",
                {"enabled": True, "n_pairs": 1000, "seed": 7,
                 "match_mode": "identical"},
            )
        )


@dataclass
class PipelineConfig:
    corpus: str
    emb_matrix: str
    emb_keys: str
    out_dir: str = "run_out"
    mask: MaskConfig = field(default_factory=MaskConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    reduce: ReduceConfig = field(default_factory=ReduceConfig)
    plot: PlotConfig = field(default_factory=PlotConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    summarize: SummarizeConfig = field(default_factory=SummarizeConfig)
    flows: FlowsConfig = field(default_factory=FlowsConfig)
    study: StudyConfig = field(default_factory=StudyConfig)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        raw = dict(raw)
        top = _take(
            raw,
            "config",
            {
                "corpus": None,
                "embeddings": None,
                "out_dir": "run_out",
                "mask": {},
                "filter": {},
                "reduce": {},
                "plot": {},
                "grid": {},
                "cluster": {},
                "eval": {},
                "summarize": {},
                "flows": {},
                "study": {},
            },
        )
        if not top["corpus"]:
            raise ConfigError("config: corpus path is required")
        emb = top["embeddings"] or {}
        emb_vals = _take(dict(emb), "embeddings", {"matrix": None, "keys": None})
        if not emb_vals["matrix"] or not emb_vals["keys"]:
            raise ConfigError("config: embeddings.matrix and embeddings.keys required")
        cfg = cls(
            corpus=top["corpus"],
            emb_matrix=emb_vals["matrix"],
            emb_keys=emb_vals["keys"],
            out_dir=top["out_dir"],
            mask=MaskConfig.from_dict(top["mask"]),
            filter=FilterConfig.from_dict(top["filter"]),
            reduce=ReduceConfig.from_dict(top["reduce"]),
            plot=PlotConfig.from_dict(top["plot"]),
            grid=GridSpec.from_dict(top["grid"]),
            cluster=ClusterConfig.from_dict(top["cluster"]),
            eval=EvalConfig.from_dict(top["eval"]),
            summarize=SummarizeConfig.from_dict(top["summarize"]),
            flows=FlowsConfig.from_dict(top["flows"]),
            study=StudyConfig.from_dict(top["study"]),
        )
        cfg.grid.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw)

    def echo(self) -> dict:
        """JSON-safe config echo for the manifest; output location omitted
        so that re-running one config elsewhere stays byte-identical."""
        blob = dataclasses.asdict(self)
        blob.pop("out_dir")
        return blob


# -- grid search -------------------------------------------------------------

@dataclass
class GridCell:
    min_samples: int
    min_cluster_size: int
    k: int = 0
    validity: float | None = None
    error: str | None = None
    best: bool = False  # best validity among this row's min_cluster_sizes


@dataclass
class GridResult:
    cells: list[GridCell]
    best_cell: tuple[int, int] | None  # (min_samples, min_cluster_size)


def grid_search(points: np.ndarray, grid: GridSpec) -> GridResult:
    """Cluster every (min_samples, min_cluster_size) cell of one reduction.

    The reduction is shared: ``points`` is computed once by the caller.
    Cells that produce no clusters (or raise) carry an error marker and
    never compete for best; per min_samples the highest-validity cell is
    flagged, ties to the smaller min_cluster_size.
    """
    grid.validate()

    def run(cell: tuple[int, int]) -> GridCell:
        ms, mcs = cell
        out = GridCell(min_samples=ms, min_cluster_size=mcs)
        try:
            result = clustering.cluster(
                points,
                clustering.ClusterParams(min_cluster_size=mcs, min_samples=ms),
            )
        except Exception as exc:  # noqa: BLE001 - cell errors are data here
            out.error = f"{type(exc).__name__}: {exc}"
            return out
        out.k = result.k
        if result.k == 0:
            out.error = "no clusters (all points noise)"
        else:
            out.validity = result.relative_validity
        return out

    cells = grid.cells()
    if grid.workers > 1:
        with ThreadPoolExecutor(max_workers=grid.workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(cell) for cell in cells]

    for ms in grid.min_samples:
        row = [c for c in results if c.min_samples == ms and c.validity is not None]
        if row:
            best = min(row, key=lambda c: (-c.validity, c.min_cluster_size))
            best.best = True
    scored = [c for c in results if c.validity is not None]
    best_cell = None
    if scored:
        top = min(
            scored, key=lambda c: (-c.validity, c.min_samples, c.min_cluster_size)
        )
        best_cell = (top.min_samples, top.min_cluster_size)
    return GridResult(cells=results, best_cell=best_cell)


# -- artifact formatting -----------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def emit_plot_data(
    path: str | Path,
    coords: np.ndarray,
    labels: np.ndarray,
    keys: list[str] | None = None,
) -> None:
    """Write 2-d layout rows (x, y, label[, key]) for external plotting."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValidationError("plot data needs (n, 2) coordinates")
    if len(labels) != coords.shape[0]:
        raise ValidationError("labels must align with coordinates")
    if keys is not None and len(keys) != coords.shape[0]:
        raise ValidationError("keys must align with coordinates")
    header = ["x", "y", "label"] + (["key"] if keys is not None else [])
    rows = []
    for i in range(coords.shape[0]):
        row = [float(coords[i, 0]), float(coords[i, 1]), int(labels[i])]
        if keys is not None:
            row.append(keys[i])
        rows.append(tuple(row))
    _write_csv(Path(path), header, rows)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


# -- pipeline ----------------------------------------------------------------

@dataclass
class WorkingSet:
    """Filtered utterances with everything the stages need, row-aligned."""

    keys: list[str]
    texts: list[str]
    domains: list[frozenset[str]]
    intents: list[frozenset[str]]
    corpus: Corpus  # filtered view, original turn indices preserved
    vectors: np.ndarray  # float64 embedding rows

    def annotations(self, level: str) -> list[frozenset[str]]:
        return self.domains if level == "domain" else self.intents


def _build_gazetteer(cfg: MaskConfig) -> Gazetteer:
    return build_gazetteer(
        db_files=cfg.db_files,
        extra_lexicons=cfg.extra_lexicons,
        include_builtins=cfg.include_builtins,
    )


def _working_set(
    config: PipelineConfig, corpus: Corpus, emb: EmbeddingMatrix
) -> WorkingSet:
    keep = set(config.filter.keep_domains) if config.filter.keep_domains else None
    drop = set(config.filter.drop_domains) if config.filter.drop_domains else None
    from .corpus import filter_utterances

    kept = filter_utterances(corpus, keep_domains=keep, drop_domains=drop)
    keys = [key.canonical() for key, _ in kept]
    vectors = emb.rows(keys).astype(np.float64)
    filtered = Corpus()
    for key, utt in kept:
        dialogue = filtered.dialogues.setdefault(
            utt.dialogue_id, Dialogue(utt.dialogue_id)
        )
        dialogue.turns.append(utt)
    return WorkingSet(
        keys=keys,
        texts=[utt.text for _, utt in kept],
        domains=[utt.domains for _, utt in kept],
        intents=[utt.intents for _, utt in kept],
        corpus=filtered,
        vectors=vectors,
    )


def run_pipeline(config: PipelineConfig) -> Path:
    """Execute every stage and write the artifact set to config.out_dir."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    notices: list[str] = []
    stages: dict[str, str] = {}

    corpus = load_corpus(config.corpus)
    if config.mask.enabled:
        corpus = mask_corpus(_build_gazetteer(config.mask), corpus)
        stages["mask"] = "ran"
    else:
        stages["mask"] = "disabled"
    emb = load_embeddings(config.emb_matrix, config.emb_keys)

    manifest: dict = {"parameters": config.echo()}

    if config.study.enabled:
        report = pair_similarity_study(
            corpus,
            emb,
            n_pairs=config.study.n_pairs,
            seed=config.study.seed,
            match_mode=config.study.match_mode,
        )
        rows = []
        summary: dict = {}
        for name, cat in report.categories.items():
            rows.extend((name, s) for s in cat.similarities)
            summary[name] = {
                "eligible_pairs": cat.eligible_pairs,
                "sample_count": cat.sample_count,
                "mean": cat.mean,
                "std": cat.std,
            }
        _write_csv(out_dir / "study.csv", ["category", "similarity"], rows)
        with open(out_dir / "study_summary.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "n_pairs": report.n_pairs,
                    "seed": report.seed,
                    "match_mode": report.match_mode,
                    "categories": summary,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        stages["study"] = "ran"
    else:
        stages["study"] = "disabled"

    work = _working_set(config, corpus, emb)
    n = len(work.keys)
    if n == 0:
        raise ValidationError("domain filter left no utterances")

    if config.reduce.enabled:
        points = manifold.reduce(work.vectors, config.reduce.params())
        stages["reduce"] = "ran"
    else:
        points = work.vectors
        stages["reduce"] = "disabled"

    grid_result = grid_search(points, config.grid)
    _write_csv(
        out_dir / "grid.csv",
        ["min_samples", "min_cluster_size", "k", "validity", "error", "best"],
        [
            (c.min_samples, c.min_cluster_size, c.k, c.validity, c.error, c.best)
            for c in grid_result.cells
        ],
    )
    stages["grid"] = "ran"
    manifest["best_cell"] = (
        None
        if grid_result.best_cell is None
        else {
            "min_samples": grid_result.best_cell[0],
            "min_cluster_size": grid_result.best_cell[1],
        }
    )

    cache: dict[tuple[int, int], clustering.ClusterResult] = {}

    def cluster_at(ms: int, mcs: int) -> clustering.ClusterResult:
        if (ms, mcs) not in cache:
            cache[(ms, mcs)] = clustering.cluster(
                points, clustering.ClusterParams(min_cluster_size=mcs, min_samples=ms)
            )
        return cache[(ms, mcs)]

    # evaluation rows at each per-min_samples best cell
    eval_rows: list[tuple] = []
    flagged = [c for c in grid_result.cells if c.best]
    for level in config.eval.levels:
        annotated = [i for i, cats in enumerate(work.annotations(level)) if cats]
        if not annotated:
            notices.append(f"eval skipped at level={level}: no annotations")
            continue
        if len(annotated) < n:
            notices.append(
                f"eval at level={level}: {n - len(annotated)} of {n} "
                "utterances lack annotations and were skipped"
            )
        for cell in flagged:
            result = cluster_at(cell.min_samples, cell.min_cluster_size)
            for mode in config.eval.modes:
                labels = (
                    result.labels
                    if mode == "hard"
                    else np.argmax(result.memberships, axis=1)
                )
                items = [
                    LabeledItem(
                        work.keys[i], int(labels[i]), work.annotations(level)[i]
                    )
                    for i in annotated
                ]
                try:
                    scores = bcubed(
                        items,
                        noise_policy=config.eval.noise_policy,
                        variant=config.eval.variant,
                    )
                except ValidationError as exc:
                    notices.append(
                        f"eval failed at level={level} mode={mode} "
                        f"cell=({cell.min_samples},{cell.min_cluster_size}): {exc}"
                    )
                    continue
                eval_rows.append(
                    (
                        level,
                        mode,
                        cell.min_samples,
                        cell.min_cluster_size,
                        scores.precision,
                        scores.recall,
                        scores.harmonic_mean,
                        result.k,
                    )
                )
    if eval_rows or flagged:
        _write_csv(
            out_dir / "eval.csv",
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
            eval_rows,
        )
        stages["eval"] = "ran"
    else:
        stages["eval"] = "skipped"

    if grid_result.best_cell is not None:
        best = cluster_at(*grid_result.best_cell)
        soft = np.argmax(best.memberships, axis=1)
        _write_csv(
            out_dir / "clusters.csv",
            ["key", "label", "probability", "outlier_score", "soft_argmax"],
            [
                (
                    work.keys[i],
                    int(best.labels[i]),
                    float(best.probabilities[i]),
                    float(best.outlier_scores[i]),
                    int(soft[i]),
                )
                for i in range(n)
            ],
        )
        stages["cluster"] = "ran"

        summaries = summarize_mod.summarize_clusters(
            best.labels,
            work.texts,
            work.annotations(config.summarize.label_level),
            best.persistence,
            n_words=config.summarize.n_words,
        )
        _write_csv(
            out_dir / "summary.csv",
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
        stages["summarize"] = "ran"

        db = flows_mod.build_sequence_db(
            best,
            work.corpus,
            work.keys,
            source=config.flows.source,
            include_noise=config.flows.include_noise,
            collapse_repeats=config.flows.collapse_repeats,
        )
        if config.flows.min_support is not None:
            patterns = flows_mod.frequent(
                db,
                config.flows.min_support,
                min_len=config.flows.min_len,
                max_len=config.flows.max_len,
                count=config.flows.count,
            )
        else:
            patterns = flows_mod.topk(
                db,
                config.flows.topk,
                min_len=config.flows.min_len,
                max_len=config.flows.max_len,
                count=config.flows.count,
            )
        _write_csv(
            out_dir / "flows.csv",
            ["n", "sequence", "frequency"],
            [
                (len(p.pattern), "->".join(str(s) for s in p.pattern), p.support)
                for p in patterns
            ],
        )
        stages["flows"] = "ran"
        manifest["flows_count_semantics"] = config.flows.count

        if config.plot.enabled:
            if n > config.reduce.n_neighbors:
                plot_coords = manifold.reduce(
                    work.vectors, config.reduce.params(config.plot.target_dim)
                )
                emit_plot_data(
                    out_dir / "plot2d.csv", plot_coords, best.labels, work.keys
                )
                stages["plot"] = "ran"
            else:
                notices.append("plot skipped: too few points for n_neighbors")
                stages["plot"] = "skipped"
        else:
            stages["plot"] = "disabled"
    else:
        notices.append("no grid cell produced clusters; downstream stages skipped")
        for name in ("cluster", "summarize", "flows", "plot"):
            stages[name] = "skipped"

    manifest["stages"] = stages
    manifest["notices"] = notices
    manifest["counts"] = {
        "dialogues": len(corpus),
        "utterances": corpus.n_utterances,
        "working_utterances": n,
    }
    artifacts = {}
    for name in sorted(p.name for p in out_dir.iterdir() if p.is_file()):
        if name == "manifest.json":
            continue
        artifacts[name] = _sha256(out_dir / name)
    manifest["artifacts"] = artifacts
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir
