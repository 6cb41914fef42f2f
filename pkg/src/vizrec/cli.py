"""Command-line interface: features, describe, build-retrieval, recommend,
evaluate, ablate.

Settings come from an optional JSON config file; any field can be overridden
by the flag of the same dotted name. Credentials are read from the
LLM4VIS_API_KEY environment variable only.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import os
import sys

from .errors import ConfigError, VizRecError
from .features import extract_features
from .gateway import (
    API_KEY_ENV,
    DEFAULT_API_BASE,
    DEFAULT_MODEL_ID,
    Gateway,
    LiveProvider,
    MockProvider,
    RequestSettings,
    ResponseCache,
)
from .pipeline import (
    AblationAxis,
    BootstrapConfig,
    Recommendation,
    bootstrap_retrieval_set,
    evaluate_hits_at_2,
    explanation_consistency,
    prune_retrieval_set,
    recommend_all,
    run_ablation,
)
from .prompts import DEFAULT_TEMPLATES, TemplateSet, describe_dataset
from .retrieval import (
    Ordering,
    RetrievalConfig,
    build_retrieval_set,
    load_retrieval_set,
    save_retrieval_set,
)
from .tabular import load_corpus

_BACKENDS = ("live", "cached-live", "mock")


@dataclasses.dataclass
class RunConfig:
    """Flat run settings; the JSON form nests retrieval.* and bootstrap.*."""

    seed: int = 0
    backend: str = "mock"
    cache_dir: str | None = None
    templates_dir: str | None = None
    model: str = DEFAULT_MODEL_ID
    api_base: str = DEFAULT_API_BASE
    parallelism: int = 1
    mock_transcript: str | None = None
    corpus: str | None = None
    store: str | None = None
    output: str | None = None
    retrieval_n_clusters: int = 4
    retrieval_per_cluster: int = 15
    retrieval_k: int = 8
    retrieval_ordering: str = "nearest"
    bootstrap_margin: float = 0.1
    bootstrap_max_iters: int = 3
    bootstrap_sum_tolerance: float = 0.05

    _GROUPS = {"retrieval": ("n_clusters", "per_cluster", "k", "ordering"),
               "bootstrap": ("margin", "max_iters", "sum_tolerance")}

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path}: invalid JSON: {e.msg}") from None
        if not isinstance(obj, dict):
            raise ConfigError(f"config {path}: expected a JSON object")
        flat = {}
        for key, value in obj.items():
            if key in cls._GROUPS:
                if not isinstance(value, dict):
                    raise ConfigError(f"config {path}: {key!r} must be an object")
                for sub, subval in value.items():
                    if sub not in cls._GROUPS[key]:
                        raise ConfigError(f"config {path}: unknown key {key}.{sub}")
                    flat[f"{key}_{sub}"] = subval
            else:
                flat[key] = value
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(flat) - known
        if unknown:
            raise ConfigError(f"config {path}: unknown key {sorted(unknown)[0]!r}")
        try:
            return cls(**flat)
        except TypeError as e:
            raise ConfigError(f"config {path}: {e}") from None

    def apply_flags(self, args: argparse.Namespace) -> None:
        for field in dataclasses.fields(self):
            value = getattr(args, field.name, None)
            if value is not None:
                setattr(self, field.name, value)

    def validate(self) -> None:
        if self.backend not in _BACKENDS:
            raise ConfigError(
                f"unknown backend {self.backend!r}; expected one of {', '.join(_BACKENDS)}"
            )
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")

    def retrieval_config(self) -> RetrievalConfig:
        return RetrievalConfig(
            n_clusters=self.retrieval_n_clusters,
            per_cluster=self.retrieval_per_cluster,
            k=self.retrieval_k,
            seed=self.seed,
            ordering=Ordering(self.retrieval_ordering),
        )

    def bootstrap_config(self) -> BootstrapConfig:
        return BootstrapConfig(
            margin=self.bootstrap_margin,
            max_iters=self.bootstrap_max_iters,
            sum_tolerance=self.bootstrap_sum_tolerance,
        )

    def templates(self) -> TemplateSet:
        if self.templates_dir is None:
            return DEFAULT_TEMPLATES
        return TemplateSet.from_dir(self.templates_dir)


def build_gateway(cfg: RunConfig) -> Gateway:
    """Wire the provider stack; validates credentials before any other work."""
    cache = ResponseCache(cfg.cache_dir) if cfg.cache_dir else None
    if cfg.backend == "mock":
        if not cfg.mock_transcript:
            raise ConfigError("backend=mock requires a mock_transcript path")
        provider = MockProvider.from_path(cfg.mock_transcript)
    else:
        api_key = os.environ.get(API_KEY_ENV, "")
        if not api_key:
            raise ConfigError(
                f"backend={cfg.backend} requires the {API_KEY_ENV} environment variable"
            )
        if cfg.backend == "cached-live" and cache is None:
            raise ConfigError("backend=cached-live requires cache_dir")
        provider = LiveProvider(api_key=api_key, api_base=cfg.api_base)
    return Gateway(provider, cache, RequestSettings(model_id=cfg.model))


@contextlib.contextmanager
def _open_output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def _required(value: str | None, what: str) -> str:
    if not value:
        raise ConfigError(f"no {what} given; pass it as an argument or in the config")
    return value


def cmd_features(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpus_path = _required(args.corpus or cfg.corpus, "corpus")
    datasets = load_corpus(corpus_path, labeled=False)
    with _open_output(args.output or cfg.output) as out:
        for dataset in datasets:
            fm = extract_features(dataset)
            out.write(_dump({
                "id": dataset.id,
                "schema_version": fm.schema_version,
                "features": fm.values,
            }) + "\n")
    return 0


def cmd_describe(cfg: RunConfig, args: argparse.Namespace) -> int:
    gateway = build_gateway(cfg)
    templates = cfg.templates()
    corpus_path = _required(args.corpus or cfg.corpus, "corpus")
    datasets = load_corpus(corpus_path, labeled=False)
    with _open_output(args.output or cfg.output) as out:
        for dataset in datasets:
            description = describe_dataset(extract_features(dataset), gateway, templates)
            out.write(_dump({
                "id": dataset.id,
                "description": description.text,
                "has_single_column_section": description.has_single_column_section,
                "has_cross_column_section": description.has_cross_column_section,
                "contains_forbidden_chart_words": description.contains_forbidden_chart_words,
            }) + "\n")
    return 0


def cmd_build_retrieval(cfg: RunConfig, args: argparse.Namespace) -> int:
    gateway = build_gateway(cfg)
    templates = cfg.templates()
    corpus_path = _required(args.corpus or cfg.corpus, "corpus")
    out_path = _required(args.output or cfg.store or cfg.output, "output path")
    records = load_corpus(corpus_path, labeled=True)
    retrieval_set = build_retrieval_set(records, cfg.retrieval_config())
    bootstrap_retrieval_set(
        retrieval_set, gateway, cfg.bootstrap_config(), templates, cfg.parallelism
    )
    pruned = prune_retrieval_set(retrieval_set)
    save_retrieval_set(pruned, out_path)
    return 0


def cmd_recommend(cfg: RunConfig, args: argparse.Namespace) -> int:
    gateway = build_gateway(cfg)
    templates = cfg.templates()
    store_path = _required(args.store or cfg.store, "retrieval store")
    corpus_path = _required(args.corpus or cfg.corpus, "corpus")
    retrieval_set = load_retrieval_set(store_path)
    tests = load_corpus(corpus_path, labeled=False)
    recommendations = recommend_all(
        tests,
        retrieval_set,
        cfg.retrieval_config(),
        gateway,
        cfg.bootstrap_config(),
        templates,
        cfg.parallelism,
    )
    with _open_output(args.output or cfg.output) as out:
        for rec in recommendations:
            out.write(_dump(rec.to_obj()) + "\n")
    return 0


def _load_recommendations(path: str) -> list:
    recommendations = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for i, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                rec = Recommendation.from_obj(json.loads(text))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise VizRecError(f"{path} line {i}: bad recommendation record: {e}")
            if rec.dataset_id in seen:
                raise VizRecError(f"{path} line {i}: duplicate id {rec.dataset_id!r}")
            seen.add(rec.dataset_id)
            recommendations.append(rec)
    if not recommendations:
        raise VizRecError(f"no recommendations found in {path}")
    return recommendations


def cmd_evaluate(cfg: RunConfig, args: argparse.Namespace) -> int:
    gateway = build_gateway(cfg) if args.consistency else None
    templates = cfg.templates()
    recommendations = _load_recommendations(args.recommendations)
    labels = {
        r.dataset.id: r.label for r in load_corpus(args.labels, labeled=True)
    }
    rec_ids = {rec.dataset_id for rec in recommendations}
    if rec_ids != set(labels):
        missing = sorted(rec_ids - set(labels)) + sorted(set(labels) - rec_ids)
        raise VizRecError(f"recommendation/label id mismatch, starting at {missing[0]!r}")
    gts = [labels[rec.dataset_id] for rec in recommendations]
    metrics = evaluate_hits_at_2(recommendations, gts)
    obj = metrics.to_obj()
    if args.consistency:
        obj["consistency"] = explanation_consistency(
            recommendations, gateway, templates, cfg.bootstrap_sum_tolerance
        )
    with _open_output(args.output or cfg.output) as out:
        out.write(_dump(obj) + "\n")
    return 0


def cmd_ablate(cfg: RunConfig, args: argparse.Namespace) -> int:
    gateway = build_gateway(cfg)
    templates = cfg.templates()
    store_path = _required(args.store or cfg.store, "retrieval store")
    corpus_path = _required(args.corpus or cfg.corpus, "corpus")
    retrieval_set = load_retrieval_set(store_path)
    tests = load_corpus(corpus_path, labeled=True)
    axis = AblationAxis(args.axis)
    grid = [v.strip() for v in args.grid.split(",") if v.strip()]
    rows = run_ablation(
        axis,
        grid,
        retrieval_set,
        tests,
        cfg.retrieval_config(),
        gateway,
        cfg.bootstrap_config(),
        templates,
        cfg.parallelism,
    )
    with _open_output(args.output or cfg.output) as out:
        for value, metrics in rows:
            rendered = value.value if isinstance(value, Ordering) else value
            out.write(_dump({
                "axis": axis.value,
                "value": rendered,
                "metrics": metrics.to_obj(),
            }) + "\n")
    return 0


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("run settings")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--seed", type=int, help="seed for clustering and ordering")
    g.add_argument("--backend", choices=_BACKENDS, help="LLM backend")
    g.add_argument("--cache-dir", help="response cache directory")
    g.add_argument("--templates-dir", help="prompt template override directory")
    g.add_argument("--model", help="provider model id")
    g.add_argument("--api-base", help="provider API base URL")
    g.add_argument("--parallelism", type=int, help="worker threads for LLM calls")
    g.add_argument("--mock-transcript", help="transcript JSONL for backend=mock")
    o = parent.add_argument_group("setting overrides")
    o.add_argument("--retrieval.n_clusters", dest="retrieval_n_clusters", type=int,
                   help="clusters C")
    o.add_argument("--retrieval.per_cluster", dest="retrieval_per_cluster", type=int,
                   help="representatives per cluster R")
    o.add_argument("--retrieval.k", dest="retrieval_k", type=int,
                   help="demonstrations per prompt K")
    o.add_argument("--retrieval.ordering", dest="retrieval_ordering",
                   choices=[m.value for m in Ordering], help="demonstration ordering")
    o.add_argument("--bootstrap.margin", dest="bootstrap_margin", type=float,
                   help="acceptance margin")
    o.add_argument("--bootstrap.max_iters", dest="bootstrap_max_iters", type=int,
                   help="bootstrap iteration cap")
    o.add_argument("--bootstrap.sum_tolerance", dest="bootstrap_sum_tolerance",
                   type=float, help="allowed deviation of score sums from 1")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(
        prog="vizrec",
        description="Visualization-type recommendation for two-column tabular data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", parents=[parent],
                       help="extract feature maps as NDJSON")
    p.add_argument("corpus", nargs="?", help="corpus JSONL path")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("describe", parents=[parent],
                       help="generate feature descriptions via the LLM")
    p.add_argument("corpus", nargs="?", help="corpus JSONL path")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.set_defaults(handler=cmd_describe)

    p = sub.add_parser("build-retrieval", parents=[parent],
                       help="cluster, describe, bootstrap, and prune the retrieval set")
    p.add_argument("corpus", nargs="?", help="labeled corpus JSONL path")
    p.add_argument("-o", "--output", help="retrieval store output path")
    p.set_defaults(handler=cmd_build_retrieval)

    p = sub.add_parser("recommend", parents=[parent],
                       help="score visualization types for test datasets")
    p.add_argument("corpus", nargs="?", help="test corpus JSONL path")
    p.add_argument("--store", help="retrieval store path")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.set_defaults(handler=cmd_recommend)

    p = sub.add_parser("evaluate", parents=[parent],
                       help="compute Hits@2 metrics for a recommendation file")
    p.add_argument("recommendations", help="recommendation NDJSON path")
    p.add_argument("--labels", required=True, help="labeled corpus JSONL path")
    p.add_argument("--consistency", action="store_true",
                   help="also re-score explanations and report their correlation")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("ablate", parents=[parent],
                       help="sweep one retrieval setting and evaluate each value")
    p.add_argument("corpus", nargs="?", help="labeled test corpus JSONL path")
    p.add_argument("--store", help="retrieval store path")
    p.add_argument("--axis", required=True,
                   choices=[a.value for a in AblationAxis], help="setting to sweep")
    p.add_argument("--grid", required=True, help="comma-separated grid values")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.set_defaults(handler=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        cfg.apply_flags(args)
        cfg.validate()
        return args.handler(cfg, args)
    except VizRecError as e:
        message = " ".join(str(e).split())
        print(f"error: {message}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
