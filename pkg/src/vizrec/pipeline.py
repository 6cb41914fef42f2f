"""Orchestration: bootstrapping, recommendation, and evaluation.

The bootstrap loop turns labeled retrieval entries into demonstration
material: a zero-shot scoring pass followed by hint-guided refinements until
the ground-truth type wins by the acceptance margin, or the entry is pruned.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

from . import kernels
from .errors import ConfigError, ParseError, VizRecError
from .features import extract_features
from .gateway import Gateway, cache_key
from .prompts import (
    DEFAULT_TEMPLATES,
    DemonstrationBlock,
    Explanation,
    FeatureDescription,
    HintFill,
    ScoreVector,
    TemplateSet,
    compose_demonstration,
    describe_dataset,
    parse_scores,
    render_hint_prompt,
    render_recommendation_prompt,
    render_rescoring_prompt,
)
from .retrieval import (
    BootstrapOutcome,
    BootstrapStatus,
    BootstrapStep,
    Ordering,
    RetrievalConfig,
    RetrievalEntry,
    RetrievalSet,
    nearest_demonstrations,
    truncate_retrieval_set,
)
from .tabular import CANONICAL_TYPES, TabularDataset, VisualizationType
from .vectorize import vectorize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BootstrapConfig:
    margin: float = 0.1
    max_iters: int = 3
    sum_tolerance: float = 0.05

    def __post_init__(self):
        if not 0 < self.margin < 1:
            raise ConfigError("margin must be in (0, 1)")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if self.sum_tolerance < 0:
            raise ConfigError("sum_tolerance must be nonnegative")


def accept_scores(scores: ScoreVector, gt: VisualizationType, margin: float) -> bool:
    """True iff gt holds the unique maximum and leads by at least the margin."""
    gt_score = scores.score(gt)
    best_other = max(
        v for t, v in zip(CANONICAL_TYPES, scores.values) if t is not gt
    )
    return gt_score > best_other and gt_score - best_other >= margin


def compose_hint(
    prev: ScoreVector, gt: VisualizationType, margin: float = 0.1
) -> HintFill:
    """Fill the hint slots from a rejected scoring round.

    b is the highest-scoring type other than gt, ties broken by canonical
    order; c is the inline rendering of the previous scores.
    """
    if accept_scores(prev, gt, margin):
        raise VizRecError("scores already satisfy acceptance; no hint to compose")
    others = [
        (i, t) for i, t in enumerate(CANONICAL_TYPES) if t is not gt
    ]
    b_type = min(others, key=lambda it: (-prev.values[it[0]], it[0]))[1]
    return HintFill(a=gt.display_name, b=b_type.display_name, c=prev.render_inline())


def build_demonstration(
    entry: RetrievalEntry, templates: TemplateSet = DEFAULT_TEMPLATES
) -> DemonstrationBlock:
    """Turn an accepted retrieval entry into a prompt demonstration block."""
    if entry.description is None:
        raise VizRecError(f"entry {entry.dataset_id!r} has no description")
    if not entry.is_accepted:
        raise VizRecError(f"entry {entry.dataset_id!r} not accepted")
    scores, explanation = entry.bootstrap.final
    return compose_demonstration(
        FeatureDescription(text=entry.description), explanation, scores, templates
    )


def bootstrap_example(
    entry: RetrievalEntry,
    gateway: Gateway,
    cfg: BootstrapConfig = BootstrapConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
) -> BootstrapOutcome:
    """Run the zero-shot-then-hinted scoring loop for one labeled entry.

    A parse failure consumes its iteration and is recorded; the next round
    falls back to the zero-shot prompt if no scores have parsed yet.
    """
    if entry.description is None:
        raise VizRecError(f"entry {entry.dataset_id!r} has no description")
    description = FeatureDescription(text=entry.description)
    history: list[BootstrapStep] = []
    last_scores: ScoreVector | None = None
    for _ in range(cfg.max_iters):
        if last_scores is None:
            prompt = render_recommendation_prompt(description, [], templates)
        else:
            hint = compose_hint(last_scores, entry.label, cfg.margin)
            prompt = render_hint_prompt(description, hint, templates)
        response = gateway.complete_text(prompt)
        try:
            scores, explanation = parse_scores(response.text, cfg.sum_tolerance)
        except ParseError as e:
            logger.warning(
                "bootstrap parse failure for %r: %s", entry.dataset_id, e
            )
            history.append(BootstrapStep(error=str(e)))
            continue
        history.append(BootstrapStep(scores=scores, explanation=explanation))
        last_scores = scores
        if accept_scores(scores, entry.label, cfg.margin):
            return BootstrapOutcome(
                status=BootstrapStatus.ACCEPTED,
                history=tuple(history),
                final=(scores, explanation),
            )
    return BootstrapOutcome(status=BootstrapStatus.PRUNED, history=tuple(history))


def _parallel_map(fn: Callable, items: Sequence, parallelism: int) -> list:
    if parallelism <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))


def bootstrap_retrieval_set(
    retrieval_set: RetrievalSet,
    gateway: Gateway,
    cfg: BootstrapConfig = BootstrapConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
    parallelism: int = 1,
) -> RetrievalSet:
    """Describe and bootstrap every entry in place; returns the same set."""

    def process(entry: RetrievalEntry) -> None:
        if entry.description is None:
            entry.description = describe_dataset(entry.features, gateway, templates).text
        entry.bootstrap = bootstrap_example(entry, gateway, cfg, templates)

    _parallel_map(process, retrieval_set.entries, parallelism)
    return retrieval_set


def prune_retrieval_set(retrieval_set: RetrievalSet) -> RetrievalSet:
    """Drop pruned entries; standardization stats are kept as-is."""
    for entry in retrieval_set.entries:
        if entry.bootstrap is None:
            raise VizRecError(
                f"entry {entry.dataset_id!r} has no bootstrap outcome; bootstrap first"
            )
    kept = [e for e in retrieval_set.entries if e.is_accepted]
    dropped = len(retrieval_set.entries) - len(kept)
    if dropped:
        logger.info("pruned %d entr%s", dropped, "y" if dropped == 1 else "ies")
    if not kept:
        logger.warning(
            "every entry was pruned; the retrieval set is empty and K must be 0"
        )
    return RetrievalSet(
        schema_version=retrieval_set.schema_version,
        stats=retrieval_set.stats,
        config=retrieval_set.config,
        entries=kept,
    )


@dataclass(frozen=True)
class Recommendation:
    dataset_id: str
    scores: ScoreVector
    top2: tuple  # (VisualizationType, VisualizationType)
    explanation: Explanation
    demo_ids: tuple  # dataset ids of the demonstrations, in prompt order
    prompt_digest: str

    def to_obj(self) -> dict:
        return {
            "id": self.dataset_id,
            "scores": self.scores.as_dict(),
            "top2": [t.display_name for t in self.top2],
            "explanation": self.explanation.text,
            "demo_ids": list(self.demo_ids),
            "prompt_digest": self.prompt_digest,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "Recommendation":
        by_display = {t.display_name: t for t in CANONICAL_TYPES}
        return cls(
            dataset_id=obj["id"],
            scores=ScoreVector.from_mapping(obj["scores"]),
            top2=tuple(by_display[name] for name in obj["top2"]),
            explanation=Explanation(text=obj["explanation"]),
            demo_ids=tuple(obj["demo_ids"]),
            prompt_digest=obj["prompt_digest"],
        )


def recommend(
    test: TabularDataset,
    retrieval_set: RetrievalSet,
    rcfg: RetrievalConfig,
    gateway: Gateway,
    pcfg: BootstrapConfig = BootstrapConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
) -> Recommendation:
    """Describe the test dataset, pick K demonstrations, and score it.

    A parse failure earns one retry: against a live uncached backend the
    identical request is re-sent; against a cache or mock the same text is
    re-parsed, so the failure is final.
    """
    features = extract_features(test)
    description = describe_dataset(features, gateway, templates)
    query = vectorize(features, retrieval_set.stats)
    demos = nearest_demonstrations(
        query, retrieval_set, rcfg.k, rcfg.ordering, rcfg.seed
    )
    blocks = [build_demonstration(e, templates) for e in demos]
    prompt = render_recommendation_prompt(description, blocks, templates)
    request = gateway.request_for(prompt)
    digest = cache_key(request)
    response = gateway.complete(request)
    try:
        scores, explanation = parse_scores(response.text, pcfg.sum_tolerance)
    except ParseError:
        if gateway.resend_on_parse_failure:
            response = gateway.complete(request)
        try:
            scores, explanation = parse_scores(response.text, pcfg.sum_tolerance)
        except ParseError as e:
            raise ParseError(
                f"unparseable recommendation for {test.id!r} after retry: {e}",
                raw_text=response.text,
            ) from e
    return Recommendation(
        dataset_id=test.id,
        scores=scores,
        top2=scores.top2(),
        explanation=explanation,
        demo_ids=tuple(e.dataset_id for e in demos),
        prompt_digest=digest,
    )


def recommend_all(
    tests: Sequence[TabularDataset],
    retrieval_set: RetrievalSet,
    rcfg: RetrievalConfig,
    gateway: Gateway,
    pcfg: BootstrapConfig = BootstrapConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
    parallelism: int = 1,
) -> list:
    """Recommend for every test dataset, preserving corpus order."""
    return _parallel_map(
        lambda t: recommend(t, retrieval_set, rcfg, gateway, pcfg, templates),
        tests,
        parallelism,
    )


@dataclass(frozen=True)
class Metrics:
    """Hits@2 percentages per class and overall."""

    per_class: dict  # VisualizationType -> float | None (None when class absent)
    overall: float
    n_per_class: dict  # VisualizationType -> int
    n_total: int

    def to_obj(self) -> dict:
        obj = {}
        for vtype in CANONICAL_TYPES:
            obj[vtype.corpus_label] = self.per_class[vtype]
        obj["overall"] = self.overall
        obj["n"] = {t.corpus_label: self.n_per_class[t] for t in CANONICAL_TYPES}
        obj["n"]["total"] = self.n_total
        return obj


def evaluate_hits_at_2(
    recommendations: Sequence[Recommendation], gts: Sequence[VisualizationType]
) -> Metrics:
    """Percentage of examples whose ground truth lands in the top two."""
    if len(recommendations) == 0:
        raise VizRecError("cannot evaluate an empty recommendation list")
    if len(recommendations) != len(gts):
        raise VizRecError(
            f"{len(recommendations)} recommendations but {len(gts)} ground-truth labels"
        )
    counts = {t: 0 for t in CANONICAL_TYPES}
    hits = {t: 0 for t in CANONICAL_TYPES}
    total_hits = 0
    for rec, gt in zip(recommendations, gts):
        counts[gt] += 1
        if gt in rec.top2:
            hits[gt] += 1
            total_hits += 1
    per_class = {
        t: (100.0 * hits[t] / counts[t] if counts[t] else None) for t in CANONICAL_TYPES
    }
    overall = 100.0 * total_hits / len(recommendations)
    return Metrics(
        per_class=per_class,
        overall=overall,
        n_per_class=counts,
        n_total=len(recommendations),
    )


def explanation_consistency(
    recommendations: Sequence[Recommendation],
    gateway: Gateway,
    templates: TemplateSet = DEFAULT_TEMPLATES,
    sum_tolerance: float = 0.05,
) -> float | None:
    """Pearson r between original scores and scores re-predicted from the
    explanations alone, pooled over all examples and types.

    Returns None when either pooled series has zero variance. Examples whose
    re-scoring response fails to parse are excluded with a warning; fewer
    than 2 survivors is an error.
    """
    if len(recommendations) < 2:
        raise VizRecError("explanation consistency needs at least 2 recommendations")
    original: list[float] = []
    repredicted: list[float] = []
    survivors = 0
    for rec in recommendations:
        prompt = render_rescoring_prompt(rec.explanation, templates)
        response = gateway.complete_text(prompt)
        try:
            rescored, _ = parse_scores(response.text, sum_tolerance)
        except ParseError as e:
            logger.warning(
                "re-scoring response for %r failed to parse; excluding it: %s",
                rec.dataset_id, e,
            )
            continue
        survivors += 1
        original.extend(rec.scores.values)
        repredicted.extend(rescored.values)
    if survivors < 2:
        raise VizRecError(
            f"only {survivors} recommendation(s) survived re-scoring; need at least 2"
        )
    result = kernels.pearson(original, repredicted)
    if result is None:
        return None
    return result[0]


class AblationAxis(Enum):
    K = "K"
    RETRIEVAL_SIZE = "retrieval_size"
    ORDERING = "ordering"


def _validate_grid(
    axis: AblationAxis, grid: Sequence, retrieval_set: RetrievalSet, rcfg: RetrievalConfig
) -> list:
    if not grid:
        raise ConfigError("ablation grid is empty")
    accepted = len(retrieval_set.accepted_entries())
    values = []
    for raw in grid:
        try:
            coerced = raw if isinstance(raw, Ordering) else (
                Ordering(str(raw)) if axis is AblationAxis.ORDERING else int(raw)
            )
        except ValueError:
            raise ConfigError(f"grid value {raw!r} is not valid for axis {axis.value}")
        if axis is AblationAxis.K:
            v = coerced
            if not 0 <= v <= 8:
                raise ConfigError(f"grid value {raw!r}: K must be between 0 and 8")
            if v > accepted:
                raise ConfigError(
                    f"grid value {raw!r}: only {accepted} accepted entries available"
                )
        elif axis is AblationAxis.RETRIEVAL_SIZE:
            v = coerced
            if not 1 <= v <= len(retrieval_set.entries):
                raise ConfigError(
                    f"grid value {raw!r}: retrieval_size must be between 1 and "
                    f"{len(retrieval_set.entries)}"
                )
            truncated = truncate_retrieval_set(retrieval_set, v)
            if rcfg.k > len(truncated.accepted_entries()):
                raise ConfigError(
                    f"grid value {raw!r}: truncated set has only "
                    f"{len(truncated.accepted_entries())} accepted entries for K={rcfg.k}"
                )
        else:
            v = coerced
        values.append(v)
    return values


def run_ablation(
    axis: AblationAxis,
    grid: Sequence,
    retrieval_set: RetrievalSet,
    tests: Sequence,  # of LabeledCorpusRecord
    rcfg: RetrievalConfig,
    gateway: Gateway,
    pcfg: BootstrapConfig = BootstrapConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
    parallelism: int = 1,
) -> list:
    """Evaluate Hits@2 across one swept setting; all grid values are
    validated before the first LLM call. Returns [(grid value, Metrics)].
    """
    values = _validate_grid(axis, grid, retrieval_set, rcfg)
    if not tests:
        raise VizRecError("ablation needs a labeled test corpus")
    gts = [r.label for r in tests]
    datasets = [r.dataset for r in tests]
    rows = []
    for value in values:
        active_set = retrieval_set
        active_cfg = rcfg
        if axis is AblationAxis.K:
            active_cfg = replace(rcfg, k=value)
        elif axis is AblationAxis.RETRIEVAL_SIZE:
            active_set = truncate_retrieval_set(retrieval_set, value)
        else:
            active_cfg = replace(rcfg, ordering=value)
        recs = recommend_all(
            datasets, active_set, active_cfg, gateway, pcfg, templates, parallelism
        )
        metrics = evaluate_hits_at_2(recs, gts)
        rows.append((value, metrics))
    return rows
