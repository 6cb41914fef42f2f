"""Bundled demo fixtures: synthetic corpora and a scripted mock transcript.

Running ``python -m vizrec.demo`` regenerates data/demo: a 20-record labeled
training corpus, an 8-record labeled test corpus, a digest-matched transcript
covering every request the offline pipeline makes over them, and a ready-made
config file. The scripted provider recognizes each dataset by a tag embedded
in its generated description, so replays are order-independent.
"""

from __future__ import annotations

import json
import re
import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import GatewayError
from .features import extract_features
from .gateway import (
    ChatRequest,
    ChatResponse,
    Gateway,
    Provider,
    RecordingProvider,
)
from .pipeline import (
    AblationAxis,
    BootstrapConfig,
    bootstrap_retrieval_set,
    evaluate_hits_at_2,
    explanation_consistency,
    prune_retrieval_set,
    recommend_all,
    run_ablation,
)
from .prompts import serialize_features
from .retrieval import RetrievalConfig, build_retrieval_set
from .tabular import CANONICAL_TYPES, load_corpus

DEMO_SEED = 42
DEMO_RETRIEVAL = {"n_clusters": 4, "per_cluster": 3, "k": 2}

_TAG_RE = re.compile(r"tag ([a-z0-9-]+)")
_DISPLAY = tuple(t.display_name for t in CANONICAL_TYPES)

# Scripted test-time score vectors, canonical order (line, scatter, bar, box).
# Ground truths run line,line,scatter,scatter,bar,bar,box,box; every vector
# ranks the truth in the top two except test-08, so Hits@2 is 7/8 = 87.5
# overall with per-class 100/100/100/50.
_TEST_VECTORS = {
    "test-01": (0.6, 0.2, 0.1, 0.1),
    "test-02": (0.4, 0.3, 0.2, 0.1),
    "test-03": (0.2, 0.6, 0.1, 0.1),
    "test-04": (0.3, 0.4, 0.2, 0.1),
    "test-05": (0.1, 0.1, 0.7, 0.1),
    "test-06": (0.2, 0.3, 0.4, 0.1),
    "test-07": (0.1, 0.1, 0.2, 0.6),
    "test-08": (0.5, 0.3, 0.1, 0.1),
}
EXPECTED_OVERALL_HITS = 87.5
EXPECTED_PER_CLASS_HITS = {"line": 100.0, "scatter": 100.0, "bar": 100.0, "box": 50.0}


def _accepting_vector(gt_idx: int) -> tuple:
    vec = [0.1, 0.1, 0.1, 0.1]
    vec[gt_idx] = 0.6
    vec[(gt_idx + 1) % 4] = 0.2
    return tuple(vec)


def _near_miss_vector(gt_idx: int) -> tuple:
    wrong = 1 if gt_idx == 0 else 0
    vec = [0.15, 0.15, 0.15, 0.15]
    vec[wrong] = 0.4
    vec[gt_idx] = 0.3
    return tuple(vec)


def _rejecting_vector(gt_idx: int) -> tuple:
    wrong = 1 if gt_idx == 0 else 0
    vec = [0.15, 0.15, 0.15, 0.15]
    vec[wrong] = 0.5
    vec[gt_idx] = 0.2
    return tuple(vec)


class ScriptedDemoProvider(Provider):
    """Deterministic provider that keys its answers on dataset identity.

    Description requests are matched by their feature block; the reply embeds
    "tag <id>", which later scoring, hint, and re-scoring requests carry
    inside the quoted description or explanation.
    """

    def __init__(
        self,
        block_to_id: dict,
        zero_shot: dict,
        hinted: dict,
        rescoring: dict,
    ):
        self._block_to_id = block_to_id
        self._zero_shot = zero_shot
        self._hinted = hinted
        self._rescoring = rescoring

    @staticmethod
    def _last_tag(prompt: str) -> str:
        tags = _TAG_RE.findall(prompt)
        if not tags:
            raise GatewayError("scripted provider found no dataset tag in the prompt")
        return tags[-1]

    @staticmethod
    def _describe(dataset_id: str, block: str) -> str:
        fields = dict(
            line.split("=", 1) for line in block.splitlines() if "=" in line
        )
        return (
            "Single-column perspective: the first column carries "
            f"{fields.get('length_x', '?')} entries and the second carries "
            f"{fields.get('length_y', '?')}; their spreads and orderings are "
            f"summarized by values such as num_unique_x={fields.get('num_unique_x', '?')} "
            f"and is_sorted_x={fields.get('is_sorted_x', '?')}. Dataset tag {dataset_id}.\n\n"
            "Cross-column perspective: the paired statistics, shared-element "
            f"ratios, and correlation signals recorded for tag {dataset_id} "
            "distinguish this dataset from its neighbors in the pool."
        )

    @staticmethod
    def _score_text(dataset_id: str, vec: tuple) -> str:
        body = json.dumps(dict(zip(_DISPLAY, vec)))
        return (
            f"Explanation is as below: For the dataset carrying tag {dataset_id}, "
            "the suitability of each candidate follows from the recorded "
            "feature summary.\n"
            "The final answer in JSON format would be:\n"
            f"{body}"
        )

    def send(self, request: ChatRequest) -> ChatResponse:
        prompt = request.messages[-1].content
        if prompt.startswith("The features of a given tabular dataset"):
            block = prompt.rsplit("```", 2)[-2]
            dataset_id = self._block_to_id.get(block)
            if dataset_id is None:
                raise GatewayError("scripted provider does not know this feature block")
            return ChatResponse(text=self._describe(dataset_id, block))
        if prompt.startswith("An explanation assessing four visualization types"):
            dataset_id = self._last_tag(prompt)
            return ChatResponse(
                text=self._score_text(dataset_id, self._rescoring[dataset_id])
            )
        dataset_id = self._last_tag(prompt)
        table = self._hinted if "\nHint: " in prompt else self._zero_shot
        if dataset_id not in table:
            raise GatewayError(f"scripted provider has no scores for {dataset_id!r}")
        return ChatResponse(text=self._score_text(dataset_id, table[dataset_id]))


def _record(rid: str, x_name: str, x_values: list, y_name: str, y_values: list,
            label: str) -> dict:
    return {
        "id": rid,
        "x": {"name": x_name, "values": x_values},
        "y": {"name": y_name, "values": y_values},
        "label": label,
    }


def _line_record(rng, rid: str, n: int, start: date, base: float) -> dict:
    days = [(start + timedelta(days=7 * i)).strftime("%Y-%m-%d") for i in range(n)]
    series = np.cumsum(rng.normal(0.4, 1.0, size=n)) + base
    return _record(rid, "date", days, "weekly_total",
                   [round(float(v), 3) for v in series], "line")


def _scatter_record(rng, rid: str, n: int, slope: float) -> dict:
    x = rng.uniform(0.0, 50.0, size=n)
    y = slope * x + rng.normal(0.0, 4.0, size=n)
    return _record(rid, "input_measure", [round(float(v), 3) for v in x],
                   "response_measure", [round(float(v), 3) for v in y], "scatter")


def _bar_record(rng, rid: str, categories: list) -> dict:
    values = rng.uniform(5.0, 120.0, size=len(categories))
    return _record(rid, "region", list(categories), "amount",
                   [round(float(v), 3) for v in values], "bar")


def _box_record(rng, rid: str, n_x: int, n_y: int) -> dict:
    x = rng.normal(20.0, 3.0, size=n_x)
    y = rng.normal(45.0, 6.0, size=n_y)
    x[0] = 95.0
    y[-1] = -40.0
    return _record(rid, "sample_a", [round(float(v), 3) for v in x],
                   "sample_b", [round(float(v), 3) for v in y], "box")


def build_demo_corpora() -> tuple:
    """Return (train_records, test_records) as JSON-ready dicts."""
    rng = np.random.default_rng(7)
    train = []
    for i in range(5):
        train.append(_line_record(rng, f"train-{i + 1:02d}", 14 + i,
                                  date(2019, 3, 4), 30.0 + 5 * i))
    for i in range(5):
        train.append(_scatter_record(rng, f"train-{i + 6:02d}", 24 + 2 * i,
                                     0.8 + 0.3 * i))
    regions = ["north", "south", "east", "west", "central", "coastal"]
    for i in range(5):
        train.append(_bar_record(rng, f"train-{i + 11:02d}", regions[: 4 + (i % 3)]))
    for i in range(5):
        train.append(_box_record(rng, f"train-{i + 16:02d}", 16 + i, 16 + i))
    test = [
        _line_record(rng, "test-01", 16, date(2020, 1, 6), 80.0),
        _line_record(rng, "test-02", 12, date(2021, 6, 7), 12.0),
        _scatter_record(rng, "test-03", 30, 1.4),
        _scatter_record(rng, "test-04", 22, -0.9),
        _bar_record(rng, "test-05", regions[:5]),
        _bar_record(rng, "test-06", regions),
        _box_record(rng, "test-07", 18, 18),
        _box_record(rng, "test-08", 11, 14),
    ]
    return train, test


def _write_jsonl(path: Path, records: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in records:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_demo_data(out_dir: str = "data/demo") -> dict:
    """Generate corpora, run the offline pipeline, and record its transcript."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_objs, test_objs = build_demo_corpora()
    _write_jsonl(out / "train.jsonl", train_objs)
    _write_jsonl(out / "test.jsonl", test_objs)

    train = load_corpus(str(out / "train.jsonl"), labeled=True)
    labeled_tests = load_corpus(str(out / "test.jsonl"), labeled=True)
    tests = [r.dataset for r in labeled_tests]
    rcfg = RetrievalConfig(seed=DEMO_SEED, **DEMO_RETRIEVAL)
    retrieval_set = build_retrieval_set(train, rcfg)

    gt_idx = {r.dataset.id: CANONICAL_TYPES.index(r.label) for r in train}
    block_to_id = {}
    for record in train:
        block_to_id[serialize_features(extract_features(record.dataset))] = record.dataset.id
    for dataset in tests:
        block_to_id[serialize_features(extract_features(dataset))] = dataset.id

    # Scripted bootstrap dynamics over the selected entries: the first id
    # (sorted) never reaches acceptance, the next two recover on the hint
    # iteration, and the rest accept zero-shot.
    selected = sorted(e.dataset_id for e in retrieval_set.entries)
    pruned_id = selected[0]
    hint_ids = set(selected[1:3])
    zero_shot = dict(_TEST_VECTORS)
    hinted = {}
    rescoring = dict(_TEST_VECTORS)
    for rid, idx in gt_idx.items():
        if rid == pruned_id:
            zero_shot[rid] = _rejecting_vector(idx)
            hinted[rid] = _rejecting_vector(idx)
            rescoring[rid] = _rejecting_vector(idx)
        elif rid in hint_ids:
            zero_shot[rid] = _near_miss_vector(idx)
            hinted[rid] = _accepting_vector(idx)
            rescoring[rid] = _accepting_vector(idx)
        else:
            zero_shot[rid] = _accepting_vector(idx)
            hinted[rid] = _accepting_vector(idx)
            rescoring[rid] = _accepting_vector(idx)

    recording = RecordingProvider(
        ScriptedDemoProvider(block_to_id, zero_shot, hinted, rescoring)
    )
    gateway = Gateway(recording)
    bootstrap_retrieval_set(retrieval_set, gateway)
    pruned_set = prune_retrieval_set(retrieval_set)
    recommendations = recommend_all(tests, pruned_set, rcfg, gateway)
    metrics = evaluate_hits_at_2(recommendations, [r.label for r in labeled_tests])
    consistency = explanation_consistency(recommendations, gateway)
    ablation = run_ablation(
        AblationAxis.K, [0, 1, 2], pruned_set, labeled_tests, rcfg, gateway
    )
    recording.dump_transcript(str(out / "transcript.jsonl"))

    if metrics.overall != EXPECTED_OVERALL_HITS:
        raise RuntimeError(
            f"demo generation drifted: overall Hits@2 {metrics.overall} != "
            f"{EXPECTED_OVERALL_HITS}"
        )
    for vtype in CANONICAL_TYPES:
        if metrics.per_class[vtype] != EXPECTED_PER_CLASS_HITS[vtype.corpus_label]:
            raise RuntimeError(
                f"demo generation drifted: {vtype.corpus_label} Hits@2 "
                f"{metrics.per_class[vtype]}"
            )

    config = {
        "seed": DEMO_SEED,
        "backend": "mock",
        "mock_transcript": str(out / "transcript.jsonl"),
        "retrieval": dict(DEMO_RETRIEVAL),
    }
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")

    return {
        "train": len(train),
        "test": len(tests),
        "retrieval_entries": len(retrieval_set.entries),
        "accepted_entries": len(pruned_set.entries),
        "pruned_id": pruned_id,
        "hint_ids": sorted(hint_ids),
        "overall_hits_at_2": metrics.overall,
        "consistency": consistency,
        "ablation_overall": {str(k): m.overall for k, m in ablation},
    }


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else argv
    out_dir = args[0] if args else "data/demo"
    summary = write_demo_data(out_dir)
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
