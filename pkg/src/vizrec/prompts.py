"""Prompt templates, feature serialization, and response parsing.

The three task templates are embedded verbatim (including their original
typos such as "tabuar" and "that focus"); overrides can be loaded from a
directory of plain-text files using the same placeholders.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .catalog import FeatureMap, schema_for
from .errors import ConfigError, ParseError, VizRecError
from .tabular import CANONICAL_TYPES, VisualizationType

logger = logging.getLogger(__name__)

MAX_DEMONSTRATIONS = 8

DESCRIPTION_TEMPLATE = (
    "The features of a given tabular dataset are provided in the following "
    "delimited by triple backticks. Your task is to generate a detailed text "
    "description, in 1000 characters, that focus on features that are "
    "important for visualization type selection and comprehensively analyzes "
    "this tabuar dataset based on its feature values from both single-column "
    "and cross-column perspectives. Note that the response must exclude words "
    "such as line chart, scatter plot, bar chart, and box plot, since these "
    "words will mislead further visualization recommendation. The response "
    "format can be as \"Single-column perspective: [...]\n\nCross-column "
    "perspective: [...].\" Ensure that the summary maintains strong "
    "generalization ability and includes all vital information.\n"
    "\n"
    "Features for a tabular dataset: ```{feature_block}```"
)

RECOMMENDATION_TEMPLATE = (
    "Determine whether each visualization type in the following list of "
    "visualization types is a suitable visualization type in the text "
    "description for a tabular dataset below, which is delimited with triple "
    "backticks.\n"
    "Give your explanation and your answer at the end as json (Explanation "
    "is as below: .\n"
    "The final answer in JSON format would be:), where each element consists "
    "of a visualization type and a score ranging from 0 to 1 (1 means the "
    "most suitable).\n"
    "The scores should sum to be 1 (line + scatter + bar + box = 1.0).\n"
    "List of visualization types: [line chart, scatter plot, bar chart, and "
    "box plot].\n"
    "Text description for a tabular dataset:```{description}```"
)

HINT_TEMPLATE = (
    "Determine whether each visualization type in the following list of "
    "visualization types is a suitable visualization type in the text "
    "description for a tabular dataset below, which is delimited with triple "
    "backticks.\n"
    "Hint: {hint_a} may be more suitable than {hint_b}, however, previous "
    "score is {hint_c}.\n"
    "With the given hint, editing your explanation and improve your answer "
    "at the end as json (Explanation is as below: .\n"
    "The final answer in JSON format would be:), where each element consists "
    "of a visualization type and a score ranging from 0 to 1 (1 means the "
    "most suitable).\n"
    "The scores should sum to be 1 (line + scatter + bar + box = 1.0).\n"
    "List of visualization types: [line chart, scatter plot, bar chart, and "
    "box plot].\n"
    "Text description for a tabular dataset: ```{description}```"
)

RESCORING_TEMPLATE = (
    "An explanation assessing four visualization types for a tabular dataset "
    "is provided below, delimited with triple backticks.\n"
    "Based only on this explanation, give your answer as json (The final "
    "answer in JSON format would be:), where each element consists of a "
    "visualization type and a score ranging from 0 to 1 (1 means the most "
    "suitable).\n"
    "The scores should sum to be 1 (line + scatter + bar + box = 1.0).\n"
    "List of visualization types: [line chart, scatter plot, bar chart, and "
    "box plot].\n"
    "Explanation: ```{explanation}```"
)

_TEMPLATE_FILES = {
    "description": ("description.txt", "{feature_block}"),
    "recommendation": ("recommendation.txt", "{description}"),
    "hint": ("hint.txt", "{description}"),
    "rescoring": ("rescoring.txt", "{explanation}"),
}


@dataclass(frozen=True)
class TemplateSet:
    description: str = DESCRIPTION_TEMPLATE
    recommendation: str = RECOMMENDATION_TEMPLATE
    hint: str = HINT_TEMPLATE
    rescoring: str = RESCORING_TEMPLATE

    def __post_init__(self):
        for field_name, (_, placeholder) in _TEMPLATE_FILES.items():
            text = getattr(self, field_name)
            if placeholder not in text:
                raise ConfigError(
                    f"{field_name} template is missing the {placeholder} placeholder"
                )
        for slot in ("{hint_a}", "{hint_b}", "{hint_c}"):
            if slot not in self.hint:
                raise ConfigError(f"hint template is missing the {slot} placeholder")

    @classmethod
    def from_dir(cls, path: str) -> "TemplateSet":
        """Load overrides from a directory; absent files keep the defaults."""
        base = Path(path)
        if not base.is_dir():
            raise ConfigError(f"template directory not found: {path}")
        kwargs = {}
        for field_name, (file_name, _) in _TEMPLATE_FILES.items():
            candidate = base / file_name
            if candidate.is_file():
                kwargs[field_name] = candidate.read_text(encoding="utf-8")
        return cls(**kwargs)


DEFAULT_TEMPLATES = TemplateSet()


@dataclass(frozen=True)
class ScoreVector:
    """Scores for the four types, in canonical order, each in [0, 1]."""

    values: tuple  # (line, scatter, bar, box)

    def __post_init__(self):
        if len(self.values) != len(CANONICAL_TYPES):
            raise ValueError("a score vector has exactly four values")
        for v in self.values:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValueError("scores must be numbers")
            if math.isnan(v) or not 0.0 <= v <= 1.0:
                raise ValueError(f"score {v!r} outside [0, 1]")

    def score(self, vtype: VisualizationType) -> float:
        return self.values[CANONICAL_TYPES.index(vtype)]

    def as_dict(self) -> dict:
        return {t.display_name: v for t, v in zip(CANONICAL_TYPES, self.values)}

    def argmax(self) -> VisualizationType:
        best = max(self.values)
        return next(t for t, v in zip(CANONICAL_TYPES, self.values) if v == best)

    def top2(self) -> tuple:
        ranked = sorted(
            range(len(CANONICAL_TYPES)), key=lambda i: (-self.values[i], i)
        )
        return CANONICAL_TYPES[ranked[0]], CANONICAL_TYPES[ranked[1]]

    def to_canonical_json(self) -> str:
        return json.dumps(self.as_dict(), ensure_ascii=False)

    def render_inline(self) -> str:
        return ", ".join(
            f"{t.display_name}: {v!r}" for t, v in zip(CANONICAL_TYPES, self.values)
        )

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ScoreVector":
        return cls(values=tuple(float(mapping[t.display_name]) for t in CANONICAL_TYPES))


@dataclass(frozen=True)
class Explanation:
    """The prose preceding the final JSON answer in an LLM response."""

    text: str


@dataclass(frozen=True)
class FeatureDescription:
    """An LLM-written description of one dataset's features."""

    text: str

    _SINGLE_HEADER = "Single-column perspective"
    _CROSS_HEADER = "Cross-column perspective"

    @property
    def has_single_column_section(self) -> bool:
        return self._SINGLE_HEADER in self.text

    @property
    def has_cross_column_section(self) -> bool:
        return self._CROSS_HEADER in self.text

    @property
    def contains_forbidden_chart_words(self) -> bool:
        lowered = self.text.lower()
        return any(t.display_name in lowered for t in CANONICAL_TYPES)


@dataclass(frozen=True)
class DemonstrationBlock:
    """A worked example: instruction + description + explanation + answer."""

    text: str

    def __post_init__(self):
        tail = _last_json_object(self.text)
        if tail is None:
            raise ValueError("a demonstration block must end with a JSON answer")
        obj, _, end = tail
        if self.text[end:].strip():
            raise ValueError("a demonstration block must end with its JSON answer")
        expected = [t.display_name for t in CANONICAL_TYPES]
        if list(obj) != expected:
            raise ValueError(f"demonstration JSON keys must be {expected}")


@dataclass(frozen=True)
class HintFill:
    a: str  # display name of the ground-truth type
    b: str  # display name of the highest-scoring incorrect type
    c: str  # inline rendering of the previous scores

    def __post_init__(self):
        if self.a == self.b:
            raise VizRecError("hint slots a and b must name different types")


def format_feature_value(value) -> str:
    if value is None:
        return "NaN"
    if isinstance(value, bool):
        return "True" if value else "False"
    return repr(float(f"{float(value):.6g}"))


def serialize_features(features: FeatureMap) -> str:
    """Render a feature map as "name=value" lines in schema order."""
    schema = schema_for(features.schema_version)
    return "\n".join(
        f"{name}={format_feature_value(features.values[name])}" for name in schema.names
    )


def render_description_prompt(
    features: FeatureMap, templates: TemplateSet = DEFAULT_TEMPLATES
) -> str:
    return templates.description.replace("{feature_block}", serialize_features(features))


def render_recommendation_prompt(
    test_desc: FeatureDescription,
    demos: list,
    templates: TemplateSet = DEFAULT_TEMPLATES,
) -> str:
    """Concatenate demonstration blocks, then the instruction for the test case."""
    if len(demos) > MAX_DEMONSTRATIONS:
        raise VizRecError(f"at most {MAX_DEMONSTRATIONS} demonstrations are supported")
    test_block = templates.recommendation.replace("{description}", test_desc.text)
    parts = [d.text for d in demos] + [test_block]
    return "\n\n".join(parts)


def render_hint_prompt(
    desc: FeatureDescription, hint: HintFill, templates: TemplateSet = DEFAULT_TEMPLATES
) -> str:
    return (
        templates.hint
        .replace("{hint_a}", hint.a)
        .replace("{hint_b}", hint.b)
        .replace("{hint_c}", hint.c)
        .replace("{description}", desc.text)
    )


def render_rescoring_prompt(
    explanation: Explanation, templates: TemplateSet = DEFAULT_TEMPLATES
) -> str:
    return templates.rescoring.replace("{explanation}", explanation.text)


def compose_demonstration(
    description: FeatureDescription,
    explanation: Explanation,
    scores: ScoreVector,
    templates: TemplateSet = DEFAULT_TEMPLATES,
) -> DemonstrationBlock:
    """Build one worked example: instruction + description + answer."""
    rendered = templates.recommendation.replace("{description}", description.text)
    text = f"{rendered}\n{explanation.text}\n{scores.to_canonical_json()}"
    return DemonstrationBlock(text=text)


def describe_dataset(
    features: FeatureMap, gateway, templates: TemplateSet = DEFAULT_TEMPLATES
) -> FeatureDescription:
    """Ask the LLM for a feature description and validate its shape."""
    prompt = render_description_prompt(features, templates)
    response = gateway.complete_text(prompt)
    if not response.text.strip():
        raise ParseError("empty description", raw_text=response.text)
    description = FeatureDescription(text=response.text)
    if description.contains_forbidden_chart_words:
        logger.warning("feature description mentions a chart-type word; keeping text as-is")
    return description


_KEY_ALIASES: dict = {}
for _t, _word in zip(CANONICAL_TYPES, ("line", "scatter", "bar", "box")):
    _display = _t.display_name
    for _alias in (_display, _word, _display.replace(" ", "_"), _display.replace(" ", "")):
        _KEY_ALIASES[_alias] = _t


def _last_json_object(text: str):
    """Find the last parseable JSON object in text.

    Returns (object, start, end) or None. Brace pairs are matched with a
    stack so stray unbalanced braces in prose cannot hide the final answer;
    candidates are tried from the rightmost closing brace inward, and spans
    that fail json.loads (prose in braces, single quotes) are skipped.
    """
    spans = []
    stack: list[int] = []
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if stack and ch == '"':
            in_string = True
        elif ch == "{":
            stack.append(i)
        elif ch == "}" and stack:
            spans.append((stack.pop(), i + 1))
    for s, e in sorted(spans, key=lambda span: span[1], reverse=True):
        try:
            obj = json.loads(text[s:e])
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj, s, e
    return None


def _coerce_score(value) -> float:
    if isinstance(value, bool):
        raise ParseError(f"score {value!r} is not a number")
    if isinstance(value, (int, float)):
        v = float(value)
    elif isinstance(value, str):
        try:
            v = float(value)
        except ValueError:
            raise ParseError(f"score {value!r} is not a number") from None
    else:
        raise ParseError(f"score {value!r} is not a number")
    if math.isnan(v):
        raise ParseError("score is NaN")
    return min(1.0, max(0.0, v))


def parse_scores(response_text: str, tolerance: float = 0.05):
    """Extract (ScoreVector, Explanation) from an LLM response.

    The last parseable JSON object wins; keys map case-insensitively through
    aliases; each score is clamped to [0, 1]; the sum must land within
    ``tolerance`` of 1 and is then renormalized to exactly 1.
    """
    if not response_text:
        raise ParseError("empty response")
    located = _last_json_object(response_text)
    if located is None:
        raise ParseError("no JSON object found in response", raw_text=response_text)
    obj, start, _ = located
    by_type: dict = {}
    for key, value in obj.items():
        vtype = _KEY_ALIASES.get(str(key).strip().lower())
        if vtype is not None and vtype not in by_type:
            by_type[vtype] = _coerce_score(value)
    for vtype in CANONICAL_TYPES:
        if vtype not in by_type:
            raise ParseError(
                f"score for {vtype.display_name!r} missing from response JSON",
                raw_text=response_text,
            )
    raw = [by_type[t] for t in CANONICAL_TYPES]
    total = math.fsum(raw)
    if total == 0.0:
        raise ParseError("scores sum to zero", raw_text=response_text)
    if abs(total - 1.0) > tolerance:
        raise ParseError(
            f"scores sum to {total:.6g}, outside tolerance {tolerance:.6g} of 1",
            raw_text=response_text,
        )
    if total != 1.0:
        raw = [v / total for v in raw]
        for _ in range(5):
            residue = 1.0 - math.fsum(raw)
            if residue == 0.0:
                break
            raw[raw.index(max(raw))] += residue
    scores = ScoreVector(values=tuple(raw))
    return scores, Explanation(text=response_text[:start])
