"""Core data model: cells, columns, two-column datasets, and corpus I/O.

A corpus is a JSONL file, one record per line:

    {"id": "...", "x": {"name": "...", "values": [...]}, "y": {...}, "label": "..."}

Values are strings, numbers, or null (missing). The ``label`` key is required
for training corpora and optional for test corpora.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence

from .errors import CorpusError

logger = logging.getLogger(__name__)


class DataType(Enum):
    STRING = "string"
    INTEGER = "integer"
    DECIMAL = "decimal"
    TIME = "time"


class GeneralType(Enum):
    C = "c"  # categorical
    Q = "q"  # quantitative
    T = "t"  # temporal


_GENERAL_FOR_DATA = {
    DataType.STRING: GeneralType.C,
    DataType.INTEGER: GeneralType.Q,
    DataType.DECIMAL: GeneralType.Q,
    DataType.TIME: GeneralType.T,
}


@dataclass(frozen=True)
class ColumnKind:
    """Pair of a concrete data type and its general type.

    The pairing is fixed: string -> C, integer/decimal -> Q, time -> T.
    """

    data_type: DataType
    general_type: GeneralType

    def __post_init__(self):
        expected = _GENERAL_FOR_DATA[self.data_type]
        if self.general_type is not expected:
            raise ValueError(
                f"{self.data_type.value} pairs with {expected.value}, "
                f"not {self.general_type.value}"
            )

    @classmethod
    def of(cls, data_type: DataType) -> "ColumnKind":
        return cls(data_type, _GENERAL_FOR_DATA[data_type])


@dataclass(frozen=True)
class Cell:
    """One value: text, number, timestamp, or missing (all fields None)."""

    text: str | None = None
    number: float | None = None
    timestamp: datetime | None = None

    def __post_init__(self):
        populated = sum(v is not None for v in (self.text, self.number, self.timestamp))
        if populated > 1:
            raise ValueError("a cell holds at most one value")
        if self.number is not None and not math.isfinite(self.number):
            raise ValueError("cell numbers must be finite")

    @property
    def is_missing(self) -> bool:
        return self.text is None and self.number is None and self.timestamp is None

    def render(self) -> str | None:
        """Canonical string rendering used for set operations; None if missing."""
        if self.text is not None:
            return self.text
        if self.number is not None:
            return repr(float(self.number))
        if self.timestamp is not None:
            return self.timestamp.isoformat()
        return None


MISSING = Cell()


@dataclass(frozen=True)
class Column:
    name: str
    cells: tuple[Cell, ...]
    kind: ColumnKind

    def __post_init__(self):
        if len(self.cells) == 0:
            raise ValueError(f"column {self.name!r} has no cells")
        for cell in self.cells:
            if cell.is_missing:
                continue
            if self.kind.general_type is GeneralType.Q and cell.number is None:
                raise ValueError(f"column {self.name!r}: non-numeric cell in a Q column")
            if self.kind.general_type is GeneralType.C and cell.text is None:
                raise ValueError(f"column {self.name!r}: non-text cell in a C column")
            if self.kind.general_type is GeneralType.T and cell.timestamp is None:
                raise ValueError(f"column {self.name!r}: non-timestamp cell in a T column")

    @property
    def length(self) -> int:
        return len(self.cells)

    def non_missing(self) -> list[Cell]:
        return [c for c in self.cells if not c.is_missing]

    def numbers(self) -> list[float]:
        return [c.number for c in self.cells if c.number is not None]

    def texts(self) -> list[str]:
        return [c.text for c in self.cells if c.text is not None]

    def timestamps(self) -> list[datetime]:
        return [c.timestamp for c in self.cells if c.timestamp is not None]

    def renderings(self) -> list[str]:
        return [r for r in (c.render() for c in self.cells) if r is not None]


@dataclass(frozen=True)
class TabularDataset:
    id: str
    x: Column
    y: Column


class VisualizationType(Enum):
    """The four supported chart types, in canonical order."""

    LINE_CHART = "line chart"
    SCATTER_PLOT = "scatter plot"
    BAR_CHART = "bar chart"
    BOX_PLOT = "box plot"

    @property
    def display_name(self) -> str:
        return self.value

    @property
    def corpus_label(self) -> str:
        return _CORPUS_LABELS[self]

    @classmethod
    def from_corpus_label(cls, label: str) -> "VisualizationType":
        try:
            return _TYPES_BY_LABEL[label]
        except KeyError:
            allowed = ", ".join(sorted(_TYPES_BY_LABEL))
            raise ValueError(f"unknown label {label!r}; expected one of: {allowed}") from None


CANONICAL_TYPES = tuple(VisualizationType)
_CORPUS_LABELS = {
    VisualizationType.LINE_CHART: "line",
    VisualizationType.SCATTER_PLOT: "scatter",
    VisualizationType.BAR_CHART: "bar",
    VisualizationType.BOX_PLOT: "box",
}
_TYPES_BY_LABEL = {v: k for k, v in _CORPUS_LABELS.items()}


@dataclass(frozen=True)
class LabeledCorpusRecord:
    dataset: TabularDataset
    label: VisualizationType


# Accepted timestamp layouts, tried in order.
_DATE_FORMATS = (
    "%Y-%m-%d",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y/%m/%d",
    "%m/%d/%Y",
)


def parse_timestamp(value: str) -> datetime | None:
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(value, fmt)
        except ValueError:
            continue
    return None


def _parse_integer(value: str) -> float | None:
    try:
        n = int(value, 10)
    except ValueError:
        return None
    return float(n)


def _parse_decimal(value: str) -> float | None:
    try:
        f = float(value)
    except ValueError:
        return None
    if not math.isfinite(f):
        return None
    return f


def infer_column_kind(values: Sequence[str | None]) -> ColumnKind:
    """Infer the column kind from raw string values.

    Time wins when at least 95% of non-missing values parse as dates;
    otherwise integer, then decimal, require every value to parse; anything
    else is a string column. An all-missing column is a string column.
    """
    present = [v for v in values if v is not None]
    if not present:
        return ColumnKind.of(DataType.STRING)
    parsed_times = sum(1 for v in present if parse_timestamp(v) is not None)
    if parsed_times >= 0.95 * len(present):
        return ColumnKind.of(DataType.TIME)
    if all(_parse_integer(v) is not None for v in present):
        return ColumnKind.of(DataType.INTEGER)
    if all(_parse_decimal(v) is not None for v in present):
        return ColumnKind.of(DataType.DECIMAL)
    return ColumnKind.of(DataType.STRING)


def _canonical_raw(value, line: int, col: str) -> str | None:
    """Normalize a raw JSON value to the string form used for inference."""
    if value is None:
        return None
    if isinstance(value, bool):
        raise CorpusError(f"column {col!r}: boolean values are not supported", line)
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise CorpusError(f"column {col!r}: non-finite number", line)
        return repr(value)
    raise CorpusError(f"column {col!r}: unsupported value type {type(value).__name__}", line)


def build_column(name: str, raw_values: Sequence[str | None], *, line: int | None = None) -> Column:
    """Build a typed column from raw string values, inferring its kind."""
    kind = infer_column_kind(raw_values)
    cells: list[Cell] = []
    dropped = 0
    for v in raw_values:
        if v is None:
            cells.append(MISSING)
            continue
        if kind.data_type is DataType.TIME:
            ts = parse_timestamp(v)
            if ts is None:
                # The column passed the 95% time rule; stragglers become missing.
                dropped += 1
                cells.append(MISSING)
            else:
                cells.append(Cell(timestamp=ts))
        elif kind.data_type in (DataType.INTEGER, DataType.DECIMAL):
            cells.append(Cell(number=_parse_decimal(v)))
        else:
            cells.append(Cell(text=v))
    if dropped:
        logger.warning(
            "column %r: %d value(s) did not parse as dates and were treated as missing",
            name, dropped,
        )
    if not cells:
        raise CorpusError(f"column {name!r} has no values", line)
    return Column(name=name, cells=tuple(cells), kind=kind)


_RECORD_KEYS = {"id", "x", "y", "label"}


def _parse_column_obj(obj, key: str, line: int) -> Column:
    if not isinstance(obj, dict) or set(obj) != {"name", "values"}:
        raise CorpusError(f"column {key!r} must be an object with 'name' and 'values'", line)
    name = obj["name"]
    if not isinstance(name, str):
        raise CorpusError(f"column {key!r}: 'name' must be a string", line)
    values = obj["values"]
    if not isinstance(values, list) or not values:
        raise CorpusError(f"column {key!r}: 'values' must be a non-empty array", line)
    raw = [_canonical_raw(v, line, key) for v in values]
    return build_column(name, raw, line=line)


def parse_record_line(text: str, line: int, *, labeled: bool):
    """Parse one corpus line into (TabularDataset, label-or-None)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorpusError(f"invalid JSON: {e.msg}", line) from None
    if not isinstance(obj, dict):
        raise CorpusError("record must be a JSON object", line)
    extra = set(obj) - _RECORD_KEYS
    if extra:
        raise CorpusError(f"unexpected keys: {sorted(extra)}", line)
    for key in ("id", "x", "y"):
        if key not in obj:
            raise CorpusError(f"missing key {key!r}", line)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise CorpusError("'id' must be a non-empty string", line)
    dataset = TabularDataset(
        id=obj["id"],
        x=_parse_column_obj(obj["x"], "x", line),
        y=_parse_column_obj(obj["y"], "y", line),
    )
    label = None
    if "label" in obj:
        try:
            label = VisualizationType.from_corpus_label(obj["label"])
        except ValueError as e:
            raise CorpusError(str(e), line) from None
    elif labeled:
        raise CorpusError("missing key 'label'", line)
    return dataset, label


def load_corpus(path: str, *, labeled: bool) -> list:
    """Load a corpus file.

    Returns ``list[LabeledCorpusRecord]`` when ``labeled`` is true, otherwise
    ``list[TabularDataset]`` (labels, if present, are ignored).
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    records = []
    seen_ids: set[str] = set()
    any_line = False
    for i, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        any_line = True
        dataset, label = parse_record_line(text, i, labeled=labeled)
        if dataset.id in seen_ids:
            raise CorpusError(f"duplicate dataset id {dataset.id!r}", i)
        seen_ids.add(dataset.id)
        if labeled:
            records.append(LabeledCorpusRecord(dataset=dataset, label=label))
        else:
            records.append(dataset)
    if not any_line:
        raise CorpusError(f"empty corpus: {path}")
    return records


def _column_to_obj(col: Column) -> dict:
    values: list = []
    for cell in col.cells:
        if cell.is_missing:
            values.append(None)
        elif cell.text is not None:
            values.append(cell.text)
        elif cell.number is not None:
            n = cell.number
            values.append(int(n) if float(n).is_integer() and col.kind.data_type is DataType.INTEGER else n)
        else:
            values.append(cell.timestamp.isoformat())
    return {"name": col.name, "values": values}


def write_corpus(records: Iterable, path: str) -> None:
    """Write datasets or labeled records back out as JSONL."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            if isinstance(record, LabeledCorpusRecord):
                dataset, label = record.dataset, record.label
            else:
                dataset, label = record, None
            obj = {
                "id": dataset.id,
                "x": _column_to_obj(dataset.x),
                "y": _column_to_obj(dataset.y),
            }
            if label is not None:
                obj["label"] = label.corpus_label
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
