"""Shared builders for the test suite."""

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

from vizrec import Gateway, MockProvider, TabularDataset  # noqa: E402
from vizrec.tabular import build_column  # noqa: E402


def fmt_number(v) -> str:
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def qcol(name, values):
    """Quantitative column; ints stay integers, floats stay decimals."""
    return build_column(name, [None if v is None else fmt_number(v) for v in values])


def ccol(name, values):
    """Categorical (string) column."""
    return build_column(name, list(values))


def dataset(dataset_id, x, y) -> TabularDataset:
    return TabularDataset(id=dataset_id, x=x, y=y)


def num_dataset(dataset_id, xs, ys) -> TabularDataset:
    return dataset(dataset_id, qcol("x", xs), qcol("y", ys))


def seq_provider(texts) -> MockProvider:
    return MockProvider(
        [{"match": "sequence", "response": {"text": t}} for t in texts]
    )


def seq_gateway(texts, **kwargs) -> Gateway:
    return Gateway(seq_provider(texts), **kwargs)


class CapturingGateway(Gateway):
    """Gateway that records the user prompt of every completion request."""

    def __init__(self, provider, **kwargs):
        super().__init__(provider, **kwargs)
        self.prompts = []

    def complete(self, request):
        self.prompts.append(request.messages[-1].content)
        return super().complete(request)


@pytest.fixture(scope="session")
def demo_dir() -> Path:
    path = REPO_ROOT / "data" / "demo"
    if not path.is_dir():
        pytest.skip("bundled demo data not present")
    return path
