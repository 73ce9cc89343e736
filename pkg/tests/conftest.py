import json
from pathlib import Path

import pytest

from proverbkit.modelclient import ModelClient, ModelClientConfig

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture
def mock_client(tmp_path):
    def make(cache: bool = False, **overrides) -> ModelClient:
        kwargs = {"endpoint": "mock:", "model_name": "default"}
        if cache:
            kwargs["cache_dir"] = str(tmp_path / "cache")
        kwargs.update(overrides)
        return ModelClient(ModelClientConfig(**kwargs))

    return make


class StubTransport:
    """Transport whose replies are scripted per call; records every request."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    def send(self, request):
        self.requests.append(request)
        reply = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        if isinstance(reply, Exception):
            raise reply
        return reply


@pytest.fixture
def stub_transport():
    return StubTransport


def write_jsonl_file(path: Path, rows) -> Path:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def jsonl_writer():
    return write_jsonl_file


def make_pipeline_config(out_dir: Path) -> dict:
    """Pipeline config for the bundled synthetic corpus and mock model."""
    return {
        "out_dir": str(out_dir),
        "bitext": str(DATA_DIR / "bitext.jsonl"),
        "proverbs": str(DATA_DIR / "proverbs.jsonl"),
        "contamination_samples": str(DATA_DIR / "contamination_samples.jsonl"),
        "sensitivity_hypotheses": str(DATA_DIR / "sensitivity_hypotheses.jsonl"),
        "judge_pairs": str(DATA_DIR / "judge_pairs.jsonl"),
        "seed": 20240501,
        "model": {"endpoint": "mock:", "model_name": "default"},
        "params": {
            "threshold": 0.8,
            "lemma_table": str(DATA_DIR / "lemma_de.tsv"),
            "max_per_direction": 2000,
            "min_score": 4.0,
            "qe_weight": 5.0,
            "max_each": 5,
            "template": "dialogue_context",
            "tau": 0.5,
            "cutoff": 0.9,
            "lcs_unit": "token",
        },
        "stages": ["mine", "filter", "context", "prompt", "score",
                   "contaminate", "sensitivity", "judge", "report"],
    }


def run_golden_pipeline(tmp_dir: Path, name: str) -> Path:
    """Run all pipeline stages into tmp_dir/name and return the output dir."""
    from proverbkit.cli import main

    out_dir = tmp_dir / name
    config_path = tmp_dir / f"{name}.json"
    config_path.write_text(json.dumps(make_pipeline_config(out_dir)))
    assert main(["pipeline", "--config", str(config_path)]) == 0
    return out_dir


def stage_outputs(out_dir: Path) -> dict[str, bytes]:
    """All pipeline output files by name, manifests excluded."""
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())
            if not p.name.endswith(".manifest.json")}
