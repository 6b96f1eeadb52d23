import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

from chromacode import synthbench
from chromacode.codec import train
from chromacode.config import TrainingHyperparams

# one-line verdicts collected by the acceptance tests, printed at the end
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny-corpus")
    manifest, renders = synthbench.generate_corpus(
        48, "mixed", seed=7, out_dir=out, resolution=32
    )
    return manifest, renders


@pytest.fixture(scope="session")
def tiny_model(tiny_corpus):
    manifest, _ = tiny_corpus
    hp = TrainingHyperparams(
        epochs=2, batch_size=16, resolution=32, seed=0, width=8
    )
    snapshot, report = train(manifest, hp)
    return snapshot, report


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
