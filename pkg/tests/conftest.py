import sys
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criterion results collected during the run."""
    module = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    lines = getattr(module, "RESULTS", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def train_samples():
    from lcp.data import load_complex_tsv

    return load_complex_tsv(DATA / "complex_train_200.tsv", "single")


@pytest.fixture(scope="session")
def corpus_index():
    from lcp.corpus import build_index, iter_documents

    return build_index(iter_documents([DATA / "corpus_1k.txt"]))


@pytest.fixture(scope="session")
def pron_dict():
    from lcp.phonetics import load_pron_dict

    return load_pron_dict(DATA / "cmudict_fixture.txt")


@pytest.fixture(scope="session")
def sense_inventory():
    from lcp.semantics import load_sense_inventory

    return load_sense_inventory(
        [DATA / "wordnet_data.noun"], [DATA / "wordnet_index.noun"]
    )
