from __future__ import annotations

import pytest

from authflaw.pipeline import Analyzer, load_program
from authflaw.signatures import load_properties
from authflaw.sdg import TagConfig

from oracles import CORPUS


@pytest.fixture(scope="session")
def config():
    return TagConfig.load()


@pytest.fixture(scope="session")
def analyzer(config):
    return Analyzer(config)


@pytest.fixture(scope="session")
def properties():
    return load_properties()


@pytest.fixture(scope="session")
def corpus_files():
    return sorted(CORPUS.glob("*.osl"))


@pytest.fixture
def load(config):
    def _load(text, name="<test>"):
        return load_program([(name, text)], config)

    return _load


# acceptance criteria report one PASS/FAIL line each; collected here so the
# lines also land in the terminal summary when output is captured
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
