import pytest

from racefix import parse_file, parse_program
from racefix.corpus import CORPUS_DIR


@pytest.fixture
def datarace():
    return parse_file(CORPUS_DIR / "datarace.mjcc")


@pytest.fixture
def example1():
    return parse_file(CORPUS_DIR / "example1.mjcc")


@pytest.fixture
def parse():
    return lambda src: parse_program(src, "T.mjcc")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(mod.RESULTS):
        for line in mod.RESULTS[criterion]:
            terminalreporter.write_line(line)
