import numpy as np
import pytest

from hybridref.data.instances import Candidate, Instance, Pronoun
from hybridref.data.tokenizer import Vocab

_ACCEPTANCE_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(num, title): acceptance criterion covered by this test"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        marker = item.get_closest_marker("criterion")
        if marker:
            _ACCEPTANCE_RESULTS.append((marker.args[0], marker.args[1], report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, title, passed in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d} {status}: {title}")


def make_instance(sentence: str, positive: str, negative: str, pronoun: str = "it",
                  inst_id: str = "t0") -> Instance:
    start = sentence.index(f" {pronoun} ") + 1
    inst = Instance(
        id=inst_id,
        sentence=sentence,
        pronoun=Pronoun(pronoun, start, start + len(pronoun)),
        candidates=[Candidate(positive, "positive"), Candidate(negative, "negative")],
        source="synthetic",
    )
    inst.validate()
    return inst


@pytest.fixture
def tiny_instance() -> Instance:
    return make_instance(
        "the lion chased the rabbit because it was fluffy.",
        positive="the rabbit",
        negative="the lion",
    )


@pytest.fixture
def tiny_vocab(tiny_instance) -> Vocab:
    texts = [tiny_instance.sentence] + [c.text for c in tiny_instance.candidates]
    return Vocab.from_texts(texts)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
