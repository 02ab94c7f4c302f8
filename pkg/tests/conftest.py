import json

import pytest

from parsebias.synthetic import generate_treebank, write_treebank

TINY_PROFILES = ("head_initial", "head_final", "free_order")


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Three small synthetic treebanks under ``<tmp>/banks``."""
    root = tmp_path_factory.mktemp("corpus")
    for k, prof in enumerate(TINY_PROFILES):
        write_treebank(generate_treebank(prof, prof, n_train=60, n_test=40, seed=k), root / "banks")
    return root / "banks"


@pytest.fixture
def tiny_manifest(tiny_corpus, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "treebank_root": str(tiny_corpus),
        "min_train": 0,
        "min_test": 0,
        "training": {"epochs": 1, "hash_bits": 12},
        "sampler": {"repetitions": 2, "min_bin_sentences": 2},
        "out_dir": "out",
    }))
    return path


ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "PASS" if report.passed else "SKIP" if report.skipped else "FAIL"
        notes = [v for k, v in report.user_properties if k == "note"]
        ACCEPTANCE[number] = (status, title + (f"  [{'; '.join(notes)}]" if notes else ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
