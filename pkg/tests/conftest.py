"""Shared fixtures and the per-criterion acceptance summary."""

import numpy as np
import pytest

from isostat.symtensor import SymTensor3, symmetrize

_RESULTS = {}


def random_tensor(rng, n, scale=1.0):
    return SymTensor3.from_dense(scale * symmetrize(rng.normal(size=(n, n, n))))


@pytest.fixture
def rng():
    return np.random.default_rng(20070)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        prev = _RESULTS.get(number, (title, "PASS"))[1]
        _RESULTS[number] = (title, status if prev == "PASS" else prev)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, status = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
