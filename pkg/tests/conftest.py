import numpy as np
import pytest

from screenmodem.raster import PAPER_TIMING, TimingConfig


@pytest.fixture
def paper_timing():
    return PAPER_TIMING


@pytest.fixture
def small_timing():
    """Tiny raster with a fast pixel clock per frame, for pixel-level checks."""
    return TimingConfig(64, 48, 60)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance reporting: one PASS/FAIL line per criterion in the summary ---

_ACCEPTANCE = {}


class CriterionRecord:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.details = []
        self.seconds = 0.0

    def note(self, text):
        self.details.append(str(text))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    record = getattr(item, "_criterion", None)
    if record is not None and rep.when == "call":
        record.seconds = rep.duration
        _ACCEPTANCE[record.number] = (rep.passed, record)


@pytest.fixture
def criterion(request):
    """Attach a record to an acceptance test; its outcome is summarized at the end."""
    marker = request.node.get_closest_marker("criterion")
    record = CriterionRecord(*marker.args)
    request.node._criterion = record
    yield record
    status = "PASS" if _ACCEPTANCE.get(record.number, (False,))[0] else "FAIL"
    print(f"criterion {record.number} {status}: {record.title} | {'; '.join(record.details)}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, record = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} {status} ({record.seconds:.1f} s): {record.title}"
                                    f" | {'; '.join(record.details)}")
