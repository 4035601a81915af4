import time

import pytest

from soras_lab import harness

_VERDICTS = []


class Verdicts:
    """Collects one verdict line per acceptance criterion."""

    def record(self, criterion, ok, detail):
        _VERDICTS.append((criterion, bool(ok), detail))
        return ok


@pytest.fixture(scope="session")
def verdicts():
    return Verdicts()


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def _spectra():
    return {(layers, pu): harness.spectrum_report(layers, pu)
            for layers in harness.OVERLAP_LAYERS for pu in ("PU1", "PU2")}


@pytest.fixture(scope="session")
def table5():
    """Extreme eigenvalues for every (layers, PU) of the SPD preset, with elapsed seconds."""
    return timed(_spectra)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(_VERDICTS, key=lambda v: v[0]):
        terminalreporter.write_line(f"{criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
