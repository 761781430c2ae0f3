import numpy as np
import pytest

from muskatlab.core import FluidConfig, SpectralGrid


@pytest.fixture
def ref_cfg():
    return FluidConfig((2.0, 1.0, 0.0), (0.0, 1.0))


@pytest.fixture
def grid():
    return SpectralGrid(20.0, 256)


def random_cfg(rng, n):
    rho = np.sort(rng.uniform(0.0, 5.0, n + 1))[::-1] + np.arange(n + 1)[::-1] * 1e-3
    d = np.cumsum(rng.uniform(0.2, 2.0, n))
    return FluidConfig(tuple(rho), tuple(d))


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the session

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """``record(number, title, passed, detail)``; parts of one criterion
    are merged (the criterion passes only if every part passes)."""
    def record(number, title, passed, detail):
        entry = _ACCEPTANCE.setdefault(number, {"title": title, "parts": []})
        entry["parts"].append((bool(passed), detail))
        line = (f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  "
                f"{title}: {detail}")
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        ok = all(p for p, _ in entry["parts"])
        detail = "; ".join(d for _, d in entry["parts"])
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  "
            f"{entry['title']}: {detail}")
