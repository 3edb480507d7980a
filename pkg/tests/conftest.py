import numpy as np
import pytest

from canyon_sounder.bundle import AngleGrid, FrequencyAxis, LinkGeometry, MeasurementBundle
from canyon_sounder.condensed import CondenseOptions, condense_location
from canyon_sounder.synth import build_canonical_scenes, synthesize_bundle


def small_bundle(seed=0, n_freq=64):
    grid = AngleGrid([-10.0, 0.0, 10.0], [0.0], [0.0, 90.0, 180.0, 270.0], [-13.0, 0.0])
    freq = FrequencyAxis(145e9, 146e9, n_freq)
    rng = np.random.default_rng(seed)
    shape = (*grid.shape, n_freq)
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).astype(np.complex64)
    ota = (1.0 + rng.random(n_freq) + 1j * rng.random(n_freq)).astype(np.complex64)
    return MeasurementBundle(grid, freq, LinkGeometry(50.0, los=False), h, ota, label="small")


@pytest.fixture
def small():
    return small_bundle()


@pytest.fixture(scope="session")
def canonical():
    return build_canonical_scenes()


@pytest.fixture(scope="session")
def canonical_results(canonical):
    opts = CondenseOptions(keep_sets=True)
    return {name: condense_location(synthesize_bundle(sc), opts) for name, sc in canonical.items()}


ACCEPTANCE_LINES = []


def report_criterion(number, title, checks):
    """Record one summary line for an acceptance criterion; ``checks`` maps clause -> (ok, detail)."""
    ok = all(passed for passed, _ in checks.values())
    detail = "; ".join(f"{name}: {'ok' if passed else 'FAIL'} ({info})" for name, (passed, info) in checks.items())
    ACCEPTANCE_LINES.append(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title} | {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
