import warnings
from pathlib import Path

import numpy as np
import pytest

from rmtgrid.gridsim import generate_trace, ieee118, table2_scenario
from rmtgrid.laws import theory_set
from rmtgrid.pipeline import PipelineConfig, sliding_les

DATA = Path(__file__).parent / "data"
SEED = 7  # the documented example seed of the four-event scenario
DETECT_FUNCTIONS = ("MSR", "T2", "LRT")

# stage brackets of the four-event scenario (window end times)
STAGES = [
    ("S1", 240, 400),
    ("S2", 401, 639),
    ("S3", 640, 800),
    ("S4", 801, 1039),
    ("S5", 1040, 1200),
    ("S6", 1201, 1377),
    ("S7", 1378, 1600),
]


@pytest.fixture(scope="session")
def case118():
    return ieee118()


@pytest.fixture(scope="session")
def reference_solution():
    return np.loadtxt(DATA / "ieee118_reference.csv", delimiter=",", skiprows=1)


@pytest.fixture(scope="session")
def table2_run(case118):
    return generate_trace(case118, table2_scenario(), 1600, SEED)


@pytest.fixture(scope="session")
def detect_config():
    return PipelineConfig(240, 1, 0.002, DETECT_FUNCTIONS, 3.0, SEED)


@pytest.fixture(scope="session")
def theory118():
    return theory_set(DETECT_FUNCTIONS, 118, 240, trials=1000, seed=0)


@pytest.fixture(scope="session")
def table2_series(table2_run, detect_config, theory118):
    return sliding_les(table2_run.trace, detect_config, theory118)


@pytest.fixture(scope="session")
def regional_lrt(table2_run, detect_config):
    from rmtgrid.pipeline import default_region_map, regional_les

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return regional_les(table2_run.trace, default_region_map(), detect_config, function="LRT")


@pytest.fixture
def gauss():
    def make(N=118, T=240, seed=0):
        return np.random.default_rng(seed).standard_normal((N, T))

    return make


# --- acceptance report -------------------------------------------------------

ACCEPTANCE = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
