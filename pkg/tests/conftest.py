import csv
from pathlib import Path

import pytest

from nstar.experiment import SizeSummary

DATA = Path(__file__).parent / "data"


def _float(v):
    return float(v) if v != "" else None


def load_size_table():
    with open(DATA / "robinhood_nstar_by_size.csv", newline="") as fh:
        return [{k: _float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def load_yearly_table():
    with open(DATA / "cmc_yearly_variances.csv", newline="") as fh:
        reader = csv.reader(fh)
        years = [int(y) for y in next(reader)[1:]]
        rows = {r[0]: [_float(v) for v in r[1:]] for r in reader}
    return years, rows


@pytest.fixture(scope="session")
def size_table():
    """Per-size rows of the Robinhood N* table (sizes 1-13)."""
    return load_size_table()


@pytest.fixture(scope="session")
def size_summaries(size_table):
    return [
        SizeSummary.from_moments(int(r["size"]), r["mean"], r["std_dev"], int(r["count"]))
        for r in size_table
    ]


@pytest.fixture(scope="session")
def yearly_table():
    return load_yearly_table()


# --- acceptance reporting -------------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
