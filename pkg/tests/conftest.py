import numpy as np
import pytest

from trackml.dataset import CSV_COLUMNS, TABLE2_ROWS, table2_dataset


def table2_csv_text(rows=TABLE2_ROWS) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


@pytest.fixture
def table2():
    return table2_dataset()


@pytest.fixture
def table2_csv(tmp_path):
    path = tmp_path / "table2.csv"
    path.write_text(table2_csv_text(), encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(id, passed, detail)``."""
    def record(cid, passed, detail):
        _CRITERIA.append((cid, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {cid}: {detail}")
