import numpy as np
import pytest

from dramshift.array import DramGeometry, RowAddress, build_memory


def tiny(rows: int = 8, columns: int = 8, subarrays: int = 2, banks: int = 2) -> DramGeometry:
    return DramGeometry(1, 1, banks, subarrays, rows, columns)


def int_shift(value: int, n: int, direction: str) -> int:
    """Integer reference for a one-column shift; column i is bit i."""
    mask = (1 << n) - 1
    return (value << 1) & mask if direction == "right" else value >> 1


def to_bits(value: int, n: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(n)], dtype=bool)


def to_int(bits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))


@pytest.fixture
def mem8():
    return build_memory(tiny())


@pytest.fixture
def rows():
    return RowAddress(0, 0, 0), RowAddress(0, 0, 1)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
