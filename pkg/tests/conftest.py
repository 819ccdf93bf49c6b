from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture(scope="session")
def fair_bits():
    """One million seeded fair-coin bits."""
    return np.random.default_rng(20240101).integers(0, 2, 1_000_000, dtype=np.uint8)


def bits_from(text: str) -> np.ndarray:
    return np.array([int(c) for c in text], dtype=np.uint8)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
