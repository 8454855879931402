from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass

import pytest


@dataclass(frozen=True)
class CriterionLine:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:2d} {self.name}: {self.detail}; "
                f"{self.seconds:.2f} s (budget {self.budget:g} s)")


class AcceptanceLog:
    def __init__(self) -> None:
        self.lines: dict[int, CriterionLine] = {}

    @contextmanager
    def timer(self):
        box = {}
        start = time.perf_counter()
        try:
            yield box
        finally:
            box["seconds"] = time.perf_counter() - start

    def record(self, number: int, name: str, checks: dict, seconds: float,
               budget: float) -> CriterionLine:
        """``checks`` maps a label to ``(value, relation, threshold)``."""
        parts, ok = [], seconds < budget
        for label, (value, relation, threshold) in checks.items():
            good = value <= threshold if relation == "<=" else value >= threshold
            ok &= bool(good)
            parts.append(f"{label} {value:.3e} {relation} {threshold:.1e}")
        entry = CriterionLine(number, name, ok, ", ".join(parts), seconds, budget)
        self.lines[number] = entry
        return entry


_LOG = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceLog:
    return _LOG


def pytest_terminal_summary(terminalreporter):
    if not _LOG.lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LOG.lines):
        terminalreporter.write_line(_LOG.lines[number].line())
