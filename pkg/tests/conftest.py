"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

import functools

import pytest

from nhaah.charpoly import solve_spectrum
from nhaah.lattice import LatticeConfig

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@functools.lru_cache(maxsize=None)
def golden_spectrum(q: int, V0: float, J: float = 1.0):
    config = LatticeConfig.golden(q, J=J, V0=V0)
    return config, solve_spectrum(config)


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
