"""Collects one PASS/FAIL line per acceptance criterion."""

from __future__ import annotations

LINES: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    LINES.append(line)
    print(line)
