"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES: list = []


def record(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return line
