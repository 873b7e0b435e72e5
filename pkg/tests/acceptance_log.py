"""Collects one pass/fail line per acceptance criterion for the session summary."""

RESULTS = {}


def record(number, title, passed, detail=""):
    RESULTS[number] = (title, bool(passed), detail)
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    print(line)
    return line


def lines():
    return [f"criterion {n:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
            for n, (title, ok, detail) in sorted(RESULTS.items())]
