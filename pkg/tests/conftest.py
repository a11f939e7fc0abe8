from collections import defaultdict

import pytest

_RESULTS: dict[str, list[tuple[str, bool, str]]] = defaultdict(list)
_NOTES: list[tuple[str, bool, str]] = []


class AcceptanceRecorder:
    def part(self, criterion: str, name: str, ok: bool, detail: str = "") -> bool:
        _RESULTS[criterion].append((name, bool(ok), detail))
        return bool(ok)

    def note(self, label: str, ok: bool, detail: str = "") -> None:
        """Informational line that does not decide any criterion."""
        _NOTES.append((label, bool(ok), detail))


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS and not _NOTES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_RESULTS, key=lambda c: int(c[2:])):
        parts = _RESULTS[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{n}: {'ok' if o else 'FAILED'} ({d})" if d else f"{n}: {'ok' if o else 'FAILED'}"
                           for n, o, d in parts)
        tr.write_line(f"{crit} {'PASS' if ok else 'FAIL'} - {detail}")
    for label, ok, detail in _NOTES:
        tr.write_line(f"note {label} {'PASS' if ok else 'FAIL'} - {detail}")
