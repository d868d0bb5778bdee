"""Collects acceptance verdicts and prints one line per criterion at the end."""

from collections import OrderedDict

import pytest

CRITERIA = OrderedDict([
    (1, ("BP threshold of the block ensemble", ["bp"])),
    (2, ("MAP bound from the EXIT curve", ["map"])),
    (3, ("terminated threshold trend", ["increasing", "converged"])),
    (4, ("minimum-distance growth rates", ["block", "tailbite", "free"])),
    (5, ("peeling thresholds", ["block", "coupled"])),
    (6, ("critical geometry", ["block", "coupled"])),
    (7, ("scaling fits", ["block", "coupled"])),
    (8, ("prediction overlay", ["block", "coupled"])),
    (9, ("property suites", ["spc", "classical", "concentration", "determinism"])),
])

_RESULTS: dict = {}


class Verdicts:
    def record(self, crit: int, part: str, ok: bool, detail: str = ""):
        _RESULTS[(crit, part)] = (bool(ok), detail)
        return bool(ok)


@pytest.fixture(scope="session")
def verdicts():
    return Verdicts()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, (title, parts) in CRITERIA.items():
        got = [(p, _RESULTS.get((crit, p))) for p in parts]
        if all(r is None for _, r in got):
            continue
        ok = all(r is not None and r[0] for _, r in got)
        bits = []
        for p, r in got:
            if r is None:
                bits.append(f"{p}: not run")
            else:
                bits.append(f"{p}: {'pass' if r[0] else 'FAIL'} {r[1]}".rstrip())
        tr.write_line(f"criterion {crit} {'PASS' if ok else 'FAIL'} ({title}) | " + "; ".join(bits))
