"""Suite-wide bookkeeping.

Every extremality report produced anywhere in the suite is recorded and
audited: extremal verdicts must respect the rank bounds and be singular,
not-extremal verdicts must carry a witness that passes the independent
decomposition check. The acceptance module runs last so its audit criteria
see the whole suite.
"""

import functools
import zlib

import numpy as np
import pytest

import margext.extremality as _ext

RECORDED = []
VIOLATIONS = []
ACCEPTANCE_LINES = []

_original = _ext.is_extremal_kraus


@functools.wraps(_original)
def _recording_is_extremal_kraus(k, marginals, *args, **kwargs):
    report = _original(k, marginals, *args, **kwargs)
    _audit(k, marginals, report)
    return report


def _audit(k, marginals, report):
    from margext.duality import state_from_kraus
    from margext.oracle import verify_decomposition

    RECORDED.append(report)
    if report.verdict is _ext.Verdict.EXTREMAL:
        ok = report.bound_sqrt2d and report.bound_parthasarathy and report.state_rank < report.d**2
        if not ok:
            VIOLATIONS.append(("bounds", report))
    elif report.verdict is _ext.Verdict.NOT_EXTREMAL:
        rho = state_from_kraus(k, marginals)
        if report.witness is None or not verify_decomposition(rho, report.witness, marginals, 1e-9):
            VIOLATIONS.append(("witness", report))


_ext.is_extremal_kraus = _recording_is_extremal_kraus


def record_acceptance(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def rng(request):
    seed = zlib.crc32(request.node.nodeid.encode())
    return np.random.default_rng(seed)


def pytest_collection_modifyitems(session, config, items):
    items.sort(key=lambda it: it.module.__name__.endswith("test_acceptance"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"extremality reports audited: {len(RECORDED)}, violations: {len(VIOLATIONS)}"
    )


def pytest_sessionfinish(session, exitstatus):
    if VIOLATIONS and session.exitstatus == 0:
        session.exitstatus = 1
