"""Session fixtures for the expensive cylinder computations, plus the
acceptance summary.

The range-equation reports are consumed by both the unit tests and the
acceptance suite; solving each configuration once keeps the full run well
inside the time budget.  The terminal-summary hook prints one verdict line
per acceptance criterion and the measured wall time of the whole session,
which is itself part of criterion 8.
"""

import re
import time

import pytest

from wavebif import bifurcation, galerkin

_SESSION_T0 = time.perf_counter()
_WALL_BUDGET_SECONDS = 120.0

CRITERION_TITLES = {
    1: "quartic modulus root: bracketing interval, 1e-12 accuracy, < 1 s",
    2: "reciprocal-modulus K/E to 1e-12, pointwise identities to 1e-10",
    3: "elliptic profiles satisfy their equations to sup-norm 1e-8",
    4: "Green-operator identities to 1e-7, symmetry to 1e-8",
    5: "monodromy shift matches closed forms to 1e-8 with the sign pattern",
    6: "certificates: B positive, sign(A0) = -s*, three routes to 1e-7",
    7: "Galerkin oracle agrees to 1e-7, kernel gap > 1e-3, stable",
    8: "development exponent 2 +- 0.3, kinetic identity 1e-13, wall time",
    9: "range equation: exact at delta 0, Newton < 1e-9 off resonance",
}


@pytest.fixture(scope="session")
def quartic_profile():
    return bifurcation.solve_quartic_profile(1.0)


@pytest.fixture(scope="session")
def cubic_profile():
    # lam = 1 gives a fast-decaying interior profile, so the finite
    # truncations below resolve it fully
    return bifurcation.solve_cubic_profile(1.0, -1)


@pytest.fixture(scope="session")
def quartic_range0(quartic_profile):
    return galerkin.range_solve(quartic_profile, 0.0, n=1, a4=1.0)


@pytest.fixture(scope="session")
def cubic_range0(cubic_profile):
    return galerkin.range_solve(cubic_profile, 0.0, n=2, a2=1.0)


@pytest.fixture(scope="session")
def quartic_range_pos(quartic_profile):
    return galerkin.range_solve(quartic_profile, 0.3, n=1, a4=1.0)


@pytest.fixture(scope="session")
def cubic_range_pos(cubic_profile):
    return galerkin.range_solve(cubic_profile, 0.05, n=2, a2=1.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    tr = terminalreporter
    verdicts = {}
    pattern = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")
    for outcome, passed in (("passed", True), ("failed", False),
                            ("error", False)):
        for rep in tr.stats.get(outcome, []):
            match = pattern.search(getattr(rep, "nodeid", ""))
            if match:
                num = int(match.group(1))
                verdicts[num] = verdicts.get(num, True) and passed
    if verdicts:
        tr.write_sep("-", "acceptance criteria")
        for num in sorted(verdicts):
            verdict = "PASS" if verdicts[num] else "FAIL"
            title = CRITERION_TITLES.get(num, "")
            tr.write_line(f"criterion {num}: {verdict}  {title}")
    elapsed = time.perf_counter() - _SESSION_T0
    verdict = "PASS" if elapsed < _WALL_BUDGET_SECONDS else "FAIL"
    tr.write_line(
        f"suite wall time {elapsed:.1f} s against the "
        f"{_WALL_BUDGET_SECONDS:.0f} s budget: {verdict}"
    )
