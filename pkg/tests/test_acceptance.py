"""Acceptance criteria 1-10, each with its tolerance and runtime budget."""
import json

import pytest

from resonant_nls import verify

# criterion -> (suite, runtime budget in seconds)
CRITERIA = {
    1: ("q-residual", 5.0),
    2: ("determinant", 1.0),
    3: ("tree-oracle", 30.0),
    4: ("scaling", 120.0),
    5: ("scaling-multimode", 180.0),
    6: ("separation", 1.0),
    7: ("counterterm-bound", 60.0),
    8: ("measure", 120.0),
    9: ("symmetry", None),
    10: ("jacobian", None),
}

ACCEPTANCE_LINES: list[str] = []


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(criterion):
    suite, budget = CRITERIA[criterion]
    (result,) = verify.SUITES[suite]()
    in_budget = budget is None or result.elapsed < budget
    ok = result.passed and in_budget
    line = result.line()
    if not ok:
        line = line.replace("[PASS]", "[FAIL]")
    if not in_budget:
        line += f" over budget {budget:.0f}s"
    ACCEPTANCE_LINES.append(line)
    print(line)
    print(json.dumps(result.to_dict()["measured"], sort_keys=True))
    assert result.passed, json.dumps(result.to_dict(), indent=1)
    assert in_budget, f"{suite} took {result.elapsed:.1f}s (budget {budget}s)"
