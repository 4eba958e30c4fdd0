"""Acceptance gate: every verification check must pass.

The checks live in crowddilemma.verify and are shared with the CLI `verify`
command; this module runs them once and reports one pass/fail line each.
"""

import pytest

from crowddilemma.verify import CHECKS, CheckResult


@pytest.fixture(scope="module")
def results():
    from crowddilemma.verify import run_checks

    outcome = {r.check_id: r for r in run_checks(workers=2)}
    for r in outcome.values():
        status = "PASS" if r.ok else "FAIL"
        print(f"[{status}] {r.check_id} ({r.seconds:.1f}s): {r.detail}")
    return outcome


@pytest.mark.parametrize("check_id", [c[0] for c in CHECKS])
def test_acceptance(results, check_id):
    result: CheckResult = results[check_id]
    print(f"[{'PASS' if result.ok else 'FAIL'}] {result.check_id} "
          f"({result.seconds:.1f}s): {result.detail}")
    assert result.ok, f"{check_id}: {result.detail}"


def test_criterion_runtime_targets(results):
    # the oracle comparison and the single-shot grid carry explicit budgets
    assert results["stage-payoff-oracle"].seconds < 60.0
    assert results["single-shot-regions"].seconds < 10.0
