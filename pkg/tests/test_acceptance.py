"""Acceptance criteria 1-10, one PASS/FAIL line each (printed in the terminal summary)."""

import filecmp
import time

import pytest

from acceptance_suite import Outcome, Suite

RESULTS = {}


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    return Suite(tmp_path_factory.mktemp("acceptance_run1"))


def record(outcome):
    RESULTS[outcome.criterion] = outcome
    print(outcome.line())
    assert outcome.passed, outcome.line()


def test_c01_analytic_single_path(suite):
    record(suite.c01())


def test_c02_oracle_equivalence(suite):
    record(suite.c02())


def test_c03_menger_identity(suite):
    record(suite.c03())


def test_c05_uws_model_shapes(suite):
    record(suite.c05())


def test_c06_uniformly_disconnected_signature(suite):
    record(suite.c06())


def test_c07_spoked_lower_bound(suite):
    record(suite.c07())


def test_c08_certificate_decay(suite):
    record(suite.c08())


def test_c09_tangent_window_counts(suite):
    record(suite.c09())


def test_c04_p_monotonicity(suite):
    # runs after the others so every family they solved is registered
    record(suite.c04())


def test_c10_determinism(suite, tmp_path_factory):
    first = suite.artifacts()
    t0 = time.perf_counter()
    again = Suite(tmp_path_factory.mktemp("acceptance_run2"))
    again.run_all()
    second = again.artifacts()
    differ = [n for n in first if n not in second or not filecmp.cmp(suite.out / n, again.out / n, shallow=False)]
    missing = sorted(set(second) - set(first))
    ok = bool(first) and not differ and not missing
    record(Outcome(10, ok, f"{len(first)} CSV/JSON artifacts rerun; differing: {differ or 'none'}; "
                   f"only in rerun: {missing or 'none'}", time.perf_counter() - t0))
