"""Shared fixtures: the bundled example fields and one cached pipeline run."""

from __future__ import annotations

import pytest

from relthue.fieldspec import example_spec_path, load_spec
from relthue.order import make_context
from relthue.units import UnitSystem

CUBIC = "x**3-8*x**2+15*x-7"
SEXTIC = "x**6-8*x**4+15*x**2-7"
DUODECIC = "x**12+8*x**8+15*x**4+7"
D_K = 2**24 * 7**3 * 19**8

SEXTIC_UNITS = [
    (1, 1, 0, 0, 0, 0),
    (1, -1, 0, 0, 0, 0),
    (2, 0, -1, 0, 0, 0),
    (3, 1, -1, 0, 0, 0),
    (3, -7, 0, 7, 0, -1),
]
CONJ_MATRIX = [[0, 1, 0, -1, -1], [1, 0, 0, -1, -1], [0, 0, 1, 1, 1], [0, 0, 0, -1, 0], [0, 0, 0, 0, -1]]

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def M():
    return make_context(CUBIC)


@pytest.fixture(scope="session")
def G():
    return make_context(SEXTIC)


@pytest.fixture(scope="session")
def K():
    return make_context(DUODECIC, precision=60)


@pytest.fixture(scope="session")
def us(M, G):
    units = [G.element(c) for c in SEXTIC_UNITS]
    return UnitSystem(M, G, G.element((0, 0, 1, 0, 0, 0)), units, CONJ_MATRIX, [1] * 5)


@pytest.fixture(scope="session")
def spec():
    return load_spec(example_spec_path())


@pytest.fixture(scope="session")
def example_run(tmp_path_factory):
    """Full pipeline on the bundled example (about half a minute)."""
    from relthue.pipeline import RunOptions, run_pipeline

    out = tmp_path_factory.mktemp("example")
    sp = load_spec(example_spec_path())
    res = run_pipeline(sp, RunOptions(checkpoint=out / "unit-eq.ckpt"))
    res.checkpoint = out / "unit-eq.ckpt"
    return res


@pytest.fixture(scope="session")
def example_abs_search():
    from relthue.pipeline import RunOptions, run_absolute_search

    sp = load_spec(example_spec_path())
    return run_absolute_search(sp, RunOptions())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
