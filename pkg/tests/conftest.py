import functools

import numpy as np
import pytest

from lattice_wiretap import numberfield as nf
from lattice_wiretap import verify as vf

# name -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fields():
    return nf.catalog()


@functools.lru_cache(maxsize=None)
def code_for(name: str):
    return vf.default_code(nf.get_field(name))


@pytest.fixture(scope="session")
def zi_code():
    """Z[i] / 2Z[i], P = 10, R' = 3 (flat coarse lattice)."""
    from lattice_wiretap import wiretap as wt

    return wt.design_code("Q(i)", 10.0, None, 3.0, nesting=2)
