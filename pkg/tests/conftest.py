import numpy as np
import pytest

from sovxxz.algebra import Model, random_params

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def rand_complex(rng, scale=0.5):
    return complex(rng.normal() * scale, rng.normal() * scale)


def make_model(seed, n_sites, case=None, triangular=False):
    rng = np.random.default_rng(seed)
    return Model(random_params(n_sites, rng, case=case, triangular=triangular))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
