import numpy as np
import pytest

from conftest import make_model, rand_complex
from sovxxz import oracle
from sovxxz.algebra import SZ, embed


@pytest.fixture(scope="module")
def spec3():
    return oracle.diagonalize(make_model([71, 3], 3))


def test_single_site_closed_form():
    model = make_model([72, 1], 1)
    spec = oracle.diagonalize(model)
    ref = np.sort_complex(np.linalg.eigvals(model.transfer(spec.probe)))
    assert np.allclose(np.sort_complex(spec.eigenvalues), ref, rtol=1e-12, atol=0)


def test_trace_identity(spec3):
    t = spec3.model.transfer(spec3.probe)
    assert abs(np.sum(spec3.eigenvalues) - np.trace(t)) < 1e-11 * np.linalg.norm(t)


def test_eigenvalues_sorted(spec3):
    keys = [(z.real, z.imag) for z in spec3.eigenvalues]
    assert keys == sorted(keys)


def test_complete_biorthonormal_basis(spec3):
    d = spec3.model.dim
    assert spec3.right.shape == (d, d) and spec3.left.shape == (d, d)
    assert np.allclose(np.linalg.norm(spec3.right, axis=0), 1)
    assert np.max(np.abs(spec3.left @ spec3.right - np.eye(d))) < 1e-10
    assert np.linalg.cond(spec3.right) < 1e12


def test_common_eigenvectors(spec3, rng):
    model = spec3.model
    for _ in range(3):
        lam = rand_complex(rng)
        t = model.transfer(lam)
        for k in range(model.dim):
            v = spec3.right[:, k]
            tau = spec3.tau_of(k, lam)
            assert np.linalg.norm(t @ v - tau * v) < 1e-9 * max(1, np.linalg.norm(t, 2))
            w = spec3.left[k]
            assert np.linalg.norm(w @ t - tau * w) < 1e-9 * max(1, np.linalg.norm(t, 2)) * np.linalg.norm(w)


def test_tau_fixed_value_and_parity(spec3, rng):
    model = spec3.model
    eta = model.params.eta
    fixed = (-1) ** 3 * 2 * np.cosh(eta) * model.scalars.detq_m(0)
    lam = rand_complex(rng)
    for k in range(model.dim):
        assert abs(spec3.tau_of(k, eta / 2) - fixed) < 1e-9 * abs(fixed)
        assert abs(spec3.tau_of(k, lam) - spec3.tau_of(k, -lam)) < 1e-9 * max(1, abs(spec3.tau_of(k, lam)))


def test_tau_of_rejects_non_eigenvector(spec3):
    model = spec3.model
    v = spec3.right[:, 0] + spec3.right[:, 1]
    with pytest.raises(oracle.OracleError):
        oracle.tau_of(model, v, 0.3 + 0.2j)


def test_node_values(spec3):
    pts = [0.1 + 0.1j, 0.2 - 0.3j]
    assert np.allclose(spec3.node_values(0, pts), [spec3.tau_of(0, z) for z in pts])


def test_direct_matrix_element(spec3):
    d = spec3.model.dim
    for k in range(d):
        w, v = spec3.left[k], spec3.right[:, k]
        assert oracle.direct_matrix_element(w, np.eye(d), v) == pytest.approx(1)
    sz = embed(SZ, 2, 3)
    w, v = spec3.left[0], spec3.right[:, 0]
    assert oracle.direct_matrix_element(w, sz, v) == pytest.approx(complex(w @ sz @ v))


def test_deterministic(spec3):
    again = oracle.diagonalize(spec3.model)
    assert again.probe == spec3.probe
    assert np.array_equal(again.eigenvalues, spec3.eigenvalues)
    threaded = oracle.diagonalize(spec3.model, workers=4)
    assert np.array_equal(threaded.eigenvalues, spec3.eigenvalues)


def test_explicit_probe():
    model = make_model([73, 2], 2)
    spec = oracle.diagonalize(model, lam_star=0.41 + 0.37j)
    assert spec.probe == 0.41 + 0.37j


@pytest.mark.parametrize("case,tri", [("minus", False), ("plus", True)])
def test_boundary_classes(case, tri):
    model = make_model([74, 4], 4, case, tri)
    spec = oracle.diagonalize(model)
    assert len(spec.eigenvalues) == 16
