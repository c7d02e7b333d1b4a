import numpy as np
import pytest

from conftest import make_model, rand_complex
from sovxxz import oracle, spectrum
from sovxxz.sov import build_basis

CASES = [("minus", "-", False), ("plus", "+", True), ("minus", "-", True)]


@pytest.fixture(scope="module")
def solved():
    out = {}
    for case, eps, tri in CASES:
        for n in (1, 2, 3):
            model = make_model([31, n, int(tri)], n, case, tri)
            basis = build_basis(model, eps)
            out[case, tri, n] = (model, basis, spectrum.solve_all(model, eps, basis=basis))
    return out


@pytest.mark.parametrize("case,eps,tri", CASES)
def test_single_site_matches_transfer_eigenvalues(case, eps, tri, solved, rng):
    model, _, pairs = solved[case, tri, 1]
    assert len(pairs) == 2
    for _ in range(3):
        lam = rand_complex(rng)
        ref = np.sort_complex(np.linalg.eigvals(model.transfer(lam)))
        got = np.sort_complex(np.array([p.tau(lam) for p in pairs]))
        assert np.max(np.abs(ref - got)) < 1e-10 * max(1, np.max(np.abs(ref)))


@pytest.mark.parametrize("case,eps,tri", CASES)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_complete_and_separated(case, eps, tri, n, solved):
    model, _, pairs = solved[case, tri, n]
    assert len(pairs) == 2 ** n
    assert spectrum.min_separation(model, [p.tau for p in pairs]) > 1e-6


@pytest.mark.parametrize("case,eps,tri", CASES)
def test_spectrum_matches_oracle(case, eps, tri, solved, rng):
    model, _, pairs = solved[case, tri, 3]
    spec = oracle.diagonalize(model)
    lam = rand_complex(rng)
    ref = np.sort_complex(np.array([spec.tau_of(k, lam) for k in range(8)]))
    got = np.sort_complex(np.array([p.tau(lam) for p in pairs]))
    assert np.max(np.abs(ref - got)) < 1e-8 * max(1, np.max(np.abs(ref)))


def test_oracle_eigenvalues_solve_discrete_system():
    model = make_model([32, 3], 3, "minus")
    spec = oracle.diagonalize(model)
    z0 = [model.scalars.zeta_point(a, 0) for a in range(3)]
    for k in range(8):
        tau = spectrum.tau_from_values(model, [spec.tau_of(k, z) for z in z0])
        assert np.max(spectrum.sov_residuals(model, tau, "-")) < 1e-8


def test_tau_from_values_round_trip(rng):
    model = make_model([33, 3], 3, "plus", True)
    c = [rand_complex(rng) for _ in range(3)]
    tau = spectrum.TauFunction.from_coefficients(model, c)
    z0 = [model.scalars.zeta_point(a, 0) for a in range(3)]
    back = spectrum.tau_from_values(model, [tau(z) for z in z0])
    assert np.max(np.abs(np.array(back.c) - np.array(c))) < 1e-10


def test_tau_fixed_value_and_parity(solved, rng):
    model, _, pairs = solved["minus", False, 2]
    eta = model.params.eta
    for p in pairs:
        assert abs(p.tau(eta / 2) - 2 * np.cosh(eta) * p.tau.u0) < 1e-11 * max(1, abs(p.tau.u0))
        lam = rand_complex(rng)
        assert abs(p.tau(lam) - p.tau(-lam)) < 1e-12 * max(1, abs(p.tau(lam)))


def test_tau_eval_vectorised(solved):
    _, _, pairs = solved["minus", False, 2]
    lams = np.array([0.1 + 0.2j, -0.3 + 0.05j])
    vals = spectrum.tau_eval(pairs[0].tau, lams)
    assert np.allclose(vals, [pairs[0].tau(x) for x in lams])


@pytest.mark.parametrize("case,eps,tri", CASES)
@pytest.mark.parametrize("n", [2, 3])
def test_eigenstates(case, eps, tri, n, solved):
    model, basis, pairs = solved[case, tri, n]
    for p in pairs:
        assert p.residual < 1e-9
        assert p.raw_residual < 1e-7
        assert spectrum.wavefunction_baxter_residual(model, basis, p) < 1e-9
    assert spectrum.projector_sum_residual(pairs) < 1e-8


def test_polish_preserves_gauge(solved):
    model, basis, pairs = solved["minus", False, 3]
    p = pairs[0]
    raw = spectrum.build_eigenstates(model, p.tau, "-", basis=basis, polish=False)
    c = np.vdot(raw.right_state, p.right_state) / np.vdot(raw.right_state, raw.right_state)
    assert abs(c - 1) < 1e-12
    assert np.linalg.norm(p.right_state - raw.right_state) < 1e-8 * np.linalg.norm(raw.right_state)


def test_polish_point_deterministic():
    model = make_model([34, 2], 2)
    assert spectrum.polish_point(model, 3) == spectrum.polish_point(model, 3)
    z = spectrum.polish_point(model, 0)
    assert 0.2 <= z.real <= 0.6 and 0.2 <= z.imag <= 0.6


def test_solve_order_deterministic():
    model = make_model([35, 3], 3, "minus")
    a = spectrum.solve_spectrum(model, "-", workers=1)
    b = spectrum.solve_spectrum(model, "-", workers=4)
    assert [t.c for t in a] == [t.c for t in b]


def test_wavefunctions_have_no_vanishing_components(solved):
    model, basis, pairs = solved["plus", True, 2]
    for p in pairs:
        psi = basis.left @ p.right_state
        assert np.all(np.abs(psi) > 0)
