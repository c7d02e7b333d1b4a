import numpy as np
import pytest

from conftest import make_model
from sovxxz import matelem, oracle, spectrum
from sovxxz.algebra import ID2, SM, SP, SX, SZ, ParameterError
from sovxxz.sov import build_basis

LOCAL_OPS = {"id": ID2, "x": SX, "z": SZ, "+": SP, "-": SM}


def solved(seed, n, case, tri=False):
    model = make_model(seed, n, case, tri)
    eps = "-" if case == "minus" else "+"
    basis = build_basis(model, eps)
    return model, eps, spectrum.solve_all(model, eps, basis=basis)


@pytest.fixture(scope="module")
def minus3():
    return solved([51, 3], 3, "minus")


@pytest.fixture(scope="module")
def plus3():
    return solved([52, 3], 3, "plus", True)


# reconstructions ------------------------------------------------------------------

@pytest.mark.parametrize("name", list(LOCAL_OPS))
@pytest.mark.parametrize("n", [1, 2, 3])
def test_bulk_reconstruction(name, n):
    model = make_model([53, 3], 3)
    assert matelem.bulk_reconstruct_check(model, LOCAL_OPS[name], n) < 1e-9


@pytest.mark.parametrize("name", list(LOCAL_OPS))
@pytest.mark.parametrize("n", [1, 2, 3])
def test_boundary_reconstruction(name, n):
    model = make_model([54, 3], 3)
    assert matelem.boundary_reconstruct_check(model, LOCAL_OPS[name], n) < 1e-9


def test_identity_reconstructions_count():
    model = make_model([55, 2], 2)
    assert len(matelem.bulk_reconstructions(model, ID2, 1)) == 4
    assert len(matelem.boundary_reconstructions(model, ID2, 1)) == 4
    assert len(matelem.boundary_reconstructions(model, ID2, 1, side="-")) == 2
    with pytest.raises(ValueError):
        matelem.boundary_reconstructions(model, ID2, 1, side="0")
    with pytest.raises(ValueError):
        matelem.bulk_reconstructions(model, ID2, 3)


@pytest.mark.parametrize("eps", ["-", "+"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_bar_transfer_inversion(eps, n):
    model = make_model([56, 3], 3)
    assert matelem.bar_transfer_inversion_residual(model, eps, n) < 1e-10


@pytest.mark.parametrize("n_sites", [2, 3])
def test_annihilation(n_sites):
    model = make_model([57, n_sites], n_sites)
    report = matelem.annihilation_checks(model)
    assert len(report) == n_sites * len(matelem.annihilation_identities(model, 1))
    assert max(report.values()) < 1e-10


def test_annihilation_pairing_uses_other_node():
    # A_+(-zeta^(0)) B_+(zeta^(0)) does not vanish; the listed partner is zeta^(1)
    model = make_model([58, 2], 2)
    s = model.scalars
    z0, z1 = s.zeta_point(0, 0), s.zeta_point(0, 1)
    a = model.generator("A", "+", -z0)
    wrong = a @ model.generator("B", "+", z0)
    right = a @ model.generator("B", "+", z1)
    scale = np.max(np.abs(a)) * np.max(np.abs(model.generator("B", "+", z0)))
    assert np.max(np.abs(wrong)) / scale > 1e-6
    assert np.max(np.abs(right)) / (np.max(np.abs(a)) * np.max(np.abs(model.generator("B", "+", z1)))) < 1e-10


# sigma strings ------------------------------------------------------------------------

def test_sigma_string_sites():
    assert matelem.SigmaString.for_eps("-", 2).sites(4) == [2, 3, 4]
    assert matelem.SigmaString.for_eps("+", 2).sites(4) == [1, 2]
    with pytest.raises(ValueError):
        matelem.SigmaString("middle", 1)


@pytest.mark.parametrize("case,eps,tri", [("minus", "-", False), ("plus", "+", True)])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_sigma_string_reconstruction(case, eps, tri, n):
    model = make_model([59, 3], 3, case, tri)
    res, const = matelem.sigma_string_reconstruct_check(model, eps, n)
    assert res < 1e-9
    assert abs(const - 1) < 1e-9


def test_class_mismatch_rejected(minus3):
    model, _, pairs = minus3
    with pytest.raises(ParameterError):
        matelem.matrix_element(model, "+", pairs[0], pairs[1], 1)
    with pytest.raises(ParameterError):
        matelem.sigma_string_reconstruction(model, "+", 1)


# matrix elements ---------------------------------------------------------------------

def check_against_direct(model, eps, pairs, n, tol=1e-7):
    for p in pairs:
        for q in pairs:
            res = matelem.matrix_element(model, eps, p, q, n)
            direct = matelem.direct_matrix_element(model, eps, p, q, n)
            scale = (np.linalg.norm(p.left_state) * np.linalg.norm(q.right_state))
            allowed = matelem.ratio_tolerance(matelem.sigma_condition(res.sigma_matrix), tol)
            assert abs(res.value - direct) <= allowed * scale


@pytest.mark.parametrize("n", [1, 2, 3])
def test_minus_matrix_elements(n, minus3):
    model, eps, pairs = minus3
    check_against_direct(model, eps, pairs, n)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_plus_matrix_elements(n, plus3):
    model, eps, pairs = plus3
    check_against_direct(model, eps, pairs, n)


def test_sigma_matrix_sizes(minus3, plus3):
    for (model, eps, pairs), size in ((minus3, lambda n: 2 * 3 - n + 1), (plus3, lambda n: 3 + n)):
        for n in (1, 2, 3):
            sig = matelem.matrix_element(model, eps, pairs[0], pairs[1], n).sigma_matrix
            assert sig.shape == (size(n), size(n))


def test_two_site_minus_against_oracle():
    model, eps, pairs = solved([60, 2], 2, "minus")
    spec = oracle.diagonalize(model)
    for p in pairs:
        for q in pairs:
            val = matelem.matrix_element(model, eps, p, q, 2).value
            ref = matelem.oracle_matrix_element(model, spec, eps, p, q, 2)
            scale = np.linalg.norm(p.left_state) * np.linalg.norm(q.right_state)
            assert abs(val - ref) < 1e-8 * scale


def test_single_site_direct():
    model, eps, pairs = solved([61, 1], 1, "minus")
    for p in pairs:
        for q in pairs:
            direct = complex(p.left_state @ SM @ q.right_state)
            assert matelem.direct_matrix_element(model, eps, p, q, 1) == pytest.approx(direct)
            val = matelem.matrix_element(model, eps, p, q, 1).value
            assert abs(val - direct) < 1e-9 * np.linalg.norm(p.left_state) * np.linalg.norm(q.right_state)


def test_direct_element_linear_in_states(minus3):
    model, eps, pairs = minus3
    p, q = pairs[1], pairs[2]
    base = matelem.matrix_element(model, eps, p, q, 2).value
    norm = matelem.normalized(base, model, p, q)
    assert np.isfinite(norm)
    s = 2.5 - 0.5j
    p2 = type(p)(tau=p.tau, eps=p.eps, q_ratios=p.q_ratios, qbar_ratios=p.qbar_ratios,
                 right_state=p.right_state, left_state=s * p.left_state)
    assert matelem.direct_matrix_element(model, eps, p2, q, 2) == pytest.approx(
        s * matelem.direct_matrix_element(model, eps, p, q, 2))


def test_conditioning_rule():
    assert matelem.ratio_tolerance(10.0, 1e-7) == 1e-7
    assert matelem.ratio_tolerance(1e8, 1e-7) == pytest.approx(1e-4)
    assert matelem.sigma_condition(np.diag([1.0, 1e3])) == pytest.approx(1.0)
    assert matelem.sigma_condition(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-8]])) > 1e7


def test_calibration_frozen():
    assert matelem.CALIBRATION == {"-": 1.0, "+": 1.0}
