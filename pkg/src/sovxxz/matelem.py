"""Operator reconstructions and determinant matrix elements of sigma^- strings.

Reconstructions express a local operator x_n through generators of the
Yang-Baxter / reflection algebras at the SOV points zeta_n^(h).  They are
checked as dense operator identities.  Matrix elements of the strings
sigma_n^- ... sigma_N^- (minus class) and sigma_1^- ... sigma_n^- (plus class)
between transfer-matrix eigenstates are computed as a single determinant.
"""

from dataclasses import dataclass

import numpy as np

from . import numkit
from .algebra import SY, ParameterError, embed, sigma_minus_string
from .separates import nodes, pairing_det
from .spectrum import tau_eval

# The determinant prefactors below are derived from the sigma-string
# reconstruction and the SOV measure; against direct contractions they need
# no extra constant.  The value is frozen here and asserted by the tests.
CALIBRATION = {"-": 1.0 + 0j, "+": 1.0 + 0j}

# Sigma matrices with a larger row-equilibrated condition number turn input
# rounding (nodes, Q ratios at ~1e-14) into relative errors above 1e-7; their
# matrix elements are nearly vanishing and are checked against a
# conditioning bound instead of the fixed scatter target.
CONDITION_LIMIT = 1e6
CONDITION_ERROR_SLOPE = 1e-12


def _tr0(u, y):
    """tr_0 (u_0 y_0) for an aux-operator u and a scalar 2x2 matrix y."""
    return sum(u[i, j] * y[j, i] for i in range(2) for j in range(2))


def _case_eps(model, eps):
    case = model.params.case
    want = "minus" if eps == "-" else "plus"
    if case != want:
        raise ParameterError(f"eps={eps} needs boundary class {want!r}, got {case!r}")


def _prefix_products(model, n):
    """(P, P^-1, Q, Q^-1) with P = prod_{a<n} t(zeta_a^(1)), Q = prod_{a>n} t(zeta_a^(1))."""
    s = model.scalars
    d = model.dim
    p = np.eye(d, dtype=complex)
    q = np.eye(d, dtype=complex)
    for a in range(n - 1):
        p = p @ model.bulk_transfer(s.zeta_point(a, 1))
    for a in range(n, model.n):
        q = q @ model.bulk_transfer(s.zeta_point(a, 1))
    return p, np.linalg.inv(p), q, np.linalg.inv(q)


def _check_site(model, n):
    if not 1 <= n <= model.n:
        raise ValueError(f"site n={n} outside 1..{model.n}")


# ---------------------------------------------------------------------------
# bulk and boundary reconstructions
# ---------------------------------------------------------------------------

def bulk_reconstructions(model, x, n):
    """The four bulk reconstructions of x_n (n is 1-based)."""
    _check_site(model, n)
    s = model.scalars
    x = np.asarray(x, dtype=complex)
    xt = SY @ x.T @ SY
    z0, z1 = s.zeta_point(n - 1, 0), s.zeta_point(n - 1, 1)
    t = model.bulk_transfer
    p, pi, q, qi = _prefix_products(model, n)
    dq = s.detq_m(s.xi[n - 1])
    return [
        p @ t(z1) / dq @ _tr0(model.monodromy(z0), xt) @ pi,
        qi @ _tr0(model.monodromy(z0), xt) @ t(z1) / dq @ q,
        p @ _tr0(model.monodromy(z1), x) @ t(z0) / dq @ pi,
        qi @ t(z0) / dq @ _tr0(model.monodromy(z1), x) @ q,
    ]


def boundary_reconstructions(model, x, n, side=None):
    """Reconstructions of x_n from U_- (side '-') and/or U_+ (side '+').

    Each carries the factor cosh(xi_n): the bar-transfer matrices include
    cosh(lambda -+ eta/2) while tr_0(U x) does not.
    """
    _check_site(model, n)
    s = model.scalars
    x = np.asarray(x, dtype=complex)
    xt = SY @ x.T @ SY
    z0, z1 = s.zeta_point(n - 1, 0), s.zeta_point(n - 1, 1)
    xi = s.xi[n - 1]
    c = np.cosh(xi)
    tb = model.transfer_bar
    p, pi, q, qi = _prefix_products(model, n)
    out = []
    if side in (None, "-"):
        dm = s.detq_ubar_minus(xi)
        out += [
            c * qi @ _tr0(model.u_minus(z0), xt) @ tb("-", z1) / dm @ q,
            c * qi @ tb("-", z0) / dm @ _tr0(model.u_minus(-z1), xt) @ q,
        ]
    if side in (None, "+"):
        dp = s.detq_ubar_plus(xi)
        out += [
            c * p @ _tr0(model.u_plus(z1), x) @ tb("+", z0) / dp @ pi,
            c * p @ tb("+", z1) / dp @ _tr0(model.u_plus(-z0), x) @ pi,
        ]
    if not out:
        raise ValueError(f"side must be '-', '+' or None, got {side!r}")
    return out


def _worst(ops, target):
    return max(numkit.rel_residual(op, target) for op in ops)


def bulk_reconstruct_check(model, x, n):
    return _worst(bulk_reconstructions(model, x, n), embed(np.asarray(x, dtype=complex), n, model.n))


def boundary_reconstruct_check(model, x, n, side=None):
    return _worst(boundary_reconstructions(model, x, n, side),
                  embed(np.asarray(x, dtype=complex), n, model.n))


def bar_transfer_inversion_residual(model, eps, n):
    """|T-bar(zeta_n^(1)) T-bar(zeta_n^(0)) - det_q U-bar(xi_n)| relative."""
    s = model.scalars
    z0, z1 = s.zeta_point(n - 1, 0), s.zeta_point(n - 1, 1)
    xi = s.xi[n - 1]
    dq = s.detq_ubar_minus(xi) if eps == "-" else s.detq_ubar_plus(xi)
    prod = model.transfer_bar(eps, z1) @ model.transfer_bar(eps, z0)
    return float(np.max(np.abs(prod - dq * np.eye(model.dim))) / abs(dq))


# ---------------------------------------------------------------------------
# annihilation identities
# ---------------------------------------------------------------------------

def annihilation_identities(model, n):
    """All products X(x) Y(y) that vanish at site n, as (label, eps, X, x, Y, y).

    In the U_+ family the first identity is A_+(-zeta^(0)) B_+(+-zeta^(1)):
    with B_+(+-zeta^(0)) the product does not vanish.
    """
    s = model.scalars
    z0, z1 = s.zeta_point(n - 1, 0), s.zeta_point(n - 1, 1)
    out = []

    def add(eps, x_name, x_arg, x_lab, y_name, y_arg, y_lab):
        out.append((f"{x_name}{eps}({x_lab}) {y_name}{eps}({y_lab})", eps, x_name, x_arg, y_name, y_arg))

    for sg, sl in ((1, "+"), (-1, "-")):
        # U_- family
        add("-", "A", z0, "z0", "C", sg * z1, f"{sl}z1")
        add("-", "A", -z1, "-z1", "C", sg * z0, f"{sl}z0")
        add("-", "D", z0, "z0", "B", sg * z1, f"{sl}z1")
        add("-", "D", -z1, "-z1", "B", sg * z0, f"{sl}z0")
        add("-", "B", sg * z0, f"{sl}z0", "A", -z1, "-z1")
        add("-", "B", sg * z1, f"{sl}z1", "A", z0, "z0")
        add("-", "C", sg * z0, f"{sl}z0", "D", -z1, "-z1")
        add("-", "C", sg * z1, f"{sl}z1", "D", z0, "z0")
        # U_+ family
        add("+", "A", -z0, "-z0", "B", sg * z1, f"{sl}z1")
        add("+", "A", z1, "z1", "B", sg * z0, f"{sl}z0")
        add("+", "D", -z0, "-z0", "C", sg * z1, f"{sl}z1")
        add("+", "D", z1, "z1", "C", sg * z0, f"{sl}z0")
        add("+", "B", sg * z0, f"{sl}z0", "D", z1, "z1")
        add("+", "B", sg * z1, f"{sl}z1", "D", -z0, "-z0")
        add("+", "C", sg * z0, f"{sl}z0", "A", z1, "z1")
        add("+", "C", sg * z1, f"{sl}z1", "A", -z0, "-z0")
        for sg2, sl2 in ((1, "+"), (-1, "-")):
            for eps in ("-", "+"):
                add(eps, "B", sg * z0, f"{sl}z0", "B", sg2 * z1, f"{sl2}z1")
                add(eps, "C", sg * z0, f"{sl}z0", "C", sg2 * z1, f"{sl2}z1")
    add("-", "A", z0, "z0", "D", -z1, "-z1")
    add("-", "A", -z1, "-z1", "D", z0, "z0")
    add("-", "D", z0, "z0", "A", -z1, "-z1")
    add("-", "D", -z1, "-z1", "A", z0, "z0")
    add("+", "A", -z0, "-z0", "D", z1, "z1")
    add("+", "A", z1, "z1", "D", -z0, "-z0")
    add("+", "D", -z0, "-z0", "A", z1, "z1")
    add("+", "D", z1, "z1", "A", -z0, "-z0")
    return out


def annihilation_checks(model):
    """{(n, label): |X Y| / (|X| |Y|)} over all sites and listed identities."""
    report = {}
    for n in range(1, model.n + 1):
        for label, eps, xn, xa, yn, ya in annihilation_identities(model, n):
            x = model.generator(xn, eps, xa)
            y = model.generator(yn, eps, ya)
            den = np.max(np.abs(x)) * np.max(np.abs(y))
            report[(n, label)] = float(np.max(np.abs(x @ y)) / den) if den > 0 else 0.0
    return report


# ---------------------------------------------------------------------------
# sigma^- strings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaString:
    """sigma_n^- ... sigma_N^- (``"tail"``) or sigma_1^- ... sigma_n^- (``"head"``)."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in ("tail", "head"):
            raise ValueError(f"kind must be 'tail' or 'head', got {self.kind!r}")

    @classmethod
    def for_eps(cls, eps, n):
        return cls("tail" if eps == "-" else "head", n)

    def sites(self, n_sites):
        return list(range(self.n, n_sites + 1)) if self.kind == "tail" else list(range(1, self.n + 1))

    def dense(self, n_sites):
        if not 1 <= self.n <= n_sites:
            raise ValueError(f"site n={self.n} outside 1..{n_sites}")
        return sigma_minus_string(self.kind, self.n, n_sites)


def _string_scalar(model, eps, n):
    """Scalar factor of the sigma-string reconstruction (with the cosh(xi_a) factors)."""
    s = model.scalars
    xi = s.xi
    eta = model.params.eta
    sites = SigmaString.for_eps(eps, n).sites(model.n)
    idx = [a - 1 for a in sites]
    out = 1.0 + 0j
    if eps == "-":
        out *= (-1) ** len(idx)
        for a in idx:
            z1 = s.zeta_point(a, 1)
            out *= s.abar(+1, z1) / s.sa(+1, z1) * np.cosh(xi[a])
        shift = -eta
    else:
        for a in idx:
            z0 = s.zeta_point(a, 0)
            out *= s.abar(-1, z0) / s.sd(-1, z0) * np.cosh(xi[a])
        shift = eta
    for i, a in enumerate(idx):
        for b in idx[i + 1:]:
            out *= np.sinh(xi[a] + xi[b] + shift) / np.sinh(xi[a] + xi[b])
    return out


def sigma_string_reconstruction(model, eps, n):
    """The sigma-string as B-products times normalised transfer matrices."""
    _case_eps(model, eps)
    _check_site(model, n)
    s = model.scalars
    op = np.eye(model.dim, dtype=complex)
    if eps == "-":
        order = list(range(model.n - 1, n - 2, -1))           # N, ..., n
        for a in order:
            op = op @ model.generator("B", "-", s.zeta_point(a, 0))
        for a in order:
            op = op @ model.transfer(s.zeta_point(a, 1)) / s.detq_ubar_minus(s.xi[a])
    else:
        for a in range(n):                                      # 1, ..., n
            op = op @ model.generator("B", "+", s.zeta_point(a, 1))
        for a in range(n - 1, -1, -1):                          # n, ..., 1
            op = op @ model.transfer(s.zeta_point(a, 0)) / s.detq_ubar_plus(s.xi[a])
    return _string_scalar(model, eps, n) * op


def sigma_string_reconstruct_check(model, eps, n):
    """(residual, constant): best-fit constant c with rec = c * string, and the residual."""
    rec = sigma_string_reconstruction(model, eps, n)
    target = SigmaString.for_eps(eps, n).dense(model.n)
    const = complex(np.vdot(target.ravel(), rec.ravel()) / np.vdot(target.ravel(), target.ravel()))
    return numkit.rel_residual(rec, target), const


# ---------------------------------------------------------------------------
# determinant matrix elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaMatrixElementResult:
    value: complex
    sigma_matrix: np.ndarray
    prefactor: complex


def _b_constant(model, eps):
    p = model.params
    kap, tau, zeta = ((p.kappa_minus, p.tau_minus, p.zeta_minus) if eps == "-"
                      else (p.kappa_plus, p.tau_plus, p.zeta_plus))
    return kap * np.exp(tau) / (2 ** p.n_sites * np.sinh(zeta))


def sigma_matrix(model, eps, left_pair, right_pair, n):
    """The Sigma matrix: pure-power rows at the nodes fixed by the string, pairing rows elsewhere.

    Minus class, size 2N - n + 1: rows M_a (a < n), then (eta_a^(0))^(b-1)
    and (eta_a^(1))^(b-1) for a = n..N.  Plus class, size N + n: rows
    (eta_a^(1))^(b-1) and (eta_a^(0))^(b-1) for a = 1..n, then M_a (a > n).
    """
    nd = nodes(model)
    big_n = model.n
    weights = np.asarray(left_pair.qbar_ratios) * np.asarray(right_pair.q_ratios)
    size = 2 * big_n - n + 1 if eps == "-" else big_n + n
    pw = np.arange(size)

    def m_row(a):
        return nd[a, 0] ** pw + weights[a] * nd[a, 1] ** pw

    if eps == "-":
        tail = range(n - 1, big_n)
        rows = [m_row(a) for a in range(n - 1)]
        rows += [nd[a, 0] ** pw for a in tail] + [nd[a, 1] ** pw for a in tail]
    else:
        rows = [nd[a, 1] ** pw for a in range(n)] + [nd[a, 0] ** pw for a in range(n)]
        rows += [m_row(a) for a in range(n, big_n)]
    return np.array(rows)


def matrix_element(model, eps, left_pair, right_pair, n):
    """<tau| sigma-string |tau'> in the SOV gauge of the eigenpairs, as prefactor * det(Sigma)."""
    _case_eps(model, eps)
    _check_site(model, n)
    if left_pair.eps != eps or right_pair.eps != eps:
        raise ParameterError("eigenpairs belong to a different boundary class")
    s = model.scalars
    eta = model.params.eta
    big_n = model.n
    weights = np.asarray(left_pair.qbar_ratios) * np.asarray(right_pair.q_ratios)
    pref = _string_scalar(model, eps, n)
    if eps == "-":
        # sign (-1)^(N-n+1) of the string scalar cancels the Vandermonde reordering sign
        m = big_n - n + 1
        fixed = [s.node(a, 0) for a in range(n - 1, big_n)]
        for a in range(n - 1, big_n):
            z0, z1 = s.zeta_point(a, 0), s.zeta_point(a, 1)
            pref *= (tau_eval(right_pair.tau, z1) / s.detq_ubar_minus(s.xi[a])
                     * weights[a] * np.sinh(2 * z0 - eta))
        pref *= (-1) ** m
    else:
        m = n
        fixed = [s.node(a, 1) for a in range(n)]
        for a in range(n):
            z0, z1 = s.zeta_point(a, 0), s.zeta_point(a, 1)
            pref *= tau_eval(right_pair.tau, z0) / s.detq_ubar_plus(s.xi[a]) * np.sinh(2 * z1 + eta)
        pref *= (-1) ** (n * big_n)
    pref *= _b_constant(model, eps) ** m / numkit.vandermonde(fixed)
    pref *= CALIBRATION[eps]
    sig = sigma_matrix(model, eps, left_pair, right_pair, n)
    return SigmaMatrixElementResult(value=complex(pref * numkit.det(sig)), sigma_matrix=sig,
                                    prefactor=complex(pref))


def sigma_condition(sigma):
    """2-norm condition number of Sigma after scaling its rows to unit norm."""
    sigma = np.asarray(sigma)
    return float(np.linalg.cond(sigma / np.linalg.norm(sigma, axis=1)[:, None]))


def ratio_tolerance(condition, tol):
    """Allowed |ratio - calibration| for a Sigma matrix of the given conditioning."""
    if condition <= CONDITION_LIMIT:
        return tol
    return max(tol, CONDITION_ERROR_SLOPE * condition)


def direct_matrix_element(model, eps, left_pair, right_pair, n):
    """Dense contraction of the assembled SOV eigenstates with the string."""
    op = SigmaString.for_eps(eps, n).dense(model.n)
    return complex(left_pair.left_state @ op @ right_pair.right_state)


def match_oracle(model, spectrum, pair):
    """Index of the oracle eigenvector carrying the eigenvalue function of ``pair``."""
    vals = spectrum.eigenvalues
    k = int(np.argmin(np.abs(vals - tau_eval(pair.tau, spectrum.probe))))
    return k


def oracle_matrix_element(model, spectrum, eps, left_pair, right_pair, n):
    """<tau|string|tau'> from oracle eigenvectors, rescaled to the SOV gauge of the pairs.

    Oracle rows/columns are biorthonormal; the SOV states are multiples of
    them, with the multiples read off by projection.
    """
    op = SigmaString.for_eps(eps, n).dense(model.n)
    i = match_oracle(model, spectrum, left_pair)
    j = match_oracle(model, spectrum, right_pair)
    w, v = spectrum.left[i], spectrum.right[:, j]
    alpha = complex(left_pair.left_state @ spectrum.right[:, i])
    beta = complex(spectrum.left[j] @ right_pair.right_state)
    return alpha * beta * complex(w @ op @ v)


def normalized(value, model, left_pair, right_pair):
    """value / sqrt(<tau|tau> <tau'|tau'>) with determinant norms."""
    nl = pairing_det(left_pair.left_separate(), left_pair.right_separate(), model)
    nr = pairing_det(right_pair.left_separate(), right_pair.right_separate(), model)
    return complex(value / np.sqrt(nl * nr))
