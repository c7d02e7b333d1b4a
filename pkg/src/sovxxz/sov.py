"""Left and right B_eps(lambda)-eigenbases and the SOV measure.

States are labelled by ``h`` in {0,1}^N.  Arrays are indexed by
``index(h) = sum_a h_a 2**(a-1)`` (site 1 is the least significant bit);
this is the usual 1-based label minus one.
"""

from dataclasses import dataclass
from functools import cached_property
import itertools

import numpy as np

from . import numkit
from .algebra import Model, ParameterError, HALF_IPI


def h_vectors(n):
    """All h in {0,1}^N ordered by index(h)."""
    return [tuple((i >> a) & 1 for a in range(n)) for i in range(2 ** n)]


def h_index(h):
    return sum(int(b) << a for a, b in enumerate(h))


def sign_of(eps):
    if eps not in ("-", "+"):
        raise ValueError(f"eps must be '-' or '+', got {eps!r}")
    return -1 if eps == "-" else +1


# ---------------------------------------------------------------------------
# closed-form eigenvalues and measure
# ---------------------------------------------------------------------------

def a_h(scalars, h, lam):
    xi = scalars.xi
    eta = scalars.eta
    hh = np.asarray(h, dtype=float)
    return complex(np.prod(np.sinh(lam - xi - (hh - 0.5) * eta)))


def b_eigenvalue(model, eps, h, lam):
    """Eigenvalue of B_eps(lam) on the h-th SOV state, sinh-product form."""
    p = model.params
    s = model.scalars
    sg = sign_of(eps)
    kap, tau, zeta = ((p.kappa_minus, p.tau_minus, p.zeta_minus) if eps == "-"
                      else (p.kappa_plus, p.tau_plus, p.zeta_plus))
    pref = (-1) ** p.n_sites * kap * np.exp(tau) * np.sinh(2 * lam + sg * p.eta) / np.sinh(zeta)
    return complex(pref * a_h(s, h, lam) * a_h(s, h, -lam))


def b_eigenvalue_cosh_form(model, eps, h, lam):
    """Equivalent product over (cosh 2 lam - eta_a^(h_a))."""
    p = model.params
    s = model.scalars
    sg = sign_of(eps)
    n = p.n_sites
    kap, tau, zeta = ((p.kappa_minus, p.tau_minus, p.zeta_minus) if eps == "-"
                      else (p.kappa_plus, p.tau_plus, p.zeta_plus))
    nodes = np.array([s.node(a, h[a]) for a in range(n)])
    pref = kap * np.exp(tau) * np.sinh(2 * lam + sg * p.eta) / (2 ** n * np.sinh(zeta))
    return complex(pref * np.prod(np.cosh(2 * lam) - nodes))


def measure(model, h):
    """prod_{b<a} (eta_a^(h_a) - eta_b^(h_b))."""
    s = model.scalars
    return numkit.vandermonde([s.node(a, h[a]) for a in range(len(h))])


# ---------------------------------------------------------------------------
# basis construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SovBasis:
    """Dense left (rows) and right (columns) B_eps-eigenstates."""

    model: Model
    eps: str
    left: np.ndarray      # shape (2^N, D): row index(h) is <eps,h|
    right: np.ndarray     # shape (D, 2^N): column index(h) is |eps,h>
    norm: complex         # the gauge constant n_eps
    k_sites: tuple        # k_n^(eps)

    @property
    def n(self):
        return self.model.n

    @cached_property
    def measures(self):
        return np.array([measure(self.model, h) for h in h_vectors(self.n)])

    def left_state(self, h):
        return self.left[h_index(h)]

    def right_state(self, h):
        return self.right[:, h_index(h)]

    def point(self, a, h):
        return self.model.scalars.zeta_point(a, h)


def build_basis(model, eps):
    """Construct the 2^N left and right B_eps(lambda)-eigenstates of ``model``."""
    p = model.params
    p.validate()
    if p.case is not None and p.case != ("minus" if eps == "-" else "plus"):
        raise ParameterError(f"basis eps={eps} needs case {'minus' if eps == '-' else 'plus'}, got {p.case}")
    if abs(p.kappa_minus if eps == "-" else p.kappa_plus) < 1e-12:
        raise ParameterError(f"b{eps}(lambda) vanishes: kappa on the general side is 0")
    s = model.scalars
    n = p.n_sites
    eta = model.dtype(p.eta)
    up = model.ref_up()
    down = model.ref_down()
    sg = sign_of(eps)
    k_sites = tuple(s.k_site(sg, a) for a in range(n))

    if eps == "-":
        # left: <0| prod_n (A_-(eta/2 - xi_n)/sA_-(eta/2 - xi_n))^{h_n}
        left_ops = []
        right_ops = []
        for a in range(n):
            x = model.dtype(p.xi[a])
            den = s.A_minus(complex(eta / 2 - x))
            left_ops.append(model.generator("A", "-", eta / 2 - x) / den)
            right_ops.append(model.generator("D", "-", x + eta / 2) / (k_sites[a] * den))
        left_power = lambda h, a: h[a]           # noqa: E731
        right_power = lambda h, a: 1 - h[a]      # noqa: E731
        norm_nodes_h = 1
    else:
        left_ops = []
        right_ops = []
        for a in range(n):
            x = model.dtype(p.xi[a])
            z1 = x + eta / 2
            z0 = x - eta / 2
            den = s.D_plus(complex(-z1))
            left_ops.append(model.generator("D", "+", -z1) / den)
            right_ops.append(model.generator("A", "+", z0) / (k_sites[a] * den))
        left_power = lambda h, a: 1 - h[a]       # noqa: E731
        right_power = lambda h, a: h[a]          # noqa: E731
        norm_nodes_h = 0

    hs = h_vectors(n)
    left = np.empty((2 ** n, model.dim), dtype=model.dtype)
    right = np.empty((model.dim, 2 ** n), dtype=model.dtype)
    for h in hs:
        v = up.copy()
        for a in range(n):
            if left_power(h, a):
                v = v @ left_ops[a]
        left[h_index(h)] = v
        w = down.copy()
        for a in reversed(range(n)):
            if right_power(h, a):
                w = right_ops[a] @ w
        right[:, h_index(h)] = w

    # gauge: <0| prod(ops) |0bar> = X fixes n^2 = X * V(eta^(h*)), with h* the
    # label whose left state is the full product
    h_star = tuple([1] * n) if eps == "-" else tuple([0] * n)
    x_val = complex(left[h_index(h_star)] @ down)
    if abs(x_val) < 1e-300:
        raise ParameterError("vanishing gauge normalisation <0|prod(...)|0bar>")
    norm2 = x_val * numkit.vandermonde([s.node(a, norm_nodes_h) for a in range(n)])
    norm = complex(np.sqrt(norm2))
    if norm == 0:
        raise ParameterError("vanishing gauge normalisation")
    left /= norm
    right /= norm
    return SovBasis(model=model, eps=eps, left=left, right=right, norm=norm, k_sites=k_sites)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def eigen_residuals(basis, lams):
    """Max relative residual of the left and right B-eigen relations at ``lams``."""
    model = basis.model
    worst = 0.0
    for lam in lams:
        b = model.generator("B", basis.eps, lam)
        for h in h_vectors(basis.n):
            ev = b_eigenvalue(model, basis.eps, h, lam)
            lv = basis.left_state(h)
            rv = basis.right_state(h)
            worst = max(worst,
                        numkit.rel_residual(lv @ b, ev * lv),
                        numkit.rel_residual(b @ rv, ev * rv))
    return worst


def pairing_matrix(basis):
    """Matrix of <eps,h|eps,h'> (rows: left label, columns: right label)."""
    return basis.left @ basis.right


def diagonal_pairing_residual(basis):
    """Relative deviation of <h|h'> from delta_{hh'}/measure(h)."""
    g = pairing_matrix(basis)
    target = np.diag(1.0 / basis.measures)
    return numkit.rel_residual(g, target)


def identity_resolution_residual(basis):
    """max |sum_h measure(h) |h><h| - Id|."""
    acc = (basis.right * basis.measures[None, :]) @ basis.left
    return float(np.max(np.abs(acc - np.eye(acc.shape[0]))))


def change_of_basis_conditioning(basis):
    """Smallest singular value of the column-normalised change-of-basis matrices."""
    out = []
    for m in (basis.left.T, basis.right):
        mm = m / np.linalg.norm(m, axis=0, keepdims=True)
        out.append(float(np.linalg.svd(mm, compute_uv=False)[-1]))
    return min(out)


# ---------------------------------------------------------------------------
# interpolated actions
# ---------------------------------------------------------------------------

def _shifted(h, a, step):
    hh = list(h)
    hh[a] += step
    if hh[a] not in (0, 1):
        return None
    return tuple(hh)


def fixed_values(model, eps):
    """(u0, u1): U_eps(+-eta/2) = u0 Id and U_eps(+-eta/2 + i pi/2) = u1 sigma^z."""
    s = model.scalars
    p = model.params
    u0 = (-1) ** p.n_sites * s.detq_m(0)
    zeta = p.zeta_minus if eps == "-" else p.zeta_plus
    u1 = 1j / np.tanh(zeta) * s.detq_m(HALF_IPI)
    return complex(u0), complex(u1)


def interpolated_action(basis, which, h, lam):
    """Interpolation formula for the action of A_- (left), D_- (right), D_+ (left), A_+ (right).

    ``which`` is one of ``"left"``/``"right"``; the generator is fixed by the
    basis sign.  Returns the state as a dense covector/vector.  Uses the
    2N + 2 point sinh-interpolation through the SOV points and the two
    fixed points where U_eps is known in closed form.
    """
    model = basis.model
    s = model.scalars
    n = model.n
    eps = basis.eps
    eta = model.params.eta
    h = tuple(h)
    u0, u1 = fixed_values(model, eps)
    base = eta / 2 if eps == "-" else -eta / 2
    pts = [s.zeta_point(a, h[a % n]) for a in range(2 * n)] + [base, base + HALF_IPI]
    # value of the generator at the two fixed points (aux diagonal entries)
    gen_is_a = (eps == "-" and which == "left") or (eps == "+" and which == "right")
    fixed_vals = [u0, u1 if gen_is_a else -u1]
    state = basis.left_state if which == "left" else basis.right_state

    def lag(j):
        num = 1.0 + 0j
        for b, zb in enumerate(pts):
            if b != j:
                num *= np.sinh(lam - zb) / np.sinh(pts[j] - zb)
        return num

    out = fixed_vals[0] * lag(2 * n) * state(h) + fixed_vals[1] * lag(2 * n + 1) * state(h)
    for a, target, coef in _shift_terms(model, eps, which, h):
        out = out + lag(a) * coef * state(target)
    return out


def _shift_terms(model, eps, which, h):
    """(a, shifted h, coefficient) for the 2N interpolation nodes.

    Shifts leaving {0,1} must carry a vanishing coefficient (zeros of the
    sans-A / sans-D functions); that is checked, then the term is dropped.
    """
    n = model.n
    coefs = [node_coefficient(model, eps, which, a, h[a % n]) for a in range(2 * n)]
    scale = max(abs(c) for c in coefs)
    terms = []
    for a, coef in enumerate(coefs):
        site = a % n
        phi = 1 if a < n else -1
        # minus: T_a^{-phi}; plus: T_a^{+phi}
        step = -phi if eps == "-" else phi
        target = _shifted(h, site, step)
        if target is None:
            if abs(coef) > 1e-9 * scale:
                raise ArithmeticError(f"nonzero coefficient on an out-of-range shift (a={a + 1}, h={h})")
            continue
        terms.append((a, target, coef))
    return terms


def node_coefficient(model, eps, which, a, h_site):
    """Coefficient function at the SOV point zeta_a^(h): sans-A_-, sans-D_-, sans-D_+ or sans-A_+."""
    s = model.scalars
    n = model.n
    z = s.zeta_point(a, h_site)
    site = a % n
    phi = 1 if a < n else -1
    x = s.xi[site]
    if eps == "-":
        if which == "left":
            return s.A_minus(z)
        return s.k_site(-1, site) ** phi * s.A_minus(z - 2 * phi * x)
    if which == "left":
        return s.D_plus(z)
    return s.k_site(+1, site) ** phi * s.D_plus(z - 2 * phi * x)


def interpolated_action_cosh_form(basis, which, h, lam):
    """Same action written with cosh 2 lam products (sum over a = 1..2N)."""
    model = basis.model
    s = model.scalars
    n = model.n
    eps = basis.eps
    eta = model.params.eta
    sg = sign_of(eps)
    h = tuple(h)
    u0, u1 = fixed_values(model, eps)
    gen_is_a = (eps == "-" and which == "left") or (eps == "+" and which == "right")
    state = basis.left_state if which == "left" else basis.right_state
    c2 = np.cosh(2 * lam)
    nodes = [np.cosh(2 * s.zeta_point(b, h[b])) for b in range(n)]
    out = np.zeros_like(state(h))
    for a, target, coef in _shift_terms(model, eps, which, h):
        site = a % n
        za = s.zeta_point(a, h[site])
        w = (np.sinh(2 * lam + sg * eta) * np.sinh(lam + za)
             / (np.sinh(2 * za + sg * eta) * np.sinh(2 * za)))
        for b in range(n):
            if b != site:
                w *= (c2 - nodes[b]) / (np.cosh(2 * za) - nodes[b])
        out = out + w * coef * state(target)
    shift = sg * eta / 2
    p0 = np.prod([(c2 - nb) / (np.cosh(eta) - nb) for nb in nodes])
    p1 = np.prod([(c2 - nb) / (np.cosh(eta) + nb) for nb in nodes])
    # u1 = i coth(zeta) det_q M(i pi/2); the fixed-point term in cosh form
    v1 = u1 if gen_is_a else -u1
    out = out + u0 * np.cosh(lam + shift) * p0 * state(h)
    out = out + (-1j) * (-1) ** n * v1 * np.sinh(lam + shift) * p1 * state(h)
    return out


def direct_action(basis, which, h, lam):
    gen = {("-", "left"): "A", ("-", "right"): "D", ("+", "left"): "D", ("+", "right"): "A"}[(basis.eps, which)]
    op = basis.model.generator(gen, basis.eps, lam)
    if which == "left":
        return basis.left_state(h) @ op
    return op @ basis.right_state(h)


def all_h(n):
    return itertools.product((0, 1), repeat=n)


def interpolation_residual(basis, lams):
    """Max relative deviation of both interpolation forms from the direct action."""
    worst = 0.0
    for lam in lams:
        for which in ("left", "right"):
            for h in h_vectors(basis.n):
                direct = direct_action(basis, which, h, lam)
                for form in (interpolated_action, interpolated_action_cosh_form):
                    worst = max(worst, numkit.rel_residual(form(basis, which, h, lam), direct))
    return worst


def basis_residuals(basis, lams):
    """All SOV-basis checks: B-eigen relations, pairings, identity resolution, interpolation."""
    return {
        f"B_eigen{basis.eps}": eigen_residuals(basis, lams),
        f"pairing_diagonal{basis.eps}": diagonal_pairing_residual(basis),
        f"identity_resolution{basis.eps}": identity_resolution_residual(basis),
        f"interpolation{basis.eps}": interpolation_residual(basis, lams),
    }
