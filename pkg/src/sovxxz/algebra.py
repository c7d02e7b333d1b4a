"""Operators of the open spin-1/2 XXZ chain and its reflection algebra.

Conventions
-----------
* Local basis on every site: index 0 is spin up (sigma^z = +1), index 1 is
  spin down.  Site 1 is the leftmost (most significant) Kronecker factor.
* An operator acting on auxiliary space 0 and the chain is stored as an
  array of shape ``(2, 2, D, D)`` with ``D = 2**N``; entry ``[i, j]`` is the
  chain operator sitting in row ``i``, column ``j`` of the auxiliary 2x2
  matrix.  Products of such objects multiply the auxiliary matrices while
  keeping operator order.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SP = np.array([[0, 1], [0, 0]], dtype=complex)
SM = np.array([[0, 0], [1, 0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

CASES = ("minus", "plus")

ESOV_TOL = 1e-8
HALF_IPI = 0.5j * np.pi


class ParameterError(ValueError):
    """Model parameters violate a structural requirement."""


def _c(x):
    return complex(x)


@dataclass(frozen=True)
class ModelParams:
    """Representation data of the chain.

    ``case`` selects the boundary class: ``"minus"`` keeps ``K_-`` general
    and forces ``b_+ = 0`` (``K_+`` diagonal, or lower triangular through
    ``tri_c``); ``"plus"`` is the mirror image.  ``None`` leaves both
    boundary matrices general, which is enough for the pure algebra checks.
    """

    n_sites: int
    eta: complex
    zeta_minus: complex
    kappa_minus: complex
    tau_minus: complex
    zeta_plus: complex
    kappa_plus: complex
    tau_plus: complex
    xi: tuple
    case: str | None = None
    tri_c: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(complex(x) for x in self.xi))
        for name in ("eta", "zeta_minus", "kappa_minus", "tau_minus",
                     "zeta_plus", "kappa_plus", "tau_plus"):
            object.__setattr__(self, name, _c(getattr(self, name)))
        if self.tri_c is not None:
            object.__setattr__(self, "tri_c", _c(self.tri_c))

    @property
    def dim(self):
        return 2 ** self.n_sites

    def replace(self, **kw):
        data = dict(self.__dict__)
        data.update(kw)
        return ModelParams(**data)

    def basic_check(self):
        """Finite values, N >= 1, matching xi length, nonzero sinh(zeta)."""
        if self.n_sites < 1:
            raise ParameterError("n_sites must be >= 1")
        if len(self.xi) != self.n_sites:
            raise ParameterError(f"xi has {len(self.xi)} entries, expected {self.n_sites}")
        vals = [self.eta, self.zeta_minus, self.kappa_minus, self.tau_minus,
                self.zeta_plus, self.kappa_plus, self.tau_plus, *self.xi]
        if not np.all(np.isfinite(vals)):
            raise ParameterError("parameters must be finite")
        if self.case not in (None, *CASES):
            raise ParameterError(f"unknown case {self.case!r}")
        for side, z in (("minus", self.zeta_minus), ("plus", self.zeta_plus)):
            if abs(np.sinh(z)) < ESOV_TOL:
                raise ParameterError(f"sinh(zeta_{side}) vanishes")

    def esov_violations(self, tol=ESOV_TOL):
        """List of (a, b, r) (1-based sites) with xi_a = xi_b + r*eta."""
        bad = []
        for a in range(self.n_sites):
            for b in range(self.n_sites):
                if a == b:
                    continue
                for r in (-1, 0, 1):
                    if abs(self.xi[a] - self.xi[b] - r * self.eta) < tol:
                        bad.append((a + 1, b + 1, r))
        return bad

    def validate(self, tol=ESOV_TOL):
        """Full guard set required before any separation-of-variables step."""
        self.basic_check()
        bad = self.esov_violations(tol)
        if bad:
            a, b, r = bad[0]
            raise ParameterError(f"E-SOV condition violated: xi_{a} = xi_{b} + ({r})*eta "
                                 f"(pair a={a}, b={b}, r={r})")
        eta = self.eta
        for a, x in enumerate(self.xi, start=1):
            if abs(np.sinh(2 * x)) < tol:
                raise ParameterError(f"sinh(2 xi_{a}) vanishes")
            for m in (1, 2):
                for s in (1, -1):
                    if abs(np.sinh(2 * x + s * m * eta)) < tol:
                        raise ParameterError(f"sinh(2 xi_{a} {'+' if s > 0 else '-'} {m} eta) vanishes")
        # Vandermonde nodes cosh 2(xi_a + (h - 1/2) eta) must be distinct
        nodes = [np.cosh(2 * (x + (h - 0.5) * eta)) for x in self.xi for h in (0, 1)]
        for i in range(len(nodes)):
            for j in range(i):
                if abs(nodes[i] - nodes[j]) < tol * max(1.0, abs(nodes[i])):
                    raise ParameterError("SOV nodes eta_a^(h) are not pairwise distinct")
        if self.case is not None:
            general_kappa = self.kappa_minus if self.case == "minus" else self.kappa_plus
            eps = "-" if self.case == "minus" else "+"
            if abs(general_kappa) < tol:
                raise ParameterError(f"b{eps}(lambda) vanishes: kappa on the general side is 0")
        return self


# ---------------------------------------------------------------------------
# local operators and aux-space helpers
# ---------------------------------------------------------------------------

def embed(op, site, n_sites, dtype=complex):
    """2x2 operator ``op`` acting on ``site`` (1-based) of an N-site chain."""
    left = np.eye(2 ** (site - 1), dtype=dtype)
    right = np.eye(2 ** (n_sites - site), dtype=dtype)
    return np.kron(np.kron(left, op), right)


def pauli(kind, site, n_sites):
    ops = {"x": SX, "y": SY, "z": SZ, "+": SP, "-": SM, "id": ID2}
    return embed(ops[kind], site, n_sites)


def sigma_minus_string(kind, n, n_sites):
    """sigma^-_n ... sigma^-_N (``kind="tail"``) or sigma^-_1 ... sigma^-_n (``"head"``)."""
    sites = range(n, n_sites + 1) if kind == "tail" else range(1, n + 1)
    out = np.eye(2 ** n_sites, dtype=complex)
    for s in sites:
        out = out @ embed(SM, s, n_sites)
    return out


def aux_mul(x, y):
    """Product of two aux-operators (or a 2x2 scalar matrix with one)."""
    if x.ndim == 2:
        return np.einsum("ik,kjab->ijab", x, y)
    if y.ndim == 2:
        return np.einsum("ikab,kj->ijab", x, y)
    return np.einsum("ikab,kjbc->ijac", x, y)


def aux_transpose(x):
    return np.swapaxes(x, 0, 1).copy()


def aux_trace(x):
    return x[0, 0] + x[1, 1]


def aux_to_dense(x):
    """Flatten an aux-operator to a (2D, 2D) matrix, aux index most significant."""
    d = x.shape[-1]
    return x.transpose(0, 2, 1, 3).reshape(2 * d, 2 * d)


def dense_to_aux(m):
    d = m.shape[0] // 2
    return m.reshape(2, d, 2, d).transpose(0, 2, 1, 3).copy()


# ---------------------------------------------------------------------------
# R and K matrices
# ---------------------------------------------------------------------------

def r_matrix(lam, eta, dtype=complex):
    """Six-vertex trigonometric R-matrix on C^2 (x) C^2."""
    lam, eta = dtype(lam), dtype(eta)
    a = np.sinh(lam + eta)
    b = np.sinh(lam)
    c = np.sinh(eta)
    return np.array([[a, 0, 0, 0],
                     [0, b, c, 0],
                     [0, c, b, 0],
                     [0, 0, 0, a]], dtype=dtype)


def permutation4():
    p = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            p[2 * i + j, 2 * j + i] = 1.0
    return p


def k_general(lam, zeta, kappa, tau, dtype=complex):
    """Unshifted general scalar solution K(lambda; zeta, kappa, tau)."""
    lam, zeta, kappa, tau = (dtype(x) for x in (lam, zeta, kappa, tau))
    s2 = np.sinh(2 * lam)
    return np.array([[np.sinh(lam + zeta), kappa * np.exp(tau) * s2],
                     [kappa * np.exp(-tau) * s2, np.sinh(zeta - lam)]],
                    dtype=dtype) / np.sinh(zeta)


def k_matrix(params, side, lam, dtype=complex):
    """K_-(lambda) = K(lambda - eta/2; ...) or K_+(lambda) = K(lambda + eta/2; ...).

    On the constrained side of a boundary class the upper-right entry is 0
    and the lower-left one is ``tri_c * sinh(2 lambda +- eta)`` (0 when
    ``tri_c`` is None).
    """
    eta = params.eta
    if side == "-":
        k = k_general(lam - eta / 2, params.zeta_minus, params.kappa_minus, params.tau_minus, dtype)
        constrained = params.case == "plus"
        arg = 2 * lam - eta
    elif side == "+":
        k = k_general(lam + eta / 2, params.zeta_plus, params.kappa_plus, params.tau_plus, dtype)
        constrained = params.case == "minus"
        arg = 2 * lam + eta
    else:
        raise ValueError(f"side must be '+' or '-', got {side!r}")
    if constrained:
        k[0, 1] = 0.0
        k[1, 0] = 0.0 if params.tri_c is None else dtype(params.tri_c) * np.sinh(dtype(arg))
    return k


def alpha_beta(zeta, kappa):
    """A pair (alpha, beta) with sinh(a)cosh(b) = sinh(zeta)/(2 kappa), cosh(a)sinh(b) = cosh(zeta)/(2 kappa).

    Principal arcsinh branches for alpha + beta and alpha - beta.
    """
    zeta = complex(zeta)
    kappa = complex(kappa)
    if kappa == 0 or not np.isfinite(kappa):
        raise ParameterError("alpha/beta need kappa != 0")
    s = np.arcsinh(np.exp(zeta) / (2 * kappa))
    t = np.arcsinh(-np.exp(-zeta) / (2 * kappa))
    alpha = 0.5 * (s + t)
    beta = 0.5 * (s - t)
    if abs(np.sinh(alpha) * np.cosh(beta)) < 1e-14:
        raise ParameterError("degenerate alpha/beta (g normalisation vanishes)")
    return complex(alpha), complex(beta)


def reflection_residual(u_of, lam, mu, eta, shift=0.0):
    """Relative residual of R(l-m) U1(l) R(l+m+shift) U2(m) = U2(m) R(l+m+shift) U1(l) R(l-m).

    The boundary monodromies built from the shifted K_-(l) = K(l - eta/2)
    satisfy it with ``shift = -eta``.
    """
    u1 = u_of(lam)
    u2 = u_of(mu)
    d = u1.shape[-1]
    eye_d = np.eye(d, dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    # space ordering (aux1, aux2, chain)
    big_u1 = np.einsum("ijab,kl->ikajlb", u1, eye2).reshape(4 * d, 4 * d)
    big_u2 = np.einsum("klab,ij->ikajlb", u2, eye2).reshape(4 * d, 4 * d)
    r_m = np.kron(r_matrix(lam - mu, eta), eye_d)
    r_p = np.kron(r_matrix(lam + mu + shift, eta), eye_d)
    lhs = r_m @ big_u1 @ r_p @ big_u2
    rhs = big_u2 @ r_p @ big_u1 @ r_m
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), 1e-300))


def _two_aux(u1, u2):
    """(U_1, U_2) as (4D, 4D) matrices on aux1 (x) aux2 (x) chain."""
    d = u1.shape[-1]
    eye2 = np.eye(2, dtype=complex)
    big_u1 = np.einsum("ijab,kl->ikajlb", u1, eye2).reshape(4 * d, 4 * d)
    big_u2 = np.einsum("klab,ij->ikajlb", u2, eye2).reshape(4 * d, 4 * d)
    return big_u1, big_u2


def sklyanin_determinant(u_of, lam, eta):
    """tr_12 [P^-_12 U_1(lam + eta/2) R_12(2 lam - eta) U_2(lam - eta/2)], P^- = (1 - P)/2.

    Central element of the reflection algebra generated by ``u_of``.
    """
    u1 = u_of(lam + eta / 2)
    u2 = u_of(lam - eta / 2)
    d = u1.shape[-1]
    eye_d = np.eye(d, dtype=complex)
    big_u1, big_u2 = _two_aux(u1, u2)
    p_minus = (np.eye(4) - permutation4()) / 2
    x = np.kron(p_minus, eye_d) @ big_u1 @ np.kron(r_matrix(2 * lam - eta, eta), eye_d) @ big_u2
    return np.einsum("iaib->ab", x.reshape(4, d, 4, d))


# ---------------------------------------------------------------------------
# scalar functions
# ---------------------------------------------------------------------------

class Scalars:
    """Closed-form scalar functions attached to a parameter set."""

    def __init__(self, params):
        self.p = params
        self.eta = params.eta
        self.xi = np.array(params.xi, dtype=complex)
        self.n = params.n_sites
        case = params.case
        # general side uses the kappa-dependent g, a constrained side the diagonal one
        self._g_minus_diag = case == "plus" or params.kappa_minus == 0
        self._g_plus_diag = case == "minus" or params.kappa_plus == 0
        self.ab_minus = None if self._g_minus_diag else alpha_beta(params.zeta_minus, params.kappa_minus)
        self.ab_plus = None if self._g_plus_diag else alpha_beta(params.zeta_plus, params.kappa_plus)

    # bulk
    def a(self, lam):
        return complex(np.prod(np.sinh(lam - self.xi + self.eta / 2)))

    def d(self, lam):
        return self.a(lam - self.eta)

    def detq_m(self, lam):
        return self.a(lam + self.eta / 2) * self.d(lam - self.eta / 2)

    # boundary g functions
    def g_minus(self, lam):
        eta = self.eta
        z = self.p.zeta_minus
        if self._g_minus_diag:
            return complex(np.sinh(lam + z - eta / 2) / np.sinh(z))
        al, be = self.ab_minus
        return complex(np.sinh(lam + al - eta / 2) * np.cosh(lam + be - eta / 2)
                       / (np.sinh(al) * np.cosh(be)))

    def g_plus(self, lam):
        eta = self.eta
        z = self.p.zeta_plus
        if self._g_plus_diag:
            return complex(np.sinh(lam + z + eta / 2) / np.sinh(z))
        al, be = self.ab_plus
        return complex(np.sinh(lam + al + eta / 2) * np.cosh(lam + be + eta / 2)
                       / (np.sinh(al) * np.cosh(be)))

    def A_minus(self, lam):
        """sans-serif A_-(lambda) = g_-(lambda) a(lambda) d(-lambda)."""
        return self.g_minus(lam) * self.a(lam) * self.d(-lam)

    def D_plus(self, lam):
        """sans-serif D_+(lambda) = g_+(lambda) a(-lambda) d(lambda)."""
        return self.g_plus(lam) * self.a(-lam) * self.d(lam)

    # sans-serif diagonal-part coefficients
    def sa(self, sign, lam):
        eta = self.eta
        z = self.p.zeta_minus if sign < 0 else self.p.zeta_plus
        return complex(np.sinh(2 * lam + sign * eta) * np.sinh(lam + z - sign * eta / 2)
                       / (np.sinh(2 * lam) * np.sinh(z)))

    def sd(self, sign, lam):
        eta = self.eta
        z = self.p.zeta_minus if sign < 0 else self.p.zeta_plus
        return complex(np.sinh(2 * lam + sign * eta) * np.sinh(z - lam + sign * eta / 2)
                       / (np.sinh(2 * lam) * np.sinh(z)))

    def abar(self, sign, lam):
        """sans-a with the corresponding zeta set to i pi/2."""
        eta = self.eta
        return complex(np.cosh(lam - sign * eta / 2) * np.sinh(2 * lam + sign * eta) / np.sinh(2 * lam))

    # coefficients of the discrete Baxter systems
    def coef_a_minus(self, lam):
        return self.sa(+1, lam) * self.A_minus(lam)

    def coef_d_plus(self, lam):
        return self.sd(-1, lam) * self.D_plus(lam)

    def coef_a_minus_bar(self, lam):
        return self.abar(+1, lam) * self.A_minus(lam)

    def coef_d_plus_bar(self, lam):
        return self.abar(-1, lam) * self.D_plus(lam)

    def detq_ubar_minus(self, lam):
        eta = self.eta
        return self.coef_a_minus_bar(lam + eta / 2) * self.coef_a_minus_bar(-lam + eta / 2)

    def detq_ubar_plus(self, lam):
        eta = self.eta
        return self.coef_d_plus_bar(-lam - eta / 2) * self.coef_d_plus_bar(lam - eta / 2)

    # quantum determinants
    def detq_k_minus(self, lam):
        eta = self.eta
        return np.sinh(2 * lam - 2 * eta) * self.g_minus(lam + eta / 2) * self.g_minus(-lam + eta / 2)

    def detq_k_plus(self, lam):
        eta = self.eta
        return np.sinh(2 * lam + 2 * eta) * self.g_plus(lam - eta / 2) * self.g_plus(-lam - eta / 2)

    def detq_k_minus_direct(self, lam):
        z = self.p.zeta_minus
        kap = self.p.kappa_minus if not self._g_minus_diag else 0.0
        return complex(-np.sinh(2 * lam - 2 * self.eta) / np.sinh(z) ** 2
                       * (np.sinh(lam + z) * np.sinh(lam - z) + kap ** 2 * np.sinh(2 * lam) ** 2))

    def detq_k_plus_direct(self, lam):
        z = self.p.zeta_plus
        kap = self.p.kappa_plus if not self._g_plus_diag else 0.0
        return complex(-np.sinh(2 * lam + 2 * self.eta) / np.sinh(z) ** 2
                       * (np.sinh(lam + z) * np.sinh(lam - z) + kap ** 2 * np.sinh(2 * lam) ** 2))

    def detq_u_minus(self, lam):
        eta = self.eta
        return np.sinh(2 * lam - 2 * eta) * self.A_minus(lam + eta / 2) * self.A_minus(-lam + eta / 2)

    def detq_u_plus(self, lam):
        eta = self.eta
        return np.sinh(2 * lam + 2 * eta) * self.D_plus(lam - eta / 2) * self.D_plus(-lam - eta / 2)

    # site constants
    def k_site(self, sign, a):
        x = self.xi[a]
        eta = self.eta
        km = np.sinh(2 * x + eta) / np.sinh(2 * x - eta)
        return complex(km if sign < 0 else 1.0 / km)

    def alpha_site(self, sign, a):
        x = self.xi[a]
        eta = self.eta
        if sign < 0:
            return complex(np.sinh(2 * x + 2 * eta) / (self.k_site(-1, a) * np.sinh(2 * x - 2 * eta)))
        return complex(np.sinh(2 * x - 2 * eta) / (self.k_site(+1, a) * np.sinh(2 * x + 2 * eta)))

    # SOV points
    def zeta_point(self, a, h):
        """zeta_a^(h) for a in 0..2N-1 (0-based; a >= N carries the minus sign)."""
        n = self.n
        if a < n:
            return complex(self.xi[a] + (h - 0.5) * self.eta)
        return complex(-(self.xi[a - n] + (h - 0.5) * self.eta))

    def node(self, a, h):
        """eta_a^(h) = cosh 2(xi_a + (h - 1/2) eta), a 0-based site."""
        return complex(np.cosh(2 * (self.xi[a] + (h - 0.5) * self.eta)))


# ---------------------------------------------------------------------------
# operator families
# ---------------------------------------------------------------------------

def _key(lam):
    lam = complex(lam)
    return (lam.real, lam.imag)


@dataclass
class Model:
    """Lazy, memoised operator families for one parameter set.

    ``dtype`` selects the working precision of the dense operators
    (``np.clongdouble`` gives an extended-precision reference); the closed-form
    scalar functions stay in double precision.
    """

    params: ModelParams
    dtype: type = complex
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.params.basic_check()

    @property
    def n(self):
        return self.params.n_sites

    @property
    def dim(self):
        return self.params.dim

    @cached_property
    def scalars(self):
        return Scalars(self.params)

    def _memo(self, tag, lam, build):
        key = (tag, *_key(lam))
        out = self._cache.get(key)
        if out is None:
            out = build(lam if self.dtype is not complex else complex(lam))
            self._cache[key] = out
        return out

    def clear_cache(self):
        self._cache.clear()

    # bulk
    def lax(self, lam, site):
        """R_{0n}(lam - xi_n - eta/2) as an aux-operator."""
        r = r_matrix(lam - self.params.xi[site - 1] - self.params.eta / 2, self.params.eta, self.dtype)
        out = np.empty((2, 2, self.dim, self.dim), dtype=self.dtype)
        for i in range(2):
            for j in range(2):
                out[i, j] = embed(r[2 * i:2 * i + 2, 2 * j:2 * j + 2], site, self.n, self.dtype)
        return out

    def monodromy(self, lam):
        """M_0(lam) = R_0N ... R_01."""
        def build(lam):
            m = self.lax(lam, self.n)
            for site in range(self.n - 1, 0, -1):
                m = aux_mul(m, self.lax(lam, site))
            return m
        return self._memo("M", lam, build)

    def monodromy_hat(self, lam):
        """(-1)^N sigma^y M^{t0}(-lam) sigma^y."""
        def build(lam):
            mt = aux_transpose(self.monodromy(-lam))
            return (-1) ** self.n * aux_mul(aux_mul(SY, mt), SY)
        return self._memo("Mhat", lam, build)

    def bulk_transfer(self, lam):
        m = self.monodromy(lam)
        return m[0, 0] + m[1, 1]

    # boundary
    def k(self, side, lam):
        return k_matrix(self.params, side, lam, self.dtype)

    def u_minus(self, lam):
        def build(lam):
            return aux_mul(aux_mul(self.monodromy(lam), self.k("-", lam)), self.monodromy_hat(lam))
        return self._memo("U-", lam, build)

    def u_plus_t(self, lam):
        """U_+^{t0}(lam) = M^{t0} K_+^{t0} Mhat^{t0}, multiplied in that order."""
        def build(lam):
            mt = aux_transpose(self.monodromy(lam))
            kt = self.k("+", lam).T
            mht = aux_transpose(self.monodromy_hat(lam))
            return aux_mul(aux_mul(mt, kt), mht)
        return self._memo("U+t", lam, build)

    def u_plus(self, lam):
        return aux_transpose(self.u_plus_t(lam))

    def generator(self, name, eps, lam):
        """A/B/C/D with sign ``eps`` in {'-', '+'} at ``lam``."""
        if eps == "-":
            u = self.u_minus(lam)
            idx = {"A": (0, 0), "B": (0, 1), "C": (1, 0), "D": (1, 1)}[name]
        else:
            u = self.u_plus_t(lam)
            idx = {"A": (0, 0), "C": (0, 1), "B": (1, 0), "D": (1, 1)}[name]
        return u[idx]

    def transfer(self, lam):
        """T(lam) = tr_0 K_+(lam) U_-(lam)."""
        def build(lam):
            return aux_trace(aux_mul(self.k("+", lam), self.u_minus(lam)))
        return self._memo("T", lam, build)

    def transfer_alt(self, lam):
        """tr_0 K_-(lam) U_+(lam), the second form of the same transfer matrix."""
        return aux_trace(aux_mul(self.k("-", lam), self.u_plus(lam)))

    def transfer_diag_part(self, eps, lam):
        """a_{-eps} A_eps + d_{-eps} D_eps (transfer matrix with the other K diagonal)."""
        k_other = self.k("+" if eps == "-" else "-", lam)
        return k_other[0, 0] * self.generator("A", eps, lam) + k_other[1, 1] * self.generator("D", eps, lam)

    def transfer_split(self, eps, lam):
        """T_diag^(eps) + b_{-eps} C_eps + c_{-eps} B_eps."""
        k_other = self.k("+" if eps == "-" else "-", lam)
        return (self.transfer_diag_part(eps, lam)
                + k_other[0, 1] * self.generator("C", eps, lam)
                + k_other[1, 0] * self.generator("B", eps, lam))

    def transfer_diag_even(self, eps, lam, form="A"):
        """Explicitly even forms of the diagonal part."""
        s = self.scalars
        sign = +1 if eps == "-" else -1  # coefficient index is -eps
        f = s.sa if form == "A" else s.sd
        return (f(sign, lam) * self.generator(form, eps, lam)
                + f(sign, -lam) * self.generator(form, eps, -lam))

    def transfer_bar(self, eps, lam):
        """T-bar_{eps}(lam) = cosh(lam +- eta/2) (A_eps + D_eps)."""
        shift = self.params.eta / 2 if eps == "-" else -self.params.eta / 2
        return np.cosh(lam + shift) * (self.generator("A", eps, lam) + self.generator("D", eps, lam))

    # reference states
    def ref_up(self):
        """<0| : all spins up (as a row vector)."""
        v = np.zeros(self.dim, dtype=self.dtype)
        v[0] = 1.0
        return v

    def ref_down(self):
        """|0bar> : all spins down."""
        v = np.zeros(self.dim, dtype=self.dtype)
        v[-1] = 1.0
        return v


# ---------------------------------------------------------------------------
# Hamiltonian
# ---------------------------------------------------------------------------

def hamiltonian(params):
    """Pauli-string Hamiltonian of the open chain with both boundary fields."""
    n = params.n_sites
    eta = params.eta
    if abs(np.sinh(params.zeta_minus)) < ESOV_TOL or abs(np.sinh(params.zeta_plus)) < ESOV_TOL:
        raise ParameterError("sinh(zeta) vanishes")
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    for i in range(1, n):
        h += pauli("x", i, n) @ pauli("x", i + 1, n)
        h += pauli("y", i, n) @ pauli("y", i + 1, n)
        h += np.cosh(eta) * pauli("z", i, n) @ pauli("z", i + 1, n)
    for site, z, kap, tau in ((1, params.zeta_minus, params.kappa_minus, params.tau_minus),
                              (n, params.zeta_plus, params.kappa_plus, params.tau_plus)):
        field_ = (np.cosh(z) * pauli("z", site, n)
                  + 2 * kap * (np.cosh(tau) * pauli("x", site, n) + 1j * np.sinh(tau) * pauli("y", site, n)))
        h += np.sinh(eta) / np.sinh(z) * field_
    return h


def hamiltonian_from_transfer(params, step=1e-5):
    """2 sinh(eta)^(1-2N) / (tr K_+(eta/2) tr K_-(eta/2)) dT/dlam at eta/2.

    Central finite difference; equals the Hamiltonian up to a multiple of
    the identity in the homogeneous limit xi = 0.
    """
    n = params.n_sites
    eta = params.eta
    model = Model(params)
    d_t = (model.transfer(eta / 2 + step) - model.transfer(eta / 2 - step)) / (2 * step)
    pref = 2 * np.sinh(eta) ** (1 - 2 * n) / (np.trace(k_matrix(params, "+", eta / 2))
                                               * np.trace(k_matrix(params, "-", eta / 2)))
    return pref * d_t


def hamiltonian_link_residual(params, step=1e-5):
    """max |off-identity part of H - (scaled dT/dlam)|."""
    diff = hamiltonian(params) - hamiltonian_from_transfer(params, step)
    return float(np.max(np.abs(off_identity(diff))))


def off_identity(m):
    """Traceless part of a square matrix."""
    d = m.shape[0]
    return m - np.trace(m) / d * np.eye(d)


# ---------------------------------------------------------------------------
# quantum determinants as operators
# ---------------------------------------------------------------------------

def quantum_determinant(model, eps, lam):
    """Dense det_q U_eps(lam); proportional to the identity.

    For U_+ the reflection equation holds for V(u) = U_+^{t0}(-u), whose
    determinant at -lam is -det_q U_+(lam).
    """
    eta = model.params.eta
    if eps == "-":
        return sklyanin_determinant(model.u_minus, lam, eta)
    if eps == "+":
        return -sklyanin_determinant(lambda u: model.u_plus_t(-u), -lam, eta)
    raise ValueError(f"eps must be '-' or '+', got {eps!r}")


def bulk_quantum_determinant(model, lam):
    """A(lam + eta/2) D(lam - eta/2) - B(lam + eta/2) C(lam - eta/2)."""
    eta = model.params.eta
    m1 = model.monodromy(lam + eta / 2)
    m2 = model.monodromy(lam - eta / 2)
    return m1[0, 0] @ m2[1, 1] - m1[0, 1] @ m2[1, 0]


# ---------------------------------------------------------------------------
# Hermitian-conjugation regimes
# ---------------------------------------------------------------------------

REGIMES = ("massless", "massive")


def regime_params(regime, n_sites, rng, scale=0.5):
    """Random parameters in one of the two regimes where T(lam)^dagger = T(lam*).

    massless: eta, zeta purely imaginary, xi real;
    massive:  eta, zeta real, xi purely imaginary.
    In both regimes kappa is real and tau purely imaginary, which makes the
    off-diagonal entries kappa e^{+-tau} complex conjugates of each other.
    Both boundary matrices are left general.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    unit_b, unit_x = (1j, 1.0) if regime == "massless" else (1.0, 1j)

    def draw(unit):
        return unit * scale * (rng.uniform(0.3, 1.0) * rng.choice((-1, 1)))

    eta = draw(unit_b)
    xi = tuple(unit_x * scale * rng.uniform(-1.0, 1.0) for _ in range(n_sites))
    return ModelParams(n_sites, eta,
                       draw(unit_b), draw(1.0), draw(1j),
                       draw(unit_b), draw(1.0), draw(1j), xi)


def hermiticity_residual(model, lam):
    """max |T(lam)^dagger - T(lam*)| relative to max |T(lam)|."""
    t = model.transfer(lam)
    t_star = model.transfer(np.conj(lam))
    return float(np.max(np.abs(t.conj().T - t_star)) / max(np.max(np.abs(t)), 1e-300))


# ---------------------------------------------------------------------------
# residual suite of the algebraic identities
# ---------------------------------------------------------------------------

def yang_baxter_residual(lam, mu, eta):
    """R12(l-m) R13(l) R23(m) = R23(m) R13(l) R12(l-m), relative residual."""
    eye2 = np.eye(2, dtype=complex)
    p23 = np.kron(eye2, permutation4())
    r12 = lambda x: np.kron(r_matrix(x, eta), eye2)         # noqa: E731
    r23 = lambda x: np.kron(eye2, r_matrix(x, eta))         # noqa: E731
    r13 = lambda x: p23 @ r12(x) @ p23                      # noqa: E731
    lhs = r12(lam - mu) @ r13(lam) @ r23(mu)
    rhs = r23(mu) @ r13(lam) @ r12(lam - mu)
    return _rel(lhs, rhs)


def _rel(x, y):
    scale = max(np.max(np.abs(x)), np.max(np.abs(y)), 1e-300)
    return float(np.max(np.abs(x - y)) / scale)


def _rel_scalar_id(m, value):
    """|m - value Id| relative to |value|."""
    return float(np.max(np.abs(m - value * np.eye(m.shape[0]))) / max(abs(value), 1e-300))


def reflection_residuals(model, lam, mu):
    eta = model.params.eta
    return {
        "reflection_minus": reflection_residual(model.u_minus, lam, mu, eta, -eta),
        "reflection_plus": reflection_residual(lambda u: model.u_plus_t(-u), lam, mu, eta, -eta),
    }


def parity_residuals(model, lam):
    """A/D and B/C parity relations of both reflection algebras."""
    eta = model.params.eta
    g = model.generator
    out = {}
    for eps, sg in (("-", 1), ("+", -1)):
        f = np.sinh(2 * lam + sg * eta) / np.sinh(2 * lam - sg * eta)
        for name in ("B", "C"):
            out[f"parity_{name}{eps}"] = _rel(g(name, eps, -lam), -f * g(name, eps, lam))
        d_rhs = (np.sinh(2 * lam - sg * eta) * g("A", eps, -lam)
                 + sg * np.sinh(eta) * g("A", eps, lam)) / np.sinh(2 * lam)
        out[f"parity_AD{eps}"] = _rel(g("D", eps, lam), d_rhs)
    return out


def transfer_residuals(model, lam, mu):
    """Commutativity, evenness and the equivalent constructions of T."""
    t1, t2 = model.transfer(lam), model.transfer(mu)
    norm = np.max(np.abs(t1)) * np.max(np.abs(t2))
    out = {
        "transfer_commute": float(np.max(np.abs(t1 @ t2 - t2 @ t1)) / max(norm, 1e-300)),
        "transfer_even": _rel(model.transfer(-lam), t1),
        "transfer_alt": _rel(model.transfer_alt(lam), t1),
    }
    for eps in ("-", "+"):
        out[f"transfer_split{eps}"] = _rel(model.transfer_split(eps, lam), t1)
    # explicitly even forms of the diagonal part
    for eps in ("-", "+"):
        direct = model.transfer_diag_part(eps, lam)
        for form in ("A", "D"):
            out[f"transfer_even_form_{form}{eps}"] = _rel(model.transfer_diag_even(eps, lam, form), direct)
    return out


def determinant_residuals(model, lam, mu):
    """Quantum determinants: closed forms and centrality."""
    s = model.scalars
    out = {"detq_bulk": _rel_scalar_id(bulk_quantum_determinant(model, lam), s.detq_m(lam))}
    for eps in ("-", "+"):
        dq = quantum_determinant(model, eps, lam)
        ref = s.detq_u_minus(lam) if eps == "-" else s.detq_u_plus(lam)
        out[f"detq_closed{eps}"] = _rel_scalar_id(dq, ref)
        worst = 0.0
        for name in "ABCD":
            x = model.generator(name, eps, mu)
            den = np.max(np.abs(dq)) * np.max(np.abs(x))
            worst = max(worst, float(np.max(np.abs(dq @ x - x @ dq)) / max(den, 1e-300)))
        out[f"detq_central{eps}"] = worst
    return out


def fixed_value_residuals(model):
    """T and U at the special points +-eta/2 and +-(eta/2 - i pi/2).

    At +-eta/2 the values carry (-1)^N: with Mhat = (-1)^N sigma^y M^t sigma^y
    one gets U_-(eta/2) = (-1)^N det_q M(0).
    """
    p = model.params
    s = model.scalars
    eta = p.eta
    d0 = (-1) ** p.n_sites * s.detq_m(0)
    dpi = s.detq_m(HALF_IPI)
    t_half = 2 * np.cosh(eta) * d0
    t_pi = -2 * np.cosh(eta) / (np.tanh(p.zeta_minus) * np.tanh(p.zeta_plus)) * dpi
    out = {
        "T_fixed_half": max(_rel_scalar_id(model.transfer(eta / 2), t_half),
                            _rel_scalar_id(model.transfer(-eta / 2), t_half)),
        "T_fixed_pi": max(_rel_scalar_id(model.transfer(eta / 2 - HALF_IPI), t_pi),
                          _rel_scalar_id(model.transfer(-(eta / 2 - HALF_IPI)), t_pi)),
    }
    eye = np.eye(model.dim)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    for eps, point, zeta in (("-", eta / 2, p.zeta_minus), ("+", -eta / 2, p.zeta_plus)):
        u = model.u_minus(point) if eps == "-" else model.u_plus(point)
        target = np.einsum("ij,ab->ijab", np.eye(2), d0 * eye)
        u_pi = model.u_minus(point + HALF_IPI) if eps == "-" else model.u_plus(point + HALF_IPI)
        target_pi = np.einsum("ij,ab->ijab", sz, 1j / np.tanh(zeta) * dpi * eye)
        out[f"U_fixed{eps}"] = max(_rel(u, target), _rel(u_pi, target_pi))
    return out


def algebra_residuals(model, lam, mu):
    """All algebraic identity residuals at the spectral points (lam, mu)."""
    eta = model.params.eta
    out = {"yang_baxter": yang_baxter_residual(lam, mu, eta)}
    out.update(reflection_residuals(model, lam, mu))
    out.update(parity_residuals(model, lam))
    out.update(transfer_residuals(model, lam, mu))
    out.update(determinant_residuals(model, lam, mu))
    return out


def random_params(n_sites, rng, case=None, triangular=False, scale=0.5, max_tries=100):
    """Seeded random complex parameters that pass every guard.

    Each complex parameter is scale * (normal + i normal).  With ``case``
    set, ``triangular`` adds a random ``tri_c`` on the constrained side.
    """
    def draw():
        return complex(rng.normal() * scale, rng.normal() * scale)

    for _ in range(max_tries):
        p = ModelParams(n_sites, draw(), draw(), draw(), draw(), draw(), draw(), draw(),
                        tuple(draw() for _ in range(n_sites)), case=case,
                        tri_c=draw() if (triangular and case is not None) else None)
        try:
            return p.validate()
        except ParameterError:
            continue
    raise ParameterError(f"no admissible parameter set after {max_tries} draws")
