"""Transfer-matrix spectrum from the discrete SOV system, and its eigenstates.

Every eigenvalue is an even function of the form

    tau(lam) = F(lam) + s(lam) * sum_b c_b cosh(2 lam)^(b-1),
    s(lam)   = sinh(2 lam - eta) sinh(2 lam + eta),

with the fixed part F pinned by the values of T at +-eta/2 and
+-(eta/2 - i pi/2) (and, for a triangular constrained boundary, by the
scalar leading term s(lam) cosh(2 lam)^N coming from c(lam) B(lam)).  The N free coefficients are fixed by the quadratic
system tau(zeta_a^(0)) tau(zeta_a^(1)) = r_a, solved here in the node-value
coordinates t_a = tau(zeta_a^(0)).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import numkit
from .algebra import HALF_IPI, ParameterError
from .separates import SeparateState, assemble
from .sov import build_basis, h_vectors, h_index, sign_of

DEDUPE_TOL = 1e-7
NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 60
RESIDUAL_TOL = 1e-9
HOMOTOPY_ATTEMPTS = 3


class SolverIncomplete(RuntimeError):
    """Fewer than 2^N distinct solutions of the discrete system were found."""

    def __init__(self, message, found=None, diagnostics=None):
        super().__init__(message)
        self.found = found
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# eigenvalue form
# ---------------------------------------------------------------------------

def fixed_part_data(model):
    """(u0, w, top) fixing the non-free part of every eigenvalue function.

    u0 = (-1)^N det_q M(0) and w = det_q M(i pi/2) coth zeta_- coth zeta_+.
    ``top`` multiplies s(lam) cosh(2 lam)^N; it is nonzero only for a
    triangular constrained boundary, where c(lam) B(lam) adds a scalar
    leading term (tri_c times the h-independent top coefficient of b(lam)).
    """
    s = model.scalars
    p = model.params
    u0 = (-1) ** p.n_sites * s.detq_m(0)
    w = s.detq_m(HALF_IPI) / (np.tanh(p.zeta_minus) * np.tanh(p.zeta_plus))
    top = 0j
    if p.tri_c and p.case is not None:
        kap, tau, zeta = ((p.kappa_minus, p.tau_minus, p.zeta_minus) if p.case == "minus"
                          else (p.kappa_plus, p.tau_plus, p.zeta_plus))
        top = p.tri_c * kap * np.exp(tau) / (2 ** p.n_sites * np.sinh(zeta))
    return complex(u0), complex(w), complex(top)


@dataclass(frozen=True)
class TauFunction:
    """tau(lam) = F(lam) + s(lam) sum_b c_b cosh(2 lam)^(b-1)."""

    c: tuple
    eta: complex
    u0: complex        # value fixing tau(eta/2) = 2 cosh(eta) u0
    w: complex         # det_q M(i pi/2) coth zeta_- coth zeta_+
    top: complex = 0j  # coefficient of s(lam) cosh(2 lam)^N (triangular boundary)

    @classmethod
    def from_coefficients(cls, model, c):
        u0, w, top = fixed_part_data(model)
        return cls(c=tuple(complex(x) for x in c), eta=complex(model.params.eta), u0=u0, w=w, top=top)

    def fixed(self, lam):
        e = self.eta
        out = (2 * np.sinh(lam - e / 2) * np.sinh(lam + e / 2) * self.w
               + 2 * np.cosh(lam - e / 2) * np.cosh(lam + e / 2) * self.u0)
        if self.top != 0:
            out = out + self.top * self.envelope(lam) * np.cosh(2 * lam) ** len(self.c)
        return out

    def envelope(self, lam):
        e = self.eta
        return np.sinh(2 * lam - e) * np.sinh(2 * lam + e)

    def __call__(self, lam):
        return tau_eval(self, lam)


def tau_eval(tau, lam):
    poly = numkit.poly_eval(np.asarray(tau.c, dtype=complex), np.cosh(2 * np.asarray(lam, dtype=complex)))
    out = tau.fixed(lam) + tau.envelope(lam) * poly
    return complex(out) if np.ndim(out) == 0 else out


def _node_arrays(model):
    s = model.scalars
    n = model.n
    z0 = np.array([s.zeta_point(a, 0) for a in range(n)])
    z1 = np.array([s.zeta_point(a, 1) for a in range(n)])
    return z0, z1, np.cosh(2 * z0), np.cosh(2 * z1)


def tau_from_values(model, values):
    """TauFunction whose values at zeta_a^(0) (a = 1..N) are ``values``."""
    values = np.asarray(values, dtype=complex)
    z0, _, x0, _ = _node_arrays(model)
    probe = TauFunction.from_coefficients(model, np.zeros(model.n))
    rhs = (values - probe.fixed(z0)) / probe.envelope(z0)
    vmat = x0[:, None] ** np.arange(model.n)[None, :]
    if abs(numkit.vandermonde(x0)) < 1e-300:
        raise ParameterError("singular interpolation: coinciding nodes cosh 2 zeta_a^(0)")
    c = np.linalg.solve(vmat, rhs)
    return TauFunction.from_coefficients(model, c)


# ---------------------------------------------------------------------------
# discrete system
# ---------------------------------------------------------------------------

def baxter_coefficient(model, eps, lam):
    """Coefficient function of the discrete Baxter equations (a-type for eps="-", d-type for eps="+")."""
    s = model.scalars
    return s.coef_a_minus(lam) if eps == "-" else s.coef_d_plus(lam)


def rhs_products(model, eps):
    """r_a, the product of the two nonvanishing Baxter coefficients at site a."""
    z0, z1, _, _ = _node_arrays(model)
    f = lambda z: baxter_coefficient(model, eps, z)  # noqa: E731
    if eps == "-":
        return np.array([f(z1[a]) * f(-z0[a]) for a in range(model.n)])
    return np.array([f(-z1[a]) * f(z0[a]) for a in range(model.n)])


def sov_residuals(model, tau, eps):
    """Relative residuals of tau(zeta_a^(0)) tau(zeta_a^(1)) = r_a."""
    sign_of(eps)
    z0, z1, _, _ = _node_arrays(model)
    r = rhs_products(model, eps)
    lhs = tau_eval(tau, z0) * tau_eval(tau, z1)
    return np.abs(lhs - r) / np.maximum(np.abs(r), 1e-300)


@dataclass(frozen=True)
class _AffineSystem:
    """t * (g + G t) = r, with L(t) = g + G t the values tau(zeta^(1))."""

    g: np.ndarray
    G: np.ndarray
    r: np.ndarray

    @cached_property
    def root_r(self):
        return np.sqrt(self.r.astype(complex))

    def scaled(self):
        """(g_hat, G_hat) in u = t / sqrt(r): u * (g_hat + G_hat u) = 1."""
        rr = self.root_r
        return self.g / rr, self.G * rr[None, :] / rr[:, None]


def affine_system(model, eps):
    z0, z1, x0, x1 = _node_arrays(model)
    n = model.n
    probe = TauFunction.from_coefficients(model, np.zeros(n))
    f0, f1 = probe.fixed(z0), probe.fixed(z1)
    s0, s1 = probe.envelope(z0), probe.envelope(z1)
    # Lagrange basis on the x0 nodes evaluated at the x1 nodes
    lag = np.ones((n, n), dtype=complex)
    for b in range(n):
        for k in range(n):
            if k != b:
                lag[:, b] *= (x1 - x0[k]) / (x0[b] - x0[k])
    G = s1[:, None] * lag / s0[None, :]
    g = f1 - G @ f0
    return _AffineSystem(g=g, G=G, r=rhs_products(model, eps))


def _scaled_residual(gh, Gh, u):
    return u * (gh + Gh @ u) - 1.0


def _scaled_jacobian(gh, Gh, u):
    return np.diag(gh + Gh @ u) + u[:, None] * Gh


def newton(gh, Gh, u, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Newton iteration on the scaled system; returns u or None on failure."""
    u = np.array(u, dtype=complex)
    for _ in range(max_iter):
        f = _scaled_residual(gh, Gh, u)
        try:
            du = np.linalg.solve(_scaled_jacobian(gh, Gh, u), -f)
        except np.linalg.LinAlgError:
            return None
        u = u + du
        if not np.all(np.isfinite(u)):
            return None
        if np.max(np.abs(du)) <= tol * max(1.0, np.max(np.abs(u))):
            break
    if np.max(np.abs(_scaled_residual(gh, Gh, u))) > 1e-10:
        return None
    return u


def _track_path(gh, Gh, gamma, u_start, max_steps=20000):
    """Follow H(u, s) = (1 - s) gamma (u^2 - 1) + s f(u) from s = 0 to 1.

    RK4 predictor on du/ds = -H_u^{-1} H_s, Newton corrector that must
    contract within three steps; step size halves on failure.
    """
    u = np.array(u_start, dtype=complex)
    s = 0.0
    ds = 0.01

    def H(u, s):
        return (1 - s) * gamma * (u * u - 1.0) + s * _scaled_residual(gh, Gh, u)

    def Hu(u, s):
        return (1 - s) * gamma * np.diag(2 * u) + s * _scaled_jacobian(gh, Gh, u)

    def velocity(u, s):
        return np.linalg.solve(Hu(u, s), gamma * (u * u - 1.0) - _scaled_residual(gh, Gh, u))

    for _ in range(max_steps):
        if s >= 1.0:
            break
        ds = min(ds, 1.0 - s)
        try:
            k1 = velocity(u, s)
            k2 = velocity(u + 0.5 * ds * k1, s + 0.5 * ds)
            k3 = velocity(u + 0.5 * ds * k2, s + 0.5 * ds)
            k4 = velocity(u + ds * k3, s + ds)
        except np.linalg.LinAlgError:
            ds *= 0.5
            if ds < 1e-14:
                return None
            continue
        v = u + ds * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        s_new = s + ds
        ok = False
        prev = np.inf
        size = max(1.0, np.max(np.abs(v)))
        for k in range(3):
            try:
                step = np.linalg.solve(Hu(v, s_new), -H(v, s_new))
            except np.linalg.LinAlgError:
                break
            nstep = np.max(np.abs(step))
            if (k == 0 and nstep > 1e-3 * size) or nstep > 0.5 * prev:
                break
            v = v + step
            prev = nstep
            if nstep < 1e-9 * size:
                ok = True
                break
        if ok and np.all(np.isfinite(v)):
            u, s = v, s_new
            ds = min(ds * 1.5, 0.05)
        else:
            ds *= 0.5
            if ds < 1e-14:
                return None
        if np.max(np.abs(u)) > 1e10:
            return None
    if s < 1.0:
        return None
    return newton(gh, Gh, u)


def _seeds_signs(n):
    return [np.array([1.0 if (i >> a) & 1 == 0 else -1.0 for a in range(n)], dtype=complex)
            for i in range(2 ** n)]


def _solve_batch(gh, Gh, starts, workers, homotopy_gamma=None):
    def one(u0):
        if homotopy_gamma is None:
            return newton(gh, Gh, u0)
        return _track_path(gh, Gh, homotopy_gamma, u0)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, starts))
    return [one(u0) for u0 in starts]


def polish_coefficients(model, eps, tau, iters=3):
    """Newton steps on the discrete system directly in the coefficients c.

    Going from node values to c is a Vandermonde solve; polishing in c
    removes the accuracy lost there.
    """
    z0, z1, x0, x1 = _node_arrays(model)
    r = rhs_products(model, eps)
    n = model.n
    powers0 = x0[:, None] ** np.arange(n)[None, :]
    powers1 = x1[:, None] ** np.arange(n)[None, :]
    best = tau
    best_res = np.max(sov_residuals(model, tau, eps))
    for _ in range(iters):
        t0 = tau_eval(tau, z0)
        t1 = tau_eval(tau, z1)
        f = (t0 * t1 - r) / r
        jac = ((t1 * tau.envelope(z0))[:, None] * powers0
               + (t0 * tau.envelope(z1))[:, None] * powers1) / r[:, None]
        try:
            dc = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        tau = TauFunction.from_coefficients(model, np.asarray(tau.c) + dc)
        res = np.max(sov_residuals(model, tau, eps))
        if res < best_res:
            best, best_res = tau, res
    return best


def _merge(model, eps, system, found, candidates):
    """Add new solutions to ``found`` (a list of (u, tau) pairs).

    Duplicates are detected on the scaled node values u = t / sqrt(r): the
    coefficients c are an ill-conditioned image of them at larger N.
    """
    for u in candidates:
        if u is None:
            continue
        if all(np.max(np.abs(u - v)) > DEDUPE_TOL * max(1.0, np.max(np.abs(u)), np.max(np.abs(v)))
               for v, _ in found):
            t = u * system.root_r
            found.append((u, polish_coefficients(model, eps, tau_from_values(model, t))))
    return found


def _sorted(taus):
    keys = []
    for t in taus:
        k = []
        for x in t.c:
            k.extend([round(x.real, 9), round(x.imag, 9)])
        keys.append(tuple(k))
    order = sorted(range(len(taus)), key=lambda i: keys[i])
    return [taus[i] for i in order]


def solve_spectrum(model, eps, seed=0, workers=1, use_oracle=True):
    """All 2^N eigenvalue functions (TauFunction list, sorted by c).

    Strategy: Newton from the 2^N sign seeds of the decoupled system, then a
    seeded total-degree homotopy, then oracle-seeded Newton.
    """
    n = model.n
    target = 2 ** n
    system = affine_system(model, eps)
    gh, Gh = system.scaled()
    found = _merge(model, eps, system, [], _solve_batch(gh, Gh, _seeds_signs(n), workers))
    stages = {"newton": len(found)}
    rng = np.random.default_rng(seed)
    for attempt in range(HOMOTOPY_ATTEMPTS):
        if len(found) >= target:
            break
        gamma = np.exp(2j * np.pi * rng.uniform())
        found = _merge(model, eps, system, found,
                       _solve_batch(gh, Gh, _seeds_signs(n), workers, homotopy_gamma=gamma))
        stages[f"homotopy{attempt + 1}"] = len(found)
    if len(found) < target and use_oracle:
        from .oracle import diagonalize
        spec = diagonalize(model, seed=seed, workers=workers)
        z0, _, _, _ = _node_arrays(model)
        starts = [np.array([spec.tau_of(k, z) for z in z0]) / system.root_r for k in range(target)]
        found = _merge(model, eps, system, found, _solve_batch(gh, Gh, starts, workers))
        stages["oracle"] = len(found)
    if len(found) != target:
        raise SolverIncomplete(f"found {len(found)} of {target} solutions", found=len(found),
                               diagnostics=stages)
    found = [tau for _, tau in found]
    for tau in found:
        res = sov_residuals(model, tau, eps)
        if np.max(res) > RESIDUAL_TOL:
            raise SolverIncomplete(f"solution with residual {np.max(res):.2e}", found=len(found),
                                   diagnostics=stages)
    return _sorted(found)


# ---------------------------------------------------------------------------
# eigenstates
# ---------------------------------------------------------------------------

def q_ratios(model, tau, eps):
    """(right, left) ratios Q(zeta_a^(1))/Q(zeta_a^(0)) with Q(zeta_a^(0)) = 1."""
    s = model.scalars
    n = model.n
    z0, _, _, _ = _node_arrays(model)
    t0 = tau_eval(tau, z0)
    right = np.empty(n, dtype=complex)
    left = np.empty(n, dtype=complex)
    for a in range(n):
        z = z0[a]
        if eps == "-":
            den_r = s.sa(+1, -z) * s.A_minus(-z)
            x = s.xi[a]
            den_l = s.sd(+1, -z) * s.k_site(-1, a) ** (-1) * s.A_minus(-z + 2 * x)
        else:
            den_r = s.sd(-1, z) * s.D_plus(z)
            x = s.xi[a]
            den_l = s.sa(-1, z) * s.k_site(+1, a) * s.D_plus(z - 2 * x)
        if abs(den_r) < 1e-300 or abs(den_l) < 1e-300:
            raise ParameterError(f"vanishing Baxter coefficient at site {a + 1}")
        right[a] = t0[a] / den_r
        left[a] = t0[a] / den_l
    return right, left


@dataclass(frozen=True)
class SovEigenpair:
    tau: TauFunction
    eps: str
    q_ratios: np.ndarray        # right-state Q(zeta^(1))/Q(zeta^(0))
    qbar_ratios: np.ndarray     # left-state counterpart
    right_state: np.ndarray
    left_state: np.ndarray
    residual: float = field(default=float("nan"))
    raw_residual: float = field(default=float("nan"))   # before polishing

    def right_separate(self):
        f = np.column_stack([np.ones(len(self.q_ratios)), self.q_ratios])
        return SeparateState("right", self.eps, f)

    def left_separate(self):
        f = np.column_stack([np.ones(len(self.qbar_ratios)), self.qbar_ratios])
        return SeparateState("left", self.eps, f)


def eigen_residual(model, tau, right, left, lams):
    """max over lams of the right and left eigen-residuals.

    ||(T - tau) v|| / ||v|| is divided by max(1, ||T||_2): entries of T grow
    like sinh^(2N) of the spectral parameter, so an unscaled residual would
    only measure the size of T.
    """
    worst = 0.0
    for lam in lams:
        t = model.transfer(lam)
        tv = tau_eval(tau, lam)
        scale = max(1.0, np.linalg.norm(t, 2))
        worst = max(worst,
                    np.linalg.norm(t @ right - tv * right) / np.linalg.norm(right) / scale,
                    np.linalg.norm(left @ t - tv * left) / np.linalg.norm(left) / scale)
    return float(worst)


def residual_points(model, seed=0):
    rng = np.random.default_rng(seed)
    pts = [complex(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)) for _ in range(3)]
    return pts + [model.scalars.zeta_point(0, 0), model.params.eta / 2]


def polish_state(model, tau, v, side, lam):
    """One inverse-iteration step on T(lam) - tau(lam), keeping the gauge.

    Summing a state over an ill-conditioned SOV basis loses digits by
    cancellation; one step at an exact eigenvalue removes the spurious
    components of the other eigenvectors.  The result is rescaled so that
    its component along ``v`` is unchanged, i.e. the normalisation of the
    SOV construction is preserved.
    """
    t = model.transfer(lam)
    tv = tau_eval(tau, lam)
    shifted = t - (tv + 1e-14 * max(1.0, abs(tv)) * (1 + 1j)) * np.eye(t.shape[0])
    try:
        w = np.linalg.solve(shifted if side == "right" else shifted.T, v)
    except np.linalg.LinAlgError:
        return v
    c = np.vdot(v, w) / np.vdot(v, v)
    if not np.isfinite(c) or c == 0:
        return v
    return w / c


def polish_point(model, seed=0):
    rng = np.random.default_rng([seed, 1])
    return complex(rng.uniform(0.2, 0.6), rng.uniform(0.2, 0.6))


def build_eigenstates(model, tau, eps, basis=None, seed=0, polish=True):
    basis = basis if basis is not None else build_basis(model, eps)
    qr, ql = q_ratios(model, tau, eps)
    pair = SovEigenpair(tau=tau, eps=eps, q_ratios=qr, qbar_ratios=ql,
                        right_state=np.empty(0), left_state=np.empty(0))
    right = assemble(pair.right_separate(), basis)
    left = assemble(pair.left_separate(), basis)
    pts = residual_points(model, seed)
    raw = eigen_residual(model, tau, right, left, pts)
    if polish:
        lam = polish_point(model, seed)
        right = polish_state(model, tau, right, "right", lam)
        left = polish_state(model, tau, left, "left", lam)
    res = eigen_residual(model, tau, right, left, pts)
    return SovEigenpair(tau=tau, eps=eps, q_ratios=qr, qbar_ratios=ql,
                        right_state=right, left_state=left, residual=res, raw_residual=raw)


def solve_all(model, eps, seed=0, workers=1, basis=None):
    """Complete list of SOV eigenpairs, ordered by their coefficients c."""
    basis = basis if basis is not None else build_basis(model, eps)
    taus = solve_spectrum(model, eps, seed=seed, workers=workers)
    return [build_eigenstates(model, t, eps, basis=basis, seed=seed) for t in taus]


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def wavefunction_baxter_residual(model, basis, pair):
    """Discrete Baxter equations for Psi(h) = <eps,h|tau>, max relative residual."""
    eps = pair.eps
    n = model.n
    s = model.scalars
    psi = basis.left @ pair.right_state
    scale = np.max(np.abs(psi))
    worst = 0.0
    for h in h_vectors(n):
        for a in range(n):
            z = s.zeta_point(a, h[a])
            lhs = tau_eval(pair.tau, z) * psi[h_index(h)]
            rhs = 0j
            for step, arg in ((-1, z), (+1, -z)) if eps == "-" else ((+1, z), (-1, -z)):
                hh = list(h)
                hh[a] += step
                coef = baxter_coefficient(model, eps, arg)
                if hh[a] in (0, 1):
                    rhs += coef * psi[h_index(hh)]
            worst = max(worst, abs(lhs - rhs) / (scale * max(1.0, abs(tau_eval(pair.tau, z)))))
    return worst


def projector_sum_residual(pairs):
    d = len(pairs[0].right_state)
    acc = np.zeros((d, d), dtype=complex)
    for p in pairs:
        acc += np.outer(p.right_state, p.left_state) / (p.left_state @ p.right_state)
    return float(np.max(np.abs(acc - np.eye(d))))


def min_separation(model, taus):
    """min over pairs of the max node difference |tau - tau'| (relative)."""
    s = model.scalars
    pts = [s.zeta_point(a, h) for a in range(model.n) for h in (0, 1)]
    vals = np.array([[tau_eval(t, z) for z in pts] for t in taus])
    scale = np.max(np.abs(vals))
    best = np.inf
    for i in range(len(taus)):
        for j in range(i):
            best = min(best, np.max(np.abs(vals[i] - vals[j])) / scale)
    return float(best)
