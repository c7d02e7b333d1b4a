"""Dense complex linear algebra and polynomial kernels.

Everything here works on plain ``numpy`` complex arrays.  Polynomials are
stored as coefficient arrays in ascending degree, ``p[k]`` multiplying
``z**k``.
"""

import numpy as np

# default mixed tolerance, |x - y| <= ATOL + RTOL * max(|x|, |y|)
ATOL = 1e-10
RTOL = 1e-9

CHAR_POLY_MAX_DIM = 256


class ConvergenceError(RuntimeError):
    """An iterative kernel did not reach its stopping criterion."""


def close(x, y, atol=ATOL, rtol=RTOL):
    """Elementwise mixed-tolerance comparison."""
    x = np.asarray(x)
    y = np.asarray(y)
    return np.abs(x - y) <= atol + rtol * np.maximum(np.abs(x), np.abs(y))


def allclose(x, y, atol=ATOL, rtol=RTOL):
    return bool(np.all(close(x, y, atol, rtol)))


def rel_residual(x, y):
    """max|x - y| / max(max|x|, max|y|), with 0/0 read as 0."""
    x = np.asarray(x)
    y = np.asarray(y)
    scale = max(np.max(np.abs(x)), np.max(np.abs(y)))
    diff = np.max(np.abs(x - y))
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)


def _check_finite(a, name="input"):
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf")


def kron(a, b):
    """Kronecker product; block (i, j) of the result is ``a[i, j] * b``."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    _check_finite(a)
    _check_finite(b)
    m, n = a.shape
    p, q = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(m * p, n * q)


def det(a):
    """Determinant by LU factorisation with partial pivoting."""
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"det needs a square matrix, got shape {a.shape}")
    _check_finite(a)
    n = a.shape[0]
    sign = 1.0
    out = 1.0 + 0j
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0:
            return 0j
        if p != k:
            a[[k, p]] = a[[p, k]]
            sign = -sign
        out *= a[k, k]
        if k + 1 < n:
            f = a[k + 1:, k] / a[k, k]
            a[k + 1:, k + 1:] -= np.outer(f, a[k, k + 1:])
    return complex(sign * out)


def balance(a, max_sweeps=50):
    """Diagonal similarity scaling (Parlett-Reinsch, radix 2).

    Returns ``(b, d)`` with ``b = diag(1/d) @ a @ diag(d)``.
    """
    b = np.array(a, dtype=complex)
    n = b.shape[0]
    d = np.ones(n)
    for _ in range(max_sweeps):
        done = True
        for i in range(n):
            c = np.sum(np.abs(b[:, i])) - abs(b[i, i])
            r = np.sum(np.abs(b[i, :])) - abs(b[i, i])
            if c == 0.0 or r == 0.0:
                continue
            f = 1.0
            s = c + r
            while c < r / 2.0:
                c *= 2.0
                r /= 2.0
                f *= 2.0
            while c >= r * 2.0:
                c /= 2.0
                r *= 2.0
                f /= 2.0
            if (c + r) < 0.95 * s:
                done = False
                d[i] *= f
                b[:, i] *= f
                b[i, :] /= f
        if done:
            break
    return b, d


def char_poly(a, balanced=True):
    """Monic characteristic polynomial det(z I - A), ascending coefficients.

    Faddeev-LeVerrier recursion, optionally after a balancing similarity.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("char_poly needs a square matrix")
    n = a.shape[0]
    if n > CHAR_POLY_MAX_DIM:
        raise ValueError(f"dimension {n} exceeds char_poly bound {CHAR_POLY_MAX_DIM}")
    _check_finite(a)
    if balanced:
        a, _ = balance(a)
    # c[k] multiplies z**(n-k) in descending form
    c = np.zeros(n + 1, dtype=complex)
    c[0] = 1.0
    m = np.zeros_like(a)
    eye = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        m = a @ m + c[k - 1] * eye
        c[k] = -np.trace(a @ m) / k
    return c[::-1].copy()


def poly_eval(p, z):
    """Horner evaluation of an ascending-coefficient polynomial."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for c in p[::-1]:
        out = out * z + c
    return out


def poly_deriv(p):
    p = np.asarray(p, dtype=complex)
    if len(p) == 1:
        return np.zeros(1, dtype=complex)
    return p[1:] * np.arange(1, len(p))


def poly_from_roots(roots):
    """Monic polynomial with the given roots, ascending coefficients."""
    p = np.ones(1, dtype=complex)
    for r in roots:
        p = np.concatenate([[0j], p]) - r * np.concatenate([p, [0j]])
    return p


def _trim(p):
    p = np.asarray(p, dtype=complex)
    nz = np.nonzero(p)[0]
    if len(nz) == 0:
        raise ValueError("zero polynomial has no roots")
    return p[: nz[-1] + 1]


def sort_lex(values):
    """Sort complex numbers lexicographically by (re, im)."""
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return values[order]


def poly_roots(p, tol=1e-12, max_iter=500):
    """All roots of ``p`` by Aberth-Ehrlich simultaneous iteration.

    Iterates until every Newton correction |p(z)/p'(z)| is below ``tol``
    (relative to max(1, |z|)), then returns the roots sorted by (re, im).
    Raises ConvergenceError rather than returning unconverged roots.
    """
    p = _trim(p)
    _check_finite(p)
    n = len(p) - 1
    if n < 1:
        raise ValueError("poly_roots needs degree >= 1")
    if n == 1:
        return np.array([-p[0] / p[1]])
    p = p / p[-1]
    dp = poly_deriv(p)
    # Fujiwara-style radius for the initial circle
    radius = 2.0 * max(abs(p[k]) ** (1.0 / (n - k)) for k in range(n))
    radius = max(radius, 1e-3)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)
    for _ in range(max_iter):
        pz = poly_eval(p, z)
        dpz = poly_eval(dp, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        # the unit diagonal contributes exactly 1 to each row sum
        s = np.sum(1.0 / diff, axis=1) - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dpz
            step = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(step)
        if np.any(bad):
            step[bad] = 1e-8 * (1 + abs(z[bad]))
        z = z - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(z))):
            break
    else:
        raise ConvergenceError(f"Aberth iteration did not converge in {max_iter} steps (degree {n})")
    # one polishing Newton step per root
    for _ in range(2):
        dpz = poly_eval(dp, z)
        ok = dpz != 0
        z[ok] = z[ok] - poly_eval(p, z[ok]) / dpz[ok]
    return sort_lex(z)


def inverse_iteration(a, mu, rng=None, tol=1e-9, max_iter=50, restarts=5, polish=2):
    """Unit eigenvector for the eigenvalue of ``a`` closest to ``mu``.

    Starts from the all-ones vector; on breakdown the start vector is
    redrawn from ``rng`` (seeded, default seed 0).  Once the residual is
    below ``tol``, the shift moves to the current Rayleigh value and
    ``polish`` further steps remove what is left of the neighbouring
    eigenvectors.  Returns ``(lam, v)``.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse_iteration needs a square matrix")
    rng = np.random.default_rng(0) if rng is None else rng
    scale = max(np.linalg.norm(a, ord=np.inf), 1e-300)
    # a tiny offset keeps the shifted matrix numerically invertible
    shift = mu + 1e-13 * scale * (1 + 1j)
    shifted = a - shift * np.eye(n)
    v = np.ones(n, dtype=complex) / np.sqrt(n)
    for attempt in range(restarts + 1):
        try:
            lu = _lu_factor(shifted)
        except np.linalg.LinAlgError:
            shift = shift + 1e-10 * scale
            shifted = a - shift * np.eye(n)
            continue
        for _ in range(max_iter):
            w = _lu_solve(lu, v)
            nw = np.linalg.norm(w)
            if not np.isfinite(nw) or nw == 0:
                break
            v = w / nw
            lam = np.vdot(v, a @ v)
            if np.linalg.norm(a @ v - lam * v) < tol * scale:
                # re-shift at the converged value so the polish steps contract fast
                try:
                    lu = _lu_factor(a - (lam + 1e-13 * scale * (1 + 1j)) * np.eye(n))
                except np.linalg.LinAlgError:
                    pass
                for _ in range(polish):
                    w = _lu_solve(lu, v)
                    v = w / np.linalg.norm(w)
                lam = np.vdot(v, a @ v)
                return complex(lam), v
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
    raise ConvergenceError("inverse iteration failed after all restarts")


def _lu_factor(a):
    import scipy.linalg

    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if np.any(np.diag(lu) == 0):
        raise np.linalg.LinAlgError("singular")
    return lu, piv


def _lu_solve(lu, b):
    import scipy.linalg

    return scipy.linalg.lu_solve(lu, b, check_finite=False)


def vandermonde(x):
    """prod_{b<a} (x_a - x_b); equals det[x_i**(j-1)]."""
    x = np.asarray(x, dtype=complex)
    out = 1.0 + 0j
    for a in range(len(x)):
        for b in range(a):
            out *= x[a] - x[b]
    return out
