"""Exact-diagonalisation reference for the transfer-matrix spectral problem.

The transfer matrices T(lambda) commute, so diagonalising T at one generic
probe point gives the common eigenvectors; eigenvalue functions are then
read off by component ratios at any lambda.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import numkit
from .algebra import Model

# Faddeev-LeVerrier + Aberth is used directly up to this dimension; beyond
# it, LAPACK eigenvalues seed the same inverse-iteration refinement
CHAR_POLY_DIRECT_DIM = 32
ROOT_SEPARATION = 1e-6
MAX_PROBES = 5


class OracleError(RuntimeError):
    """Exact diagonalisation could not produce a clean eigenbasis."""


@dataclass(frozen=True)
class OracleSpectrum:
    model: Model
    probe: complex
    eigenvalues: np.ndarray    # eigenvalues of T(probe), sorted lexicographically
    right: np.ndarray          # columns: unit right eigenvectors
    left: np.ndarray           # rows: left eigenvectors, normalised so left @ right = Id

    def tau_of(self, k, lam):
        return tau_of(self.model, self.right[:, k], lam)

    def node_values(self, k, points):
        return np.array([self.tau_of(k, z) for z in points])


def _eigenvalue_estimates(t, use_char_poly=True):
    d = t.shape[0]
    if use_char_poly and d <= CHAR_POLY_DIRECT_DIM:
        try:
            return numkit.poly_roots(numkit.char_poly(t))
        except numkit.ConvergenceError:
            pass
    return numkit.sort_lex(np.linalg.eigvals(t))


def _min_separation(vals):
    d = len(vals)
    if d < 2:
        return np.inf
    diff = np.abs(vals[:, None] - vals[None, :])
    diff[np.diag_indices(d)] = np.inf
    return float(diff.min())


def _refine(t, mus, workers=1):
    rng_seeds = range(len(mus))

    def one(k):
        lam, v = numkit.inverse_iteration(t, mus[k], rng=np.random.default_rng(k))
        return lam, v

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(one, rng_seeds))
    else:
        res = [one(k) for k in rng_seeds]
    lams = np.array([r[0] for r in res])
    vecs = np.column_stack([r[1] for r in res])
    return lams, vecs


def diagonalize(model, lam_star=None, seed=0, workers=1):
    """All 2^N common eigenvectors of the transfer-matrix family."""
    rng = np.random.default_rng(seed)
    d = model.dim
    for _attempt in range(MAX_PROBES):
        probe = lam_star if lam_star is not None and _attempt == 0 else complex(
            rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8))
        t = model.transfer(probe)
        # characteristic-polynomial roots first; their accuracy degrades with
        # the dimension, so a failed refinement retries with LAPACK estimates
        lams = None
        for use_char_poly in (True, False):
            mus = _eigenvalue_estimates(t, use_char_poly)
            scale = max(np.max(np.abs(mus)), 1e-300)
            if _min_separation(mus) < ROOT_SEPARATION * scale:
                continue
            try:
                lams, vecs = _refine(t, mus, workers)
                break
            except numkit.ConvergenceError:
                continue
        if lams is None:
            continue
        if _min_separation(lams) < ROOT_SEPARATION * scale:
            continue
        # sanity: eigenvectors must be independent
        try:
            left = np.linalg.inv(vecs)
        except np.linalg.LinAlgError:
            continue
        if np.linalg.cond(vecs) > 1e12:
            continue
        order = np.lexsort((lams.imag, lams.real))
        lams = lams[order]
        vecs = vecs[:, order]
        left = left[order]
        # check lambda-independence at a second probe
        mu = complex(rng.uniform(-0.8, -0.2), rng.uniform(0.2, 0.8))
        tm = model.transfer(mu)
        ok = True
        for k in range(d):
            v = vecs[:, k]
            w = tm @ v
            ev = np.vdot(v, w)
            if np.linalg.norm(w - ev * v) > 1e-8 * max(np.linalg.norm(tm, 2), 1e-300):
                ok = False
                break
        if not ok:
            continue
        return OracleSpectrum(model=model, probe=probe, eigenvalues=lams, right=vecs, left=left)
    raise OracleError(f"persistent near-degeneracy after {MAX_PROBES} probes")


def tau_of(model, v, lam, check_tol=1e-8):
    """Eigenvalue of T(lam) on eigenvector ``v`` via component ratios.

    The ratio is read at the largest component of ``v`` and cross-checked at
    the second largest one (when that one is not negligible).
    """
    t = model.transfer(lam)
    w = t @ v
    order = np.argsort(-np.abs(v))
    i = order[0]
    r1 = w[i] / v[i]
    if len(v) > 1:
        j = order[1]
        if abs(v[j]) > 1e-2 * abs(v[i]):
            r2 = w[j] / v[j]
            scale = max(abs(r1), 1e-12 * np.linalg.norm(t, 2))
            if abs(r1 - r2) > check_tol * scale:
                raise OracleError(f"component ratios disagree ({r1} vs {r2}): not an eigenvector")
    return complex(r1)


def direct_matrix_element(left_v, op, right_v):
    """Plain bilinear contraction left_v . op . right_v."""
    return complex(left_v @ (op @ right_v))
