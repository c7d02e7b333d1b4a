"""Separate states in an SOV basis and the determinant form of their pairing."""

from dataclasses import dataclass

import numpy as np

from . import numkit
from .algebra import Model
from .sov import build_basis, h_vectors


@dataclass(frozen=True)
class SeparateState:
    """A left or right state with factorised SOV coefficients.

    ``factors[a, h]`` is the site-``a`` factor at the SOV point zeta_a^(h).
    """

    side: str          # "left" or "right"
    eps: str
    factors: np.ndarray

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        f = np.asarray(self.factors, dtype=complex)
        if f.ndim != 2 or f.shape[1] != 2:
            raise ValueError("factors must have shape (N, 2)")
        object.__setattr__(self, "factors", f)

    @property
    def n(self):
        return self.factors.shape[0]


def nodes(model):
    """eta_a^(h) as an (N, 2) array."""
    s = model.scalars
    return np.array([[s.node(a, 0), s.node(a, 1)] for a in range(model.n)])


def sov_coefficients(state, model):
    """prod_a factor_a(h_a) * V(eta^(h)) for every h, in basis index order."""
    nd = nodes(model)
    out = np.empty(2 ** state.n, dtype=complex)
    for i, h in enumerate(h_vectors(state.n)):
        f = 1.0 + 0j
        for a, ha in enumerate(h):
            f *= state.factors[a, ha]
        out[i] = f * numkit.vandermonde([nd[a, ha] for a, ha in enumerate(h)])
    return out


def assemble(state, basis):
    """Dense covector (left) or vector (right) of a separate state."""
    if state.eps != basis.eps:
        raise ValueError("state and basis have different eps")
    if state.n != basis.n:
        raise ValueError("state and basis have different N")
    coeffs = sov_coefficients(state, basis.model)
    if state.side == "left":
        return coeffs @ basis.left
    return basis.right @ coeffs


def pairing_matrix(alpha, beta, model):
    """M_{a,b} = sum_h alpha_a(h) beta_a(h) (eta_a^(h))^(b-1)."""
    if alpha.side != "left" or beta.side != "right":
        raise ValueError("pairing needs a left and a right state")
    if alpha.eps != beta.eps:
        raise ValueError("pairing needs states of the same eps")
    nd = nodes(model)
    n = alpha.n
    powers = nd[:, :, None] ** np.arange(n)[None, None, :]      # (a, h, b)
    prod = alpha.factors * beta.factors                          # (a, h)
    return np.einsum("ah,ahb->ab", prod, powers)


def pairing_det(alpha, beta, model):
    """<alpha|beta> as an N x N determinant (bilinear, no conjugation)."""
    return numkit.det(pairing_matrix(alpha, beta, model))


def pairing_direct(alpha, beta, basis):
    """Plain contraction of the assembled covector and vector."""
    return complex(assemble(alpha, basis) @ assemble(beta, basis))


def reference_basis(model, eps):
    """SOV basis built with extended-precision operators.

    The assembled states are large combinations of far-from-orthogonal basis
    states, so their plain contraction cancels by many orders of magnitude
    at N = 6; rounding in double-precision basis entries then dominates.
    This basis is the reference for direct contractions.
    """
    return build_basis(Model(model.params, dtype=np.clongdouble), eps)


def orthogonality_certificate(left_pair, right_pair, model):
    """Residual of M^(tau, tau') c^(tau, tau') = 0 for two eigenpairs.

    ``left_pair`` provides the covector (Q-bar factors), ``right_pair`` the
    vector (Q factors); c expands tau - tau' in the free part of the
    eigenvalue form.  The residual max_a |(M c)_a| is measured against the
    same sum taken over absolute values of its terms; it is 0 when the
    eigenvalues coincide.
    """
    c = np.asarray(left_pair.tau.c) - np.asarray(right_pair.tau.c)
    if np.max(np.abs(c)) == 0:
        return 0.0
    alpha, beta = left_pair.left_separate(), right_pair.right_separate()
    m = pairing_matrix(alpha, beta, model)
    nd = nodes(model)
    powers = np.abs(nd[:, :, None]) ** np.arange(alpha.n)[None, None, :]
    m_abs = np.einsum("ah,ahb->ab", np.abs(alpha.factors * beta.factors), powers)
    scale = np.max(m_abs @ np.abs(c))
    return float(np.max(np.abs(m @ c)) / scale)
