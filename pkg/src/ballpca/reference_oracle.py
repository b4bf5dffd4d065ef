"""Brute-force cross-checks for the invariant PCA pipeline.

Everything here recomputes quantities the production code obtains in closed
form: the rotation-averaged covariance via explicit quadrature over Euler
angles instead of the Wigner orthogonality collapse, and rotated fields via
pointwise evaluation instead of the coefficient-space Wigner action.
Desk-scale only; no performance contract.
"""

import numpy as np

from .errors import DomainError
from .harmonics import wigner_d_matrix
from .transform import cart_to_sph, sph_to_cart, synthesize

ORACLE_L_MAX = 6
ORACLE_D_MAX = 220


def so3_quadrature_nodes(L):
    """ZYZ Euler nodes and Haar-probability weights, exact to degree 2L.

    Uniform rules in alpha and gamma (2L+1 nodes each) kill every cross
    frequency up to 2L; Gauss-Legendre in cos(beta) with L+1 nodes handles
    the little-d products, polynomials of degree <= 2L in cos(beta).
    """
    n_circ = 2 * L + 1
    alphas = 2.0 * np.pi * np.arange(n_circ) / n_circ
    gammas = alphas.copy()
    xb, wb = np.polynomial.legendre.leggauss(L + 1)
    betas = np.arccos(xb)
    nodes = []
    for b, beta in enumerate(betas):
        w_beta = wb[b] / 2.0
        for alpha in alphas:
            for gamma in gammas:
                nodes.append((alpha, beta, gamma, w_beta / n_circ**2))
    return nodes


def haar_quadrature_covariance(vectors):
    """Dense D x D rotation-averaged covariance by direct SO(3) quadrature.

    Input vectors must already be centered. Refuses non-desk-scale inputs;
    this routine exists to validate the block formula, not to compete with
    it.
    """
    if len(vectors) == 0:
        raise DomainError("need at least one coefficient vector")
    spec = vectors[0].spec
    if spec.L > ORACLE_L_MAX or spec.D > ORACLE_D_MAX:
        raise DomainError(
            f"oracle restricted to L <= {ORACLE_L_MAX} and D <= {ORACLE_D_MAX}; "
            f"got L={spec.L}, D={spec.D}"
        )
    n = len(vectors)
    stacked = np.vstack([v.data[None, :] for v in vectors])
    ms = [np.arange(-ell, ell + 1) for ell in range(spec.L + 1)]

    cov = np.zeros((spec.D, spec.D), dtype=np.complex128)
    d_cache = {}
    for alpha, beta, gamma, w in so3_quadrature_nodes(spec.L):
        if beta not in d_cache:
            d_cache[beta] = [wigner_d_matrix(ell, beta) for ell in range(spec.L + 1)]
        rotated = np.empty_like(stacked)
        for ell in range(spec.L + 1):
            S = spec.S[ell]
            if S == 0:
                continue
            D_l = (
                np.exp(-1j * alpha * ms[ell])[:, None]
                * d_cache[beta][ell]
                * np.exp(-1j * gamma * ms[ell])[None, :]
            )
            sl = spec.block_slice(ell)
            blk = stacked[:, sl].reshape(n, 2 * ell + 1, S)
            rotated[:, sl] = np.einsum("mk,nks->nms", D_l, blk).reshape(n, -1)
        cov += (w / n) * (rotated.T @ rotated.conj())
    return cov


def expand_block_covariance(cov):
    """Materialize the block covariance as the dense direct sum (test support)."""
    spec = cov.spec
    dense = np.zeros((spec.D, spec.D), dtype=np.complex128)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        for m in range(2 * ell + 1):
            lo = spec.offsets[ell] + m * S
            dense[lo : lo + S, lo : lo + S] = cov.blocks[ell]
    return dense


def rotate_field_pointwise(spec, coeffs, angles, points):
    """Evaluate the rotated volume by sampling the original at R^T x.

    ``points`` are (r, theta, phi) rows inside the unit ball. Agreement with
    ``rotate_coeffs`` + ``synthesize`` pins down the Euler/Wigner convention.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    xyz = sph_to_cart(points)
    back = xyz @ angles.matrix  # row-vector form of R^T x
    return synthesize(spec, coeffs, cart_to_sph(back))
