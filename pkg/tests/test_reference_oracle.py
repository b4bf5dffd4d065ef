import numpy as np
import pytest

from ballpca.basis import build_basis
from ballpca.errors import DomainError
from ballpca.invariant_pca import accumulate_covariance, center, compute_mean
from ballpca.reference_oracle import (
    expand_block_covariance,
    haar_quadrature_covariance,
    rotate_field_pointwise,
    so3_quadrature_nodes,
)
from ballpca.transform import CoefficientVector, rotate_coeffs, synthesize

from util import haar_angles, random_coeffs


def test_quadrature_weights_are_probability():
    nodes = so3_quadrature_nodes(3)
    assert sum(w for (_, _, _, w) in nodes) == pytest.approx(1.0, abs=1e-14)


def test_oracle_zero_for_centered_radial_sample():
    spec = build_basis(1, 2 * np.pi)
    data = np.zeros(spec.D, dtype=np.complex128)
    data[spec.block_slice(0)] = [0.7, -1.2]
    v = CoefficientVector(spec, data)
    centered = center(v, compute_mean([v]))
    dense = haar_quadrature_covariance([centered])
    assert np.max(np.abs(dense)) < 1e-15


def test_oracle_five_thirds_block_structure():
    spec = build_basis(1, 2 * np.pi)
    data = np.zeros(spec.D, dtype=np.complex128)
    data[spec.index(1, -1, 1)] = 1.0
    data[spec.index(1, 1, 1)] = 2.0j
    dense = haar_quadrature_covariance([CoefficientVector(spec, data)])
    want = np.zeros((spec.D, spec.D), dtype=np.complex128)
    want[2:, 2:] = (5.0 / 3.0) * np.eye(3)  # I_3 tensor [5/3] on the l=1 block
    assert np.max(np.abs(dense - want)) < 1e-13


def test_oracle_matches_block_formula():
    spec = build_basis(2, 2.6 * np.pi)
    rng = np.random.default_rng(0)
    vecs = [random_coeffs(spec, rng) for _ in range(4)]
    mean = compute_mean(vecs)
    centered = [center(v, mean) for v in vecs]
    cov = accumulate_covariance(centered)
    dense = haar_quadrature_covariance(centered)
    assert np.max(np.abs(dense - expand_block_covariance(cov))) < 1e-10 * cov.trace()
    # Hermitian PSD
    assert np.max(np.abs(dense - dense.conj().T)) < 1e-13
    assert np.linalg.eigvalsh(dense)[0] > -1e-12 * cov.trace()


def test_oracle_node_doubling_stability():
    # recompute with doubled angular rules by faking a larger L in the nodes
    spec = build_basis(1, 2 * np.pi)
    rng = np.random.default_rng(1)
    vecs = [random_coeffs(spec, rng) for _ in range(2)]
    mean = compute_mean(vecs)
    centered = [center(v, mean) for v in vecs]
    dense = haar_quadrature_covariance(centered)

    n = len(centered)
    stacked = np.vstack([v.data[None, :] for v in centered])
    from ballpca.harmonics import wigner_d_matrix

    doubled = np.zeros((spec.D, spec.D), dtype=np.complex128)
    for alpha, beta, gamma, w in so3_quadrature_nodes(2 * spec.L + 1):
        rotated = np.empty_like(stacked)
        for ell in range(spec.L + 1):
            ms = np.arange(-ell, ell + 1)
            D_l = (
                np.exp(-1j * alpha * ms)[:, None]
                * wigner_d_matrix(ell, beta)
                * np.exp(-1j * gamma * ms)[None, :]
            )
            sl = spec.block_slice(ell)
            blk = stacked[:, sl].reshape(n, 2 * ell + 1, spec.S[ell])
            rotated[:, sl] = np.einsum("mk,nks->nms", D_l, blk).reshape(n, -1)
        doubled += (w / n) * (rotated.T @ rotated.conj())
    assert np.max(np.abs(dense - doubled)) < 1e-12


def test_oracle_refuses_large_inputs():
    spec = build_basis(8, 30.0)
    rng = np.random.default_rng(2)
    with pytest.raises(DomainError, match="oracle"):
        haar_quadrature_covariance([random_coeffs(spec, rng)])
    with pytest.raises(DomainError):
        haar_quadrature_covariance([])


def random_ball_points(rng, count):
    return np.column_stack(
        [
            rng.uniform(0.0, 1.0, count),
            np.arccos(rng.uniform(-1.0, 1.0, count)),
            rng.uniform(0.0, 2.0 * np.pi, count),
        ]
    )


def test_rotate_field_identity():
    spec = build_basis(3, 4 * np.pi)
    rng = np.random.default_rng(3)
    cv = random_coeffs(spec, rng)
    pts = random_ball_points(rng, 20)
    from ballpca.harmonics import WignerAngles

    same = rotate_field_pointwise(spec, cv, WignerAngles(0, 0, 0), pts)
    assert np.max(np.abs(same - synthesize(spec, cv, pts))) < 1e-12


def test_rotate_field_l0_invariant():
    spec = build_basis(0, 3 * np.pi)
    rng = np.random.default_rng(4)
    cv = random_coeffs(spec, rng)
    pts = random_ball_points(rng, 20)
    base = synthesize(spec, cv, pts)
    for _ in range(5):
        rotated = rotate_field_pointwise(spec, cv, haar_angles(rng), pts)
        assert np.max(np.abs(rotated - base)) < 1e-12


def test_rotate_field_matches_wigner_action():
    spec = build_basis(3, 4 * np.pi)
    rng = np.random.default_rng(5)
    cv = random_coeffs(spec, rng, scale=1.0 / np.sqrt(spec.D))
    pts = random_ball_points(rng, 50)
    for _ in range(5):
        angles = haar_angles(rng)
        via_coeffs = synthesize(spec, rotate_coeffs(spec, cv, angles), pts)
        via_points = rotate_field_pointwise(spec, cv, angles, pts)
        assert np.max(np.abs(via_coeffs - via_points)) < 1e-9
