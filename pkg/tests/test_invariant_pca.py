import numpy as np
import pytest

from ballpca.basis import build_basis
from ballpca.errors import DomainError
from ballpca.invariant_pca import (
    BlockCovariance,
    accumulate_covariance,
    build_covariance,
    center,
    compute_mean,
    eigendecompose,
    energy_curve,
    project,
    reconstruct,
    select_rank,
)
from ballpca.io_formats import generate_synthetic_dataset
from ballpca.reference_oracle import expand_block_covariance, haar_quadrature_covariance
from ballpca.transform import CoefficientVector, reflect_coeffs, rotate_coeffs

from util import haar_angles, random_coeffs


@pytest.fixture(scope="module")
def spec2():
    return build_basis(2, 3 * np.pi)


def zero_vec(spec):
    return np.zeros(spec.D, dtype=np.complex128)


def test_compute_mean_single(spec2):
    rng = np.random.default_rng(0)
    v = random_coeffs(spec2, rng)
    mean = compute_mean([v])
    assert np.array_equal(mean, v.block(0)[0])


def test_compute_mean_symmetric_dataset(spec2):
    rng = np.random.default_rng(1)
    v = random_coeffs(spec2, rng)
    neg = CoefficientVector(spec2, -v.data)
    assert np.max(np.abs(compute_mean([v, neg]))) == 0.0


def test_compute_mean_arithmetic(spec2):
    a = zero_vec(spec2)
    b = zero_vec(spec2)
    a[spec2.index(0, 0, 1)] = 1.0
    b[spec2.index(0, 0, 1)] = 3.0
    mean = compute_mean([CoefficientVector(spec2, a), CoefficientVector(spec2, b)])
    assert mean[0] == 2.0


def test_mean_mixed_specs_error(spec2):
    other = build_basis(2, 2.5 * np.pi)
    rng = np.random.default_rng(2)
    with pytest.raises(DomainError, match="mix"):
        compute_mean([random_coeffs(spec2, rng), random_coeffs(other, rng)])
    with pytest.raises(DomainError):
        compute_mean([])


def test_center_examples(spec2):
    rng = np.random.default_rng(3)
    v = random_coeffs(spec2, rng)
    mean = compute_mean([v])
    c = center(v, mean)
    assert np.max(np.abs(c.block(0))) == 0.0
    untouched = center(v, np.zeros(spec2.S[0], dtype=np.complex128))
    assert np.array_equal(untouched.data, v.data)
    # mean of centered data is zero
    vs = [random_coeffs(spec2, rng) for _ in range(5)]
    mean = compute_mean(vs)
    recentered = compute_mean([center(v, mean) for v in vs])
    assert np.max(np.abs(recentered)) < 1e-14
    with pytest.raises(DomainError):
        center(v, np.zeros(spec2.S[0] + 1, dtype=np.complex128))


def test_covariance_centered_radial_sample_is_zero(spec2):
    data = zero_vec(spec2)
    data[spec2.block_slice(0)] = [1.0, 2.0, -0.5]
    v = CoefficientVector(spec2, data)
    mean = compute_mean([v])
    cov = accumulate_covariance([center(v, mean)])
    for block in cov.blocks:
        assert np.all(block == 0.0)


def test_covariance_five_thirds_example():
    spec = build_basis(1, 2 * np.pi)
    data = np.zeros(spec.D, dtype=np.complex128)
    data[spec.index(1, -1, 1)] = 1.0
    data[spec.index(1, 1, 1)] = 2.0j
    cov = accumulate_covariance([CoefficientVector(spec, data)])
    assert cov.blocks[1] == pytest.approx(np.array([[5.0 / 3.0]]))
    cov.validate()


def test_covariance_matches_haar_oracle():
    spec = build_basis(2, 2.6 * np.pi)
    rng = np.random.default_rng(4)
    vecs = [random_coeffs(spec, rng) for _ in range(4)]
    mean = compute_mean(vecs)
    centered = [center(v, mean) for v in vecs]
    cov = accumulate_covariance(centered)
    dense = haar_quadrature_covariance(centered)
    assert np.max(np.abs(dense - expand_block_covariance(cov))) < 1e-10 * cov.trace()


def test_covariance_rotation_invariance(spec2):
    rng = np.random.default_rng(5)
    vecs = [random_coeffs(spec2, rng) for _ in range(6)]
    cov = build_covariance(vecs)
    rotated = [rotate_coeffs(spec2, v, haar_angles(rng)) for v in vecs]
    cov_rot = build_covariance(rotated)
    for ell in range(spec2.L + 1):
        scale = max(1.0, float(np.max(np.abs(cov.blocks[ell]))))
        assert np.max(np.abs(cov.blocks[ell] - cov_rot.blocks[ell])) < 1e-10 * scale


def test_covariance_reflection_invariance_bitwise(spec2):
    rng = np.random.default_rng(6)
    vecs = [random_coeffs(spec2, rng) for _ in range(5)]
    cov = build_covariance(vecs)
    cov_ref = build_covariance([reflect_coeffs(spec2, v) for v in vecs])
    assert np.array_equal(cov.mean_radial, cov_ref.mean_radial)
    for a, b in zip(cov.blocks, cov_ref.blocks):
        assert np.array_equal(a, b)


def test_covariance_threads_match_serial(spec2):
    rng = np.random.default_rng(7)
    vecs = [random_coeffs(spec2, rng) for _ in range(32)]
    c1 = build_covariance(vecs, n_threads=1)
    c4 = build_covariance(vecs, n_threads=4)
    for a, b in zip(c1.blocks, c4.blocks):
        scale = max(1.0, float(np.max(np.abs(a))))
        assert np.max(np.abs(a - b)) < 1e-12 * scale


def test_o3_augmentation_is_byte_identical(spec2):
    rng = np.random.default_rng(8)
    vecs = [random_coeffs(spec2, rng) for _ in range(5)]
    plain = build_covariance(vecs)
    o3 = build_covariance(vecs, o3=True)
    assert np.array_equal(plain.mean_radial, o3.mean_radial)
    for a, b in zip(plain.blocks, o3.blocks):
        assert np.array_equal(a, b)


def identity_covariance(spec):
    blocks = [np.eye(spec.S[ell], dtype=np.complex128) for ell in range(spec.L + 1)]
    return BlockCovariance(
        spec=spec, n=1, mean_radial=np.zeros(spec.S[0], dtype=np.complex128), blocks=blocks
    )


def test_eigendecompose_tie_break(spec2):
    basis = eigendecompose(identity_covariance(spec2))
    assert np.all(basis.lambdas == 1.0)
    want = [(ell, s) for ell in range(spec2.L + 1) for s in range(1, spec2.S[ell] + 1)]
    assert list(zip(basis.ells, basis.ss)) == want


def test_eigendecompose_diagonal_example():
    spec = build_basis(0, 2.5 * np.pi)  # S(0) = 2
    cov = BlockCovariance(
        spec=spec,
        n=1,
        mean_radial=np.zeros(2, dtype=np.complex128),
        blocks=[np.diag([3.0, 1.0]).astype(np.complex128)],
    )
    basis = eigendecompose(cov)
    assert basis.lambdas[0] == 3.0
    assert np.array_equal(basis.vectors[0], [1.0, 0.0])
    assert (basis.ells[0], basis.ss[0]) == (0, 1)


def test_eigendecompose_reconstructs_block(spec2):
    rng = np.random.default_rng(9)
    vecs = [random_coeffs(spec2, rng) for _ in range(6)]
    cov = build_covariance(vecs)
    basis = eigendecompose(cov)
    for ell in range(spec2.L + 1):
        idx = [j for j in range(basis.D_prime) if basis.ells[j] == ell]
        V = np.column_stack([basis.vectors[j] for j in idx])
        lam = basis.lambdas[idx]
        rebuilt = (V * lam) @ V.conj().T
        assert np.max(np.abs(rebuilt - cov.blocks[ell])) < 1e-10 * max(1.0, lam.max())
        # per-degree eigenvectors stay orthonormal
        assert np.max(np.abs(V.conj().T @ V - np.eye(len(idx)))) < 1e-10


def test_eigendecompose_phase_fix(spec2):
    rng = np.random.default_rng(10)
    vecs = [random_coeffs(spec2, rng) for _ in range(6)]
    basis = eigendecompose(build_covariance(vecs))
    for v in basis.vectors:
        pivot = int(np.argmax(np.abs(v)))
        assert v[pivot].imag == 0.0
        assert v[pivot].real > 0.0


def test_eigendecompose_rejects_indefinite_blocks(spec2):
    blocks = [np.zeros((spec2.S[ell],) * 2, dtype=np.complex128) for ell in range(spec2.L + 1)]
    blocks[0][0, 0] = 1.0
    blocks[0][1, 1] = -0.5  # far below the roundoff clamp
    cov = BlockCovariance(
        spec=spec2, n=1, mean_radial=np.zeros(spec2.S[0], dtype=np.complex128), blocks=blocks
    )
    from ballpca.errors import NumericalError

    with pytest.raises(NumericalError, match="l=0"):
        eigendecompose(cov)


def test_project_parseval_and_roundtrip(spec2):
    rng = np.random.default_rng(11)
    vecs = [random_coeffs(spec2, rng) for _ in range(6)]
    basis = eigendecompose(build_covariance(vecs))
    f = random_coeffs(spec2, rng)
    alpha = project(f, basis, basis.D)
    assert float(np.sum(np.abs(alpha) ** 2)) == pytest.approx(f.norm2(), rel=1e-10)
    back = reconstruct(alpha, basis)
    assert np.max(np.abs(back.data - f.data)) < 1e-10


def test_project_eigenvolume_indicator(spec2):
    rng = np.random.default_rng(12)
    vecs = [random_coeffs(spec2, rng) for _ in range(6)]
    basis = eigendecompose(build_covariance(vecs))
    j = 4  # arbitrary expanded position
    indicator = np.zeros(basis.D, dtype=np.complex128)
    indicator[j] = 1.0
    f = reconstruct(indicator, basis)
    alpha = project(f, basis, basis.D)
    assert alpha[j] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(np.delete(alpha, j))) < 1e-12


def test_project_domain_errors(spec2):
    rng = np.random.default_rng(13)
    basis = eigendecompose(build_covariance([random_coeffs(spec2, rng) for _ in range(3)]))
    f = random_coeffs(spec2, rng)
    with pytest.raises(DomainError):
        project(f, basis, 0)
    with pytest.raises(DomainError):
        project(f, basis, basis.D + 1)
    with pytest.raises(DomainError):
        reconstruct(np.zeros(3, dtype=np.complex128), basis, d=5)


def test_reconstruct_zero(spec2):
    rng = np.random.default_rng(14)
    basis = eigendecompose(build_covariance([random_coeffs(spec2, rng) for _ in range(3)]))
    out = reconstruct(np.zeros(basis.D, dtype=np.complex128), basis)
    assert np.all(out.data == 0.0)


def rank_r_dataset(spec, n, rank, seed):
    return generate_synthetic_dataset(spec, n, rank, 0.0, seed)


def test_low_rank_recovery(spec2):
    vecs = rank_r_dataset(spec2, 12, 3, seed=100)
    cov = build_covariance(vecs)
    basis = eigendecompose(cov)
    d = select_rank(basis, gap=True)
    groups = 3
    assert d == int(np.sum(2 * basis.ells[:groups] + 1))
    for v in vecs:
        alpha = project(center(v, cov.mean_radial), basis, d)
        rec = reconstruct(alpha, basis, d)
        rec.data[spec2.block_slice(0)] += cov.mean_radial
        rel = np.linalg.norm(rec.data - v.data) / np.linalg.norm(v.data)
        assert rel < 1e-8


def test_energy_curve_examples(spec2):
    rng = np.random.default_rng(15)
    vecs = [random_coeffs(spec2, rng) for _ in range(6)]
    basis = eigendecompose(build_covariance(vecs))
    f = random_coeffs(spec2, rng)
    for tag in ("pca", "bh_sorted_abs", "bh_sorted_uls"):
        curve = energy_curve(f, tag, basis=basis)
        assert curve.values[-1] == 1.0
        assert np.all(np.diff(curve.values) >= -1e-15)
    # alpha = (2, 1, 0, ...) -> w(1) = 4/5
    alpha = np.zeros(basis.D, dtype=np.complex128)
    alpha[0], alpha[1] = 2.0, 1.0
    f2 = reconstruct(alpha, basis)
    curve = energy_curve(f2, "pca", basis=basis)
    assert curve.values[0] == pytest.approx(0.8, abs=1e-12)


def test_energy_curve_zero_vector_error(spec2):
    f = CoefficientVector(spec2, np.zeros(spec2.D, dtype=np.complex128))
    with pytest.raises(DomainError, match="undefined energy ratio"):
        energy_curve(f, "bh_sorted_abs")


def test_energy_curve_uls_ordering(spec2):
    rng = np.random.default_rng(16)
    f = random_coeffs(spec2, rng)
    # kill one coefficient; it must sort to the very end
    data = f.data.copy()
    data[spec2.index(0, 0, 1)] = 0.0  # smallest u would otherwise come first
    f = CoefficientVector(spec2, data)
    curve = energy_curve(f, "bh_sorted_uls")
    # first component is now u_{1,1} (the smallest retained u with energy)
    first_u_energy = float(curve.values[0])
    e = np.abs(f.data) ** 2
    expected_first = np.max(e[spec2.block_slice(1)][0:1])  # (l=1, m=-1, s=1)
    assert first_u_energy == pytest.approx(expected_first / e.sum(), rel=1e-12)


def test_pca_curve_dominates_on_low_rank(spec2):
    vecs = rank_r_dataset(spec2, 12, 3, seed=200)
    cov = build_covariance(vecs)
    basis = eigendecompose(cov)
    d = select_rank(basis, gap=True)
    f = vecs[0]
    pca = energy_curve(f, "pca", basis=basis)
    abs_curve = energy_curve(f, "bh_sorted_abs")
    uls_curve = energy_curve(f, "bh_sorted_uls")
    # PCA saturates at the true rank span; both fixed-basis orderings still
    # miss energy there
    assert pca.values[d - 1] > 1.0 - 1e-10
    assert abs_curve.values[d - 1] < 1.0 - 1e-6
    assert uls_curve.values[d - 1] < 1.0 - 1e-6
    assert np.all(pca.values[d - 1 :] > 1.0 - 1e-10)


def test_eigenvalue_multiplicity_in_dense_spectrum():
    spec = build_basis(2, 2.6 * np.pi)
    rng = np.random.default_rng(17)
    vecs = [random_coeffs(spec, rng) for _ in range(4)]
    mean = compute_mean(vecs)
    centered = [center(v, mean) for v in vecs]
    cov = accumulate_covariance(centered, mean_radial=mean)
    basis = eigendecompose(cov)
    dense = haar_quadrature_covariance(centered)
    dense_eigs = np.linalg.eigvalsh(dense)
    tol = 1e-10 * max(1.0, float(dense_eigs.max()))
    for j in range(basis.D_prime):
        lam, ell = basis.lambdas[j], int(basis.ells[j])
        count = int(np.sum(np.abs(dense_eigs - lam) <= tol))
        assert count >= 2 * ell + 1


def test_select_rank_criteria(spec2):
    vecs = rank_r_dataset(spec2, 12, 3, seed=300)
    basis = eigendecompose(build_covariance(vecs))
    assert select_rank(basis, d=5) == 5
    with pytest.raises(DomainError):
        select_rank(basis, d=0)
    with pytest.raises(DomainError):
        select_rank(basis, d=3, energy=0.9)
    full = select_rank(basis, energy=1.0)
    nonzero_span = int(np.sum((2 * basis.ells + 1) * (basis.lambdas > 1e-12 * basis.lambdas[0])))
    assert full == nonzero_span
    d_gap = select_rank(basis, gap=True)
    assert d_gap == nonzero_span
    assert select_rank(basis) == basis.D
    # mid-range threshold: smallest d whose expanded-eigenvalue mass reaches tau
    expanded = np.repeat(basis.lambdas, 2 * basis.ells + 1)
    frac = np.cumsum(expanded) / expanded.sum()
    for tau in (0.3, 0.5, 0.9):
        want = int(np.argmax(frac >= tau - 1e-12)) + 1
        assert select_rank(basis, energy=tau) == want
