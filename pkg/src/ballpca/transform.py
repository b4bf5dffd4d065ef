"""Volume <-> coefficient transforms and coefficient-space group actions.

Expansion is a discrete inner product against the basis on a quadrature grid
(divided by the basis norm 8); synthesis evaluates the truncated sum. On a
grid from ``build_grid`` the two are exact mutual inverses for band-limited
data. The azimuthal direction uses the FFT (the grid is uniform in phi), the
polar direction contracts the normalized Legendre table, the radial
direction contracts per-degree Bessel matrices.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import trilinear_interpolate
from .basis import build_grid, grid_tables
from .errors import DataError, DomainError
from .harmonics import WIGNER_L_MAX, legendre_normalized, sph_bessel, wigner_D_matrix

BASIS_NORM2 = 8.0  # squared L2 norm of every basis function (4/|j_{l+1}| radial scaling)

_SYNTH_CHUNK = 32768


@dataclass(eq=False)
class CoefficientVector:
    """Complex expansion coefficients f_{lms} in the canonical layout.

    ``real_volume`` marks vectors expanded from real-valued volumes; such
    vectors satisfy f_{l,-m,s} = (-1)^m conj(f_{lms}), checked on
    construction.
    """

    spec: object
    data: np.ndarray
    real_volume: bool = False

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if self.data.shape != (self.spec.D,):
            raise DomainError(
                f"coefficient vector has {self.data.shape} entries, spec needs ({self.spec.D},)"
            )
        if not np.all(np.isfinite(self.data)):
            raise DataError("coefficient vector contains non-finite values")
        if self.real_volume:
            defect = real_symmetry_defect(self.spec, self.data)
            scale = max(1.0, float(np.max(np.abs(self.data))))
            if defect > 1e-10 * scale:
                raise DomainError(
                    f"coefficients violate the real-volume symmetry (defect {defect:.3e})"
                )

    def block(self, ell):
        """(2l+1, S(l)) view of the degree-l coefficients, rows m = -l..l."""
        S = self.spec.S[ell]
        return self.data[self.spec.block_slice(ell)].reshape(2 * ell + 1, S)

    def norm2(self):
        return float(np.sum(np.abs(self.data) ** 2))

    def copy(self):
        return CoefficientVector(self.spec, self.data.copy(), self.real_volume)


@dataclass(eq=False)
class VoxelGrid:
    """Real samples on an N^3 grid over [-1,1]^3, x fastest in memory."""

    N: int
    data: np.ndarray

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"voxel grid side must be >= 2, got {self.N}")
        self.data = np.ascontiguousarray(self.data, dtype=np.float64).reshape(-1)
        if self.data.shape != (self.N**3,):
            raise DomainError(
                f"voxel payload has {self.data.size} values, expected N^3 = {self.N**3}"
            )
        if not np.all(np.isfinite(self.data)):
            raise DataError("voxel grid contains non-finite values")

    @property
    def data3d(self):
        """(N, N, N) view indexed [z, y, x]."""
        return self.data.reshape(self.N, self.N, self.N)

    def coords1d(self):
        return np.linspace(-1.0, 1.0, self.N)


def sph_to_cart(points):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    r, theta, phi = points[:, 0], points[:, 1], points[:, 2]
    st = np.sin(theta)
    return np.column_stack([r * st * np.cos(phi), r * st * np.sin(phi), r * np.cos(theta)])


def cart_to_sph(points):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    r = np.linalg.norm(points, axis=1)
    safe = np.where(r > 0.0, r, 1.0)
    theta = np.arccos(np.clip(points[:, 2] / safe, -1.0, 1.0))
    phi = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    return np.column_stack([r, theta, phi])


# Expansion/synthesis tables are memoized; strong refs keep ids stable.
_table_cache = {}


def _tables(spec, grid):
    key = (id(spec), id(grid))
    hit = _table_cache.get(key)
    if hit is not None:
        return hit[2], hit[3]
    leg, radial = grid_tables(spec, grid)
    if len(_table_cache) > 8:
        _table_cache.clear()
    _table_cache[key] = (spec, grid, leg, radial)
    return leg, radial


def _signed_legendre_rows(spec, leg, ell):
    """Rows m = -l..l of sign-corrected Legendre values: Y = row * e^{i m phi}."""
    S_rows = np.empty((2 * ell + 1, leg.shape[1]))
    base = ell * (ell + 1) // 2
    for m in range(0, ell + 1):
        row = leg[base + m]
        S_rows[ell + m] = row
        if m > 0:
            S_rows[ell - m] = row if m % 2 == 0 else -row
    return S_rows


def expand_function(spec, grid, samples):
    """Coefficients of samples given at every grid node (canonical node order).

    f_{lms} = (1/8) * quadrature< samples, basis_{lms} >; exact when the
    samples come from a function inside the retained band limit.
    """
    samples = np.asarray(samples)
    if samples.size != grid.n_nodes:
        raise DomainError(
            f"sample array has {samples.size} values, grid has {grid.n_nodes} nodes"
        )
    F = samples.reshape(grid.shape).astype(np.complex128)
    K = grid.n_phi
    if K < 2 * spec.L + 1:
        raise DomainError("grid azimuthal count must exceed 2L for expansion")
    G = np.fft.fft(F, axis=2) * (2.0 * np.pi / K)
    leg, radial = _tables(spec, grid)
    out = np.zeros(spec.D, dtype=np.complex128)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        rows = _signed_legendre_rows(spec, leg, ell) * grid.polar_w[None, :]
        bins = np.mod(np.arange(-ell, ell + 1), K)
        # H[m, i] = sum_j G[i, j, bin(m)] * rows[m, j]
        H = np.einsum("ijm,mj->mi", G[:, :, bins], rows, optimize=True)
        Rw = radial[ell] * grid.radial_w[None, :]
        block = H @ Rw.T / BASIS_NORM2
        out[spec.block_slice(ell)] = block.reshape(-1)
    return CoefficientVector(spec, out)


def synthesize_on_grid(spec, grid, coeffs):
    """Evaluate the expansion at every grid node; inverse of expand_function."""
    if coeffs.spec is not spec and not coeffs.spec.same_layout(spec):
        raise DomainError("coefficient vector does not match the requested basis")
    K = grid.n_phi
    if K < 2 * spec.L + 1:
        raise DomainError("grid azimuthal count must exceed 2L for synthesis")
    leg, radial = _tables(spec, grid)
    nr, nt, _ = grid.shape
    C = np.zeros((nr, nt, K), dtype=np.complex128)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        rows = _signed_legendre_rows(spec, leg, ell)
        A = coeffs.block(ell) @ radial[ell]  # (2l+1, nr)
        bins = np.mod(np.arange(-ell, ell + 1), K)
        for mi in range(2 * ell + 1):
            C[:, :, bins[mi]] += np.outer(A[mi], rows[mi])
    return np.fft.ifft(C, axis=2) * K


def synthesize(spec, coeffs, points):
    """Evaluate the expansion at arbitrary (r, theta, phi) points."""
    if coeffs.spec is not spec and not coeffs.spec.same_layout(spec):
        raise DomainError("coefficient vector does not match the requested basis")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.ndim != 2 or points.shape[1] != 3:
        raise DomainError("points must be an (n, 3) array of (r, theta, phi)")
    if np.any(points[:, 0] > 1.0 + 1e-12) or np.any(points[:, 0] < 0.0):
        raise DomainError("synthesis points must satisfy 0 <= r <= 1")
    if np.any(points[:, 0] > 1.0):  # rotation roundoff can overshoot by ulps
        points = points.copy()
        points[:, 0] = np.minimum(points[:, 0], 1.0)
    out = np.empty(points.shape[0], dtype=np.complex128)
    for lo in range(0, points.shape[0], _SYNTH_CHUNK):
        chunk = points[lo : lo + _SYNTH_CHUNK]
        out[lo : lo + _SYNTH_CHUNK] = _synthesize_chunk(spec, coeffs, chunk)
    return out


def _synthesize_chunk(spec, coeffs, points):
    r = points[:, 0]
    x = np.cos(points[:, 1])
    phi = points[:, 2]
    leg = legendre_normalized(spec.L, x)  # (tri, P)
    phase = np.exp(1j * np.outer(np.arange(spec.L + 1), phi))  # (L+1, P)
    vals = np.zeros(points.shape[0], dtype=np.complex128)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        rad = spec.norms[ell][None, :] * sph_bessel(ell, np.outer(r, spec.zeros[ell]))
        A = rad @ coeffs.block(ell).T  # (P, 2l+1)
        base = ell * (ell + 1) // 2
        acc = A[:, ell] * leg[base]
        for m in range(1, ell + 1):
            row = leg[base + m]
            pos = row * phase[m]
            neg = np.conj(pos) if m % 2 == 0 else -np.conj(pos)
            acc += A[:, ell + m] * pos + A[:, ell - m] * neg
        vals += acc
    return vals


def resample_voxels(vox, grid):
    """Trilinear samples of a voxel volume at the grid nodes; voxels outside
    the unit ball count as zero (the expansion assumes ball support)."""
    axis = vox.coords1d()
    zz, yy, xx = np.meshgrid(axis, axis, axis, indexing="ij")
    masked = np.where(xx * xx + yy * yy + zz * zz <= 1.0, vox.data3d, 0.0)
    return trilinear_interpolate(masked, grid.points_cartesian())


def expand_voxels(spec, vox):
    """Expand a sampled volume: trilinear resample onto the quadrature grid,
    then quadrature expansion. Accuracy is limited by interpolation (O(h^2)),
    not by the quadrature."""
    if vox.N < 4:
        raise DomainError(f"voxel expansion needs N >= 4, got N={vox.N}")
    grid = build_grid(spec)
    samples = resample_voxels(vox, grid)
    coeffs = expand_function(spec, grid, samples)
    return CoefficientVector(spec, coeffs.data, real_volume=True)


def real_symmetry_defect(spec, data):
    """Max deviation from f_{l,-m,s} = (-1)^m conj(f_{lms})."""
    worst = 0.0
    for ell in range(spec.L + 1):
        if spec.S[ell] == 0:
            continue
        block = data[spec.block_slice(ell)].reshape(2 * ell + 1, spec.S[ell])
        for m in range(1, ell + 1):
            sign = 1.0 if m % 2 == 0 else -1.0
            diff = block[ell - m] - sign * np.conj(block[ell + m])
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def rotate_coeffs(spec, coeffs, angles):
    """Coefficients of the rotated volume: per-(l, s) Wigner-D action."""
    if coeffs.spec is not spec and not coeffs.spec.same_layout(spec):
        raise DomainError("coefficient vector does not match the requested basis")
    if spec.L > WIGNER_L_MAX:
        raise DomainError(
            f"rotation supports L <= {WIGNER_L_MAX} (explicit-sum Wigner matrices)"
        )
    out = np.empty_like(coeffs.data)
    for ell in range(spec.L + 1):
        if spec.S[ell] == 0:
            continue
        D = wigner_D_matrix(ell, angles)
        out[spec.block_slice(ell)] = (D @ coeffs.block(ell)).reshape(-1)
    return CoefficientVector(spec, out)


_sign_cache = {}


def reflection_signs(spec):
    """(-1)^(l+m) per coefficient: reflection through the xy-plane."""
    key = (spec.L, spec.band_limit)
    hit = _sign_cache.get(key)
    if hit is not None:
        return hit
    signs = np.empty(spec.D)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        m_signs = np.array([(-1.0) ** (ell + m) for m in range(-ell, ell + 1)])
        signs[spec.block_slice(ell)] = np.repeat(m_signs, S)
    _sign_cache[key] = signs
    return signs


def reflect_coeffs(spec, coeffs):
    """Coefficients of the volume reflected in the xy-plane."""
    if coeffs.spec is not spec and not coeffs.spec.same_layout(spec):
        raise DomainError("coefficient vector does not match the requested basis")
    return CoefficientVector(spec, coeffs.data * reflection_signs(spec))


def basis_design_matrix(spec, grid):
    """(n_nodes, D) matrix of basis values at the grid nodes (test support).

    Column order matches the canonical layout; Gram = B^H diag(w) B must be
    8 * identity on an exact grid.
    """
    leg, radial = _tables(spec, grid)
    nr, nt, K = grid.shape
    phase = np.exp(1j * 2.0 * np.pi * np.outer(np.arange(spec.L + 1), np.arange(K)) / K)
    B = np.empty((nr * nt * K, spec.D), dtype=np.complex128)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        rows = _signed_legendre_rows(spec, leg, ell)
        for m in range(-ell, ell + 1):
            ph = phase[abs(m)] if m >= 0 else np.conj(phase[abs(m)])
            ang = np.outer(rows[ell + m], ph).reshape(-1)  # (nt*K,)
            cols = spec.offsets[ell] + (m + ell) * S + np.arange(S)
            B[:, cols] = np.einsum("sr,a->ras", radial[ell], ang, optimize=True).reshape(
                nr * nt * K, S
            )
    return B
