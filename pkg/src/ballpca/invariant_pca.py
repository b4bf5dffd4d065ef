"""Rotation-invariant PCA in coefficient space.

Averaging a dataset over all 3D rotations collapses its covariance, in the
ball-harmonics basis, to a block-diagonal matrix: one Hermitian S(l) x S(l)
block per degree l,

    C_l(s, s') = 1/(n (2l+1)) sum_i sum_m f_{lms}^(i) conj(f_{lms'}^(i)),

with each block appearing 2l+1 times (once per m). The implied full D x D
matrix is never materialized; eigenvectors come from the small blocks and
expand to eigenvolumes by pairing each radial eigenvector with one Y_l^m.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .transform import CoefficientVector, reflect_coeffs


@dataclass(eq=False)
class BlockCovariance:
    """Per-degree covariance blocks plus the stored radial mean."""

    spec: object
    n: int
    mean_radial: np.ndarray  # (S(0),) complex
    blocks: list  # index l -> (S(l), S(l)) complex Hermitian

    def __post_init__(self):
        self.mean_radial = np.asarray(self.mean_radial, dtype=np.complex128)
        if self.mean_radial.shape != (self.spec.S[0],):
            raise DomainError("mean_radial length must equal S(0)")
        if self.n < 1:
            raise DomainError("covariance needs n >= 1 samples")
        if len(self.blocks) != self.spec.L + 1:
            raise DomainError("covariance needs one block per degree l = 0..L")

    def trace(self):
        """Trace of the implied full matrix: sum_l (2l+1) tr C_l."""
        return float(
            sum((2 * ell + 1) * np.real(np.trace(b)) for ell, b in enumerate(self.blocks))
        )

    def validate(self):
        """Check Hermitian symmetry and PSD-within-roundoff invariants."""
        total = self.trace()
        tol_psd = 1e-10 * max(total, 1e-300)
        for ell, block in enumerate(self.blocks):
            if block.shape != (self.spec.S[ell], self.spec.S[ell]):
                raise DomainError(f"block l={ell} has shape {block.shape}")
            if block.size == 0:
                continue
            herm = float(np.max(np.abs(block - block.conj().T)))
            if herm > 1e-12 * max(1.0, float(np.max(np.abs(block)))):
                raise NumericalError(f"covariance block l={ell} not Hermitian ({herm:.3e})")
            lo = float(np.linalg.eigvalsh(block)[0])
            if lo < -tol_psd:
                raise NumericalError(
                    f"covariance block l={ell} has eigenvalue {lo:.3e} below -1e-10*trace"
                )
        return self


def _check_shared_spec(vectors):
    if len(vectors) == 0:
        raise DomainError("need at least one coefficient vector")
    spec = vectors[0].spec
    for v in vectors[1:]:
        if v.spec is not spec and not v.spec.same_layout(spec):
            raise DomainError("coefficient vectors mix different basis specs")
    return spec


def compute_mean(vectors):
    """Rotation-averaged dataset mean: only l = 0 coefficients survive.

    Averaging any volume over SO(3) kills every m != 0 or l != 0 component
    (Wigner-D rows of positive degree integrate to zero), so the mean is the
    radially symmetric function with coefficients <f_{00s}>.
    """
    spec = _check_shared_spec(vectors)
    acc = np.zeros(spec.S[0], dtype=np.complex128)
    for v in vectors:
        acc += v.block(0)[0]
    return acc / len(vectors)


def center(coeffs, mean_radial):
    """Subtract the radial mean from the l = 0 coefficients only."""
    mean_radial = np.asarray(mean_radial, dtype=np.complex128)
    if mean_radial.shape != (coeffs.spec.S[0],):
        raise DomainError(
            f"mean has {mean_radial.shape} entries, S(0) = {coeffs.spec.S[0]}"
        )
    data = coeffs.data.copy()
    data[coeffs.spec.block_slice(0)] -= mean_radial
    return CoefficientVector(coeffs.spec, data)


def _gram_blocks(spec, stacked):
    """Per-l upper-mirrored Gram sums over all (sample, m) slices."""
    out = []
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            out.append(np.zeros((0, 0), dtype=np.complex128))
            continue
        X = stacked[:, spec.block_slice(ell)].reshape(-1, S)
        out.append(X.T @ X.conj())
    return out


def _gram_sums(spec, vectors, n_threads):
    stacked = np.vstack([v.data[None, :] for v in vectors])
    if n_threads > 1 and len(vectors) >= 2 * n_threads:
        shards = np.array_split(stacked, n_threads, axis=0)
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            partials = list(pool.map(lambda sh: _gram_blocks(spec, sh), shards))
        sums = partials[0]
        for part in partials[1:]:
            sums = [a + b for a, b in zip(sums, part)]
        return sums
    return _gram_blocks(spec, stacked)


def _blocks_from_grams(spec, sums, n_total):
    blocks = []
    for ell, G in enumerate(sums):
        if G.size == 0:
            blocks.append(G)
            continue
        C = G / (n_total * (2 * ell + 1))
        C = np.triu(C) + np.triu(C, 1).conj().T
        np.fill_diagonal(C, np.real(np.diagonal(C)))
        blocks.append(C)
    return blocks


def accumulate_covariance(vectors, n=None, mean_radial=None, n_threads=1):
    """Block covariance of centered coefficient vectors (single pass).

    Shards the sample list when n_threads > 1; shard results merge by
    addition in shard order, so totals match the serial path to roundoff.
    """
    spec = _check_shared_spec(vectors)
    if n is None:
        n = len(vectors)
    if n != len(vectors):
        raise DomainError(f"sample count {n} does not match {len(vectors)} vectors")
    if mean_radial is None:
        mean_radial = np.zeros(spec.S[0], dtype=np.complex128)
    sums = _gram_sums(spec, vectors, n_threads)
    blocks = _blocks_from_grams(spec, sums, n)
    return BlockCovariance(spec=spec, n=n, mean_radial=mean_radial, blocks=blocks)


def build_covariance(vectors, n_threads=1, o3=False):
    """Convenience pipeline: mean, center, accumulate.

    With ``o3=True`` the dataset is augmented with its xy-plane reflections
    before averaging. Every reflected contribution equals its original
    bitwise (the summand picks up |(-1)^(l+m)|^2 = 1), so the result is
    byte-identical to the plain pipeline; the code still performs the
    augmentation literally, two same-order passes merged exactly.
    """
    spec = _check_shared_spec(vectors)
    mean_radial = compute_mean(vectors)
    if o3:
        reflected = [reflect_coeffs(spec, v) for v in vectors]
        mean_radial = 0.5 * (mean_radial + compute_mean(reflected))
        centered = [center(v, mean_radial) for v in vectors]
        centered_r = [center(v, mean_radial) for v in reflected]
        sums = _gram_sums(spec, centered, n_threads)
        sums_r = _gram_sums(spec, centered_r, n_threads)
        merged = [a + b for a, b in zip(sums, sums_r)]
        blocks = _blocks_from_grams(spec, merged, 2 * len(vectors))
        return BlockCovariance(
            spec=spec, n=len(vectors), mean_radial=mean_radial, blocks=blocks
        )
    centered = [center(v, mean_radial) for v in vectors]
    return accumulate_covariance(centered, mean_radial=mean_radial, n_threads=n_threads)


@dataclass(eq=False)
class PrincipalBasis:
    """Eigenpairs of the block covariance, globally ordered.

    Compact entries (one per eigenpair of some C_l) are sorted by decreasing
    eigenvalue, ties broken by (l, s) ascending; ``s`` labels the eigenpair's
    rank inside its own block. Each compact entry j expands to 2l+1
    consecutive eigenvolumes, ordered by m = -l..l, in the expanded index.
    """

    spec: object
    ells: np.ndarray  # (D',) degree of each compact entry
    ss: np.ndarray  # (D',) 1-based rank inside the block
    lambdas: np.ndarray  # (D',) non-increasing
    vectors: list  # (D',) complex arrays of length S(l)
    mean_radial: np.ndarray
    entry_offsets: np.ndarray = field(init=False)  # (D'+1,) expanded starts
    exp_ell: np.ndarray = field(init=False)  # (D,)
    exp_m: np.ndarray = field(init=False)  # (D,)
    exp_compact: np.ndarray = field(init=False)  # (D,) compact index

    def __post_init__(self):
        self.ells = np.asarray(self.ells, dtype=np.int64)
        self.ss = np.asarray(self.ss, dtype=np.int64)
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64)
        self.mean_radial = np.asarray(self.mean_radial, dtype=np.complex128)
        widths = 2 * self.ells + 1
        offsets = np.concatenate([[0], np.cumsum(widths)])
        if offsets[-1] != self.spec.D:
            raise DomainError("expanded entries do not cover the coefficient space")
        self.entry_offsets = offsets
        self.exp_ell = np.repeat(self.ells, widths)
        self.exp_m = np.concatenate(
            [np.arange(-ell, ell + 1) for ell in self.ells]
        ) if len(self.ells) else np.zeros(0, dtype=np.int64)
        self.exp_compact = np.repeat(np.arange(len(self.ells)), widths)

    @property
    def D(self):
        return self.spec.D

    @property
    def D_prime(self):
        return len(self.ells)


def eigendecompose(cov):
    """Per-block Hermitian eigendecomposition with deterministic ordering.

    Eigenvalues within -1e-10 * trace of zero clamp to zero; eigenvector
    phases are fixed by making the largest-magnitude entry real positive, so
    repeated runs produce identical files.
    """
    spec = cov.spec
    tol = 1e-10 * max(cov.trace(), 1e-300)
    entries = []
    for ell in range(spec.L + 1):
        block = cov.blocks[ell]
        if block.size == 0:
            continue
        try:
            w, V = np.linalg.eigh(block)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed on block l={ell}") from exc
        w = w[::-1]
        V = V[:, ::-1]
        if w[-1] < -tol:
            raise NumericalError(
                f"block l={ell} eigenvalue {w[-1]:.3e} below the PSD roundoff tolerance"
            )
        w = np.maximum(w, 0.0)
        for rank in range(w.size):
            v = V[:, rank].copy()
            pivot = int(np.argmax(np.abs(v)))
            mag = abs(v[pivot])
            if mag > 0.0:
                v *= np.conj(v[pivot]) / mag
                v[pivot] = abs(v[pivot])  # exact real pivot
            entries.append((float(w[rank]), ell, rank + 1, v))
    entries.sort(key=lambda e: (-e[0], e[1], e[2]))
    return PrincipalBasis(
        spec=spec,
        ells=np.array([e[1] for e in entries], dtype=np.int64),
        ss=np.array([e[2] for e in entries], dtype=np.int64),
        lambdas=np.array([e[0] for e in entries], dtype=np.float64),
        vectors=[e[3] for e in entries],
        mean_radial=cov.mean_radial,
    )


def project(coeffs, basis, d):
    """First d principal coefficients alpha_j = <f_{l_j m_j .}, v_j>."""
    if not (1 <= d <= basis.D):
        raise DomainError(f"d must lie in [1, {basis.D}], got {d}")
    if coeffs.spec is not basis.spec and not coeffs.spec.same_layout(basis.spec):
        raise DomainError("coefficient vector does not match the basis spec")
    alpha = np.empty(d, dtype=np.complex128)
    for j in range(basis.D_prime):
        lo = basis.entry_offsets[j]
        if lo >= d:
            break
        hi = min(int(basis.entry_offsets[j + 1]), d)
        ell = int(basis.ells[j])
        vals = coeffs.block(ell) @ np.conj(basis.vectors[j])  # (2l+1,)
        alpha[lo:hi] = vals[: hi - lo]
    return alpha


def reconstruct(alpha, basis, d=None):
    """Coefficient vector of sum_{j<=d} alpha_j psi_j."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    if alpha.ndim != 1:
        raise DomainError("alpha must be a 1-d array")
    if d is None:
        d = alpha.size
    if d != alpha.size or not (1 <= d <= basis.D):
        raise DomainError(f"alpha length {alpha.size} and d={d} must match and lie in [1, D]")
    data = np.zeros(basis.spec.D, dtype=np.complex128)
    for j in range(basis.D_prime):
        lo = int(basis.entry_offsets[j])
        if lo >= d:
            break
        hi = min(int(basis.entry_offsets[j + 1]), d)
        ell = int(basis.ells[j])
        S = basis.spec.S[ell]
        block = data[basis.spec.block_slice(ell)].reshape(2 * ell + 1, S)
        block[: hi - lo] += np.outer(alpha[lo:hi], basis.vectors[j])
    return CoefficientVector(basis.spec, data)


@dataclass(eq=False)
class EnergyCurve:
    """Cumulative captured-energy fractions w(1..D) for one ordering."""

    values: np.ndarray
    basis_tag: str


_uls_cache = {}


def _expanded_uls_keys(spec):
    """Per canonical index: (u_{ls}, l, m) arrays for the u-sorted ordering."""
    key = (spec.L, spec.band_limit)
    hit = _uls_cache.get(key)
    if hit is not None:
        return hit
    u = np.empty(spec.D)
    ells = np.empty(spec.D, dtype=np.int64)
    ms = np.empty(spec.D, dtype=np.int64)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        sl = spec.block_slice(ell)
        u[sl] = np.tile(spec.zeros[ell], 2 * ell + 1)
        ells[sl] = ell
        ms[sl] = np.repeat(np.arange(-ell, ell + 1), S)
    _uls_cache[key] = (u, ells, ms)
    return u, ells, ms


def energy_curve(coeffs, basis_choice, basis=None):
    """Cumulative energy fraction of the first d components, three orderings.

    "pca": principal coefficients in basis order. "bh_sorted_abs": raw
    coefficients by decreasing magnitude (per-volume ordering).
    "bh_sorted_uls": raw coefficients by increasing radial frequency u_{ls},
    near-zero entries (|f| < 1e-12) pushed to the end, u-ties broken by
    (l, m) ascending.
    """
    if basis_choice == "pca":
        if basis is None:
            raise DomainError("the pca ordering needs a PrincipalBasis")
        energies = np.abs(project(coeffs, basis, basis.D)) ** 2
    elif basis_choice == "bh_sorted_abs":
        e = np.abs(coeffs.data) ** 2
        energies = e[np.argsort(-e, kind="stable")]
    elif basis_choice == "bh_sorted_uls":
        u, ells, ms = _expanded_uls_keys(coeffs.spec)
        near_zero = (np.abs(coeffs.data) < 1e-12).astype(np.int64)
        order = np.lexsort((ms, ells, u, near_zero))
        energies = (np.abs(coeffs.data) ** 2)[order]
    else:
        raise DomainError(f"unknown basis choice {basis_choice!r}")
    cum = np.cumsum(energies)
    total = cum[-1]
    if total <= 0.0:
        raise DomainError("undefined energy ratio: zero coefficient vector")
    return EnergyCurve(values=cum / total, basis_tag=basis_choice)


def select_rank(basis, d=None, energy=None, gap=False):
    """Pick the number of principal components to keep.

    Exactly one criterion: explicit d, smallest d whose eigenvalue energy
    reaches the threshold, or the largest relative gap between consecutive
    compact eigenvalues.
    """
    chosen = sum(x is not None and x is not False for x in (d, energy, gap))
    if chosen > 1:
        raise DomainError("choose at most one rank criterion")
    if d is not None:
        if not (1 <= d <= basis.D):
            raise DomainError(f"d must lie in [1, {basis.D}], got {d}")
        return int(d)
    widths = 2 * basis.ells + 1
    expanded = np.repeat(basis.lambdas, widths)
    total = float(expanded.sum())
    if energy is not None:
        if not (0.0 < energy <= 1.0):
            raise DomainError("energy threshold must lie in (0, 1]")
        if total <= 0.0:
            return basis.D
        frac = np.cumsum(expanded) / total
        return int(min(np.searchsorted(frac, energy - 1e-15) + 1, basis.D))
    if gap:
        lam = basis.lambdas
        if total <= 0.0 or basis.D_prime < 2:
            return basis.D
        floor = 1e-12 * lam[0]
        best_j, best_ratio = None, np.inf
        for j in range(basis.D_prime - 1):
            if lam[j] <= floor:
                break
            ratio = lam[j + 1] / lam[j]
            if ratio < best_ratio:
                best_ratio = ratio
                best_j = j
        if best_j is None:
            return basis.D
        return int(basis.entry_offsets[best_j + 1])
    return basis.D
