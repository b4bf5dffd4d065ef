"""Truncated ball-harmonics basis: index set, normalization, quadrature grids.

A basis function is indexed by (l, m, s) and equals

    N_{ls} j_l(u_{ls} r) Y_l^m(theta, phi),    N_{ls} = 4 / |j_{l+1}(u_{ls})|,

where u_{ls} is the s-th positive zero of j_l. With this normalization every
basis function has squared L2 norm exactly 8 over the unit ball (the radial
integral is j_{l+1}(u_{ls})^2 / 2 times N_{ls}^2); all expansions divide it
back out.

Canonical coefficient layout (shared by every module): l = 0..L outer, then
m = -l..l, then s = 1..S(l), so each l owns one contiguous (2l+1) x S(l)
block.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FormatError
from .harmonics import L_MAX, build_zero_table, legendre_normalized, sph_bessel, sph_harmonic

LAYOUT_TAG = "l-major,m-then-s"
SPEC_VERSION = 1


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Immutable description of one truncated ball-harmonics basis."""

    L: int
    band_limit: float
    S: tuple
    zeros: tuple  # per-l float arrays of retained u_{ls}, length S(l)
    norms: tuple  # per-l float arrays of N_{ls} = 4/|j_{l+1}(u_{ls})|
    offsets: tuple = field(init=False)  # start of each l block in the layout
    D: int = field(init=False)
    D_prime: int = field(init=False)

    def __post_init__(self):
        off = []
        pos = 0
        for ell in range(self.L + 1):
            off.append(pos)
            pos += (2 * ell + 1) * self.S[ell]
        object.__setattr__(self, "offsets", tuple(off))
        object.__setattr__(self, "D", pos)
        object.__setattr__(self, "D_prime", int(sum(self.S)))

    def same_layout(self, other):
        return (
            self.L == other.L
            and self.band_limit == other.band_limit
            and self.S == other.S
        )

    def block_slice(self, ell):
        """Slice of the coefficient layout holding the (2l+1) x S(l) block."""
        return slice(self.offsets[ell], self.offsets[ell] + (2 * ell + 1) * self.S[ell])

    def index(self, ell, m, s):
        """Flat position of coefficient (l, m, s)."""
        self.check_retained(ell, m, s)
        return self.offsets[ell] + (m + ell) * self.S[ell] + (s - 1)

    def check_retained(self, ell, m, s):
        if not (0 <= ell <= self.L) or abs(m) > ell or not (1 <= s <= self.S[ell]):
            raise DomainError(f"index (l={ell}, m={m}, s={s}) not retained in basis")

    def iter_lms(self):
        """All retained (l, m, s) in canonical order."""
        for ell in range(self.L + 1):
            for m in range(-ell, ell + 1):
                for s in range(1, self.S[ell] + 1):
                    yield ell, m, s

    def to_json_doc(self):
        return {
            "L": self.L,
            "band_limit": self.band_limit,
            "S": list(self.S),
            "layout": LAYOUT_TAG,
            "version": SPEC_VERSION,
        }

    def to_json(self):
        return json.dumps(self.to_json_doc())

    @classmethod
    def from_json_doc(cls, doc):
        for key in ("L", "band_limit", "S", "layout", "version"):
            if key not in doc:
                raise FormatError(f"basis spec document missing field '{key}'")
        if doc["version"] != SPEC_VERSION:
            raise FormatError(f"unsupported basis spec version {doc['version']!r}")
        if doc["layout"] != LAYOUT_TAG:
            raise FormatError(f"unsupported coefficient layout {doc['layout']!r}")
        spec = build_basis(int(doc["L"]), float(doc["band_limit"]))
        if list(spec.S) != [int(v) for v in doc["S"]]:
            raise FormatError(
                "basis spec S counts inconsistent with (L, band_limit): "
                f"file says {doc['S']}, truncation rule gives {list(spec.S)}"
            )
        return spec


def nyquist_band_limit(N):
    """Default band limit pi*N/2 for volumes sampled on an N^3 grid."""
    if N < 2:
        raise DomainError(f"grid side must be >= 2, got {N}")
    return math.pi * N / 2.0


_basis_cache = {}


def build_basis(L, band_limit):
    """Basis with all (l <= L, s) such that u_{ls} <= band_limit.

    S(l) is non-increasing in l by zero interlacing. Degrees whose S(l) is 0
    stay in the spec arrays but contribute no coefficients. Specs are cached
    by (L, band_limit); construction is deterministic, so reuse is safe.
    """
    cached = _basis_cache.get((L, band_limit))
    if cached is not None:
        return cached
    if L < 0 or L > L_MAX:
        raise DomainError(f"angular degree must be in [0, {L_MAX}], got {L}")
    if not (band_limit > 0.0) or not math.isfinite(band_limit):
        raise DomainError(f"band limit must be positive and finite, got {band_limit}")
    if band_limit < math.pi:
        raise DomainError(
            f"empty basis: band limit {band_limit:.6g} < pi retains no radial zeros"
        )
    table = build_zero_table(L, int(band_limit / math.pi) + 2)
    S = []
    zeros = []
    norms = []
    for ell in range(L + 1):
        row = table.rows[ell]
        kept = row[row <= band_limit]
        S.append(int(kept.size))
        zeros.append(np.asarray(kept, dtype=np.float64))
        norms.append(4.0 / np.abs(sph_bessel(ell + 1, kept)))
    spec = BasisSpec(
        L=L,
        band_limit=float(band_limit),
        S=tuple(S),
        zeros=tuple(zeros),
        norms=tuple(norms),
    )
    _basis_cache[(L, band_limit)] = spec
    return spec


def radial_profile(spec, ell, s, r):
    """Normalized radial factor N_{ls} j_l(u_{ls} r), elementwise in r."""
    spec.check_retained(ell, 0, s)
    u = spec.zeros[ell][s - 1]
    return spec.norms[ell][s - 1] * sph_bessel(ell, u * np.asarray(r, dtype=np.float64))


def eval_ball_harmonic(spec, ell, m, s, point):
    """One basis function at a single (r, theta, phi) point."""
    spec.check_retained(ell, m, s)
    r, theta, phi = point
    if r < 0.0 or r > 1.0:
        raise DomainError(f"radius must lie in [0, 1], got {r}")
    u = spec.zeros[ell][s - 1]
    return (
        spec.norms[ell][s - 1]
        * sph_bessel(ell, u * r)
        * sph_harmonic(ell, m, theta, phi)
    )


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Tensor-product quadrature over the unit ball.

    Nodes are ordered radial-slowest: flat index = (i * n_theta + j) * n_phi
    + k. Radial weights absorb the r^2 volume factor, so summing samples
    times ``weights()`` integrates over the ball.
    """

    radial_r: np.ndarray
    radial_w: np.ndarray
    polar_cos: np.ndarray
    polar_w: np.ndarray
    n_phi: int

    @property
    def n_nodes(self):
        return self.radial_r.size * self.polar_cos.size * self.n_phi

    @property
    def phis(self):
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def shape(self):
        return (self.radial_r.size, self.polar_cos.size, self.n_phi)

    def weights(self):
        w_phi = 2.0 * np.pi / self.n_phi
        w = self.radial_w[:, None, None] * self.polar_w[None, :, None] * w_phi
        return np.broadcast_to(w, self.shape).reshape(-1)

    def points_spherical(self):
        """(n_nodes, 3) array of (r, theta, phi) in node order."""
        nr, nt, nf = self.shape
        theta = np.arccos(np.clip(self.polar_cos, -1.0, 1.0))
        r = np.repeat(self.radial_r, nt * nf)
        t = np.tile(np.repeat(theta, nf), nr)
        f = np.tile(self.phis, nr * nt)
        return np.column_stack([r, t, f])

    def points_cartesian(self):
        pts = self.points_spherical()
        r, theta, phi = pts[:, 0], pts[:, 1], pts[:, 2]
        st = np.sin(theta)
        return np.column_stack(
            [r * st * np.cos(phi), r * st * np.sin(phi), r * np.cos(theta)]
        )


def build_grid(spec, oversample=1.0):
    """Quadrature grid exact for products of retained basis functions.

    The polar rule (Gauss-Legendre in cos theta, L+1 nodes) and azimuthal
    rule (uniform, 2L+1 nodes) are exact for the angular integrands, which
    are polynomials of degree <= 2L. The radial integrand is entire with
    frequencies up to 2 * band_limit; the n-node Gauss-Legendre error for
    such integrands tracks J_{2n}(band_limit), which drops below 1e-15 once
    2n exceeds about 1.36 * band_limit, so the node count keeps a margin
    over 0.68 * band_limit (node-doubling leaves Gram entries unchanged to
    ~1e-13, see tests).
    """
    if oversample < 1.0:
        raise DomainError("oversample factor must be >= 1")
    floor_spec = math.ceil((2.0 * spec.band_limit / math.pi + 3.0) / 2.0)
    n_r = max(math.ceil(0.75 * spec.band_limit) + 16, floor_spec)
    n_theta = spec.L + 1
    n_phi = 2 * spec.L + 1
    n_r = math.ceil(n_r * oversample)
    n_theta = math.ceil(n_theta * oversample)
    n_phi = math.ceil(n_phi * oversample)

    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (xr + 1.0)
    radial_w = 0.5 * wr * r * r
    xt, wt = np.polynomial.legendre.leggauss(n_theta)
    return SphericalGrid(
        radial_r=r,
        radial_w=radial_w,
        polar_cos=xt,
        polar_w=wt,
        n_phi=n_phi,
    )


def grid_tables(spec, grid):
    """Evaluation tables shared by expansion and synthesis on a grid.

    Returns (legendre, radial) where ``legendre`` is the normalized Legendre
    table at the polar nodes (rows indexed l(l+1)/2 + m for m >= 0) and
    ``radial[l]`` is the (S(l), n_r) matrix of N_{ls} j_l(u_{ls} r_i).
    """
    leg = legendre_normalized(spec.L, grid.polar_cos)
    radial = []
    for ell in range(spec.L + 1):
        if spec.S[ell] == 0:
            radial.append(np.zeros((0, grid.radial_r.size)))
            continue
        args = np.outer(spec.zeros[ell], grid.radial_r)
        radial.append(spec.norms[ell][:, None] * sph_bessel(ell, args))
    return leg, radial
