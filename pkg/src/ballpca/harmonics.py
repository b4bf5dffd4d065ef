"""Special functions: spherical Bessel, their zeros, spherical harmonics, Wigner d/D.

Conventions used throughout the package:

* complex spherical harmonics with the Condon-Shortley phase folded into the
  associated Legendre polynomials,
* ZYZ Euler angles (alpha, beta, gamma) describing *active* rotations
  R = Rz(alpha) Ry(beta) Rz(gamma) acting on functions by
  (R.f)(x) = f(R^T x),
* Wigner D^l_{mk}(alpha, beta, gamma) = exp(-i m alpha) d^l_{mk}(beta)
  exp(-i k gamma), which makes degree-l harmonic coefficients transform as
  f_m -> sum_k D^l_{mk} f_k under the action above.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import spherical_jn

from ._kernels import legendre_table
from .errors import DomainError, NumericalError

# Largest angular degree the harmonics support; beyond this the normalized
# Legendre recurrence is untested here, not unstable.
L_MAX = 64

# Explicit-sum Wigner d is an oracle-scale tool: the alternating factorial sum
# slowly loses digits with l, so cap it well inside full double precision.
WIGNER_L_MAX = 32


def sph_bessel(ell, x):
    """Spherical Bessel function of the first kind j_l(x), elementwise."""
    if ell < 0:
        raise DomainError(f"spherical Bessel order must be >= 0, got {ell}")
    if np.isscalar(x):
        return float(spherical_jn(ell, x))
    return spherical_jn(ell, np.asarray(x, dtype=np.float64))


def sph_bessel_deriv(ell, x):
    """First derivative j_l'(x), elementwise."""
    if ell < 0:
        raise DomainError(f"spherical Bessel order must be >= 0, got {ell}")
    if np.isscalar(x):
        return float(spherical_jn(ell, x, derivative=True))
    return spherical_jn(ell, np.asarray(x, dtype=np.float64), derivative=True)


@dataclass(frozen=True)
class BesselZeroTable:
    """Positive zeros u_{l,s} of j_l for 0 <= l <= ell_max.

    ``rows[l][s-1]`` is the s-th positive zero; rows may have different
    lengths (fewer zeros are known for larger l by construction).
    """

    ell_max: int
    rows: tuple

    def count(self, ell):
        return len(self.rows[ell])

    def zero(self, ell, s):
        if not (0 <= ell <= self.ell_max) or s < 1 or s > len(self.rows[ell]):
            raise DomainError(f"zero (l={ell}, s={s}) outside tabulated range")
        return float(self.rows[ell][s - 1])


def build_zero_table(ell_max, s_max):
    """Tabulate the first ``s_max`` zeros of j_l for every l <= ell_max.

    Zeros of j_0 are exactly s*pi; each subsequent row is bracketed between
    consecutive zeros of the previous one (interlacing), isolated by Brent's
    method and polished with one Newton step.
    """
    if ell_max < 0 or s_max < 1:
        raise DomainError("zero table needs ell_max >= 0 and s_max >= 1")
    # Row l loses one usable bracket per step, so seed row 0 long enough.
    n0 = s_max + ell_max + 1
    rows = [np.pi * np.arange(1, n0 + 1)]
    for ell in range(1, ell_max + 1):
        prev = rows[ell - 1]
        cur = np.empty(len(prev) - 1)
        for j in range(len(prev) - 1):
            try:
                root = brentq(
                    lambda t: spherical_jn(ell, t),
                    prev[j],
                    prev[j + 1],
                    xtol=1e-13,
                    rtol=8.9e-16,
                )
            except ValueError as exc:  # same-sign bracket: internal bug
                raise NumericalError(
                    f"failed to bracket zero s={j + 1} of j_{ell} in "
                    f"({prev[j]:.6f}, {prev[j + 1]:.6f})"
                ) from exc
            d = spherical_jn(ell, root, derivative=True)
            if d != 0.0:
                root -= spherical_jn(ell, root) / d
            cur[j] = root
        rows.append(cur)
    trimmed = tuple(np.asarray(r[:s_max], dtype=np.float64) for r in rows)
    return BesselZeroTable(ell_max=ell_max, rows=trimmed)


_zero_cache = {"table": None}


def sph_bessel_zero(ell, s):
    """The s-th positive zero u_{l,s} of j_l (deterministic, cached)."""
    if ell < 0 or s < 1:
        raise DomainError(f"need l >= 0 and s >= 1, got l={ell}, s={s}")
    table = _zero_cache["table"]
    if table is None or table.ell_max < ell or table.count(0) < s:
        ell_hi = max(ell, 8 if table is None else table.ell_max)
        s_hi = max(s + 4, 16 if table is None else table.count(0))
        table = build_zero_table(ell_hi, s_hi)
        _zero_cache["table"] = table
    return table.zero(ell, s)


def legendre_normalized(L, x):
    """Normalized associated Legendre table for m >= 0; see kernel docs.

    Row ``l(l+1)/2 + m`` of the result holds
    sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x) with Condon-Shortley phase.
    """
    if L < 0 or L > L_MAX:
        raise DomainError(f"angular degree must be in [0, {L_MAX}], got {L}")
    return legendre_table(L, np.atleast_1d(np.asarray(x, dtype=np.float64)))


def sph_harmonic(ell, m, theta, phi):
    """Complex spherical harmonic Y_l^m(theta, phi).

    Negative orders come from the exact symmetry
    Y_l^{-m} = (-1)^m conj(Y_l^m), which the normalized Legendre recurrence
    makes consistent to machine precision.
    """
    if abs(m) > ell:
        raise DomainError(f"spherical harmonic needs |m| <= l, got l={ell}, m={m}")
    ma = abs(m)
    p = legendre_normalized(ell, math.cos(theta))[ell * (ell + 1) // 2 + ma, 0]
    val = p * complex(math.cos(ma * phi), math.sin(ma * phi))
    if m < 0:
        val = (-1.0) ** ma * val.conjugate()
    return val


def wigner_d_small(ell, m, k, beta):
    """Wigner little-d d^l_{mk}(beta) via the explicit factorial sum.

    Factorials are accumulated through lgamma so the sum stays finite for
    every supported degree; accuracy degrades slowly with l, hence the
    oracle-scale cap WIGNER_L_MAX.
    """
    if ell < 0 or ell > WIGNER_L_MAX:
        raise DomainError(f"wigner_d_small supports 0 <= l <= {WIGNER_L_MAX}, got {ell}")
    if abs(m) > ell or abs(k) > ell:
        raise DomainError(f"wigner_d_small needs |m|,|k| <= l, got l={ell}, m={m}, k={k}")
    c = math.cos(0.5 * beta)
    s = math.sin(0.5 * beta)
    pref = 0.5 * (
        math.lgamma(ell + m + 1)
        + math.lgamma(ell - m + 1)
        + math.lgamma(ell + k + 1)
        + math.lgamma(ell - k + 1)
    )
    total = 0.0
    for t in range(max(0, k - m), min(ell + k, ell - m) + 1):
        ln_den = (
            math.lgamma(ell + k - t + 1)
            + math.lgamma(t + 1)
            + math.lgamma(m - k + t + 1)
            + math.lgamma(ell - m - t + 1)
        )
        sign = -1.0 if (m - k + t) % 2 else 1.0
        total += sign * math.exp(pref - ln_den) * c ** (2 * ell + k - m - 2 * t) * s ** (m - k + 2 * t)
    return total


def wigner_d_matrix(ell, beta):
    """Full (2l+1) x (2l+1) little-d matrix, rows and columns ordered -l..l."""
    n = 2 * ell + 1
    d = np.empty((n, n), dtype=np.float64)
    for i, m in enumerate(range(-ell, ell + 1)):
        for j, k in enumerate(range(-ell, ell + 1)):
            d[i, j] = wigner_d_small(ell, m, k, beta)
    return d


_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WignerAngles:
    """ZYZ Euler angles of an active rotation, canonicalized on construction.

    alpha, gamma land in [0, 2 pi); beta in [0, pi]. Out-of-range beta is
    folded with the identity Ry(b) = Rz(pi) Ry(-b) Rz(-pi), which changes the
    angles but not the rotation.
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        a, b, g = float(self.alpha), float(self.beta), float(self.gamma)
        b = b % _TWO_PI
        if b > math.pi:
            b = _TWO_PI - b
            a += math.pi
            g += math.pi
        object.__setattr__(self, "alpha", a % _TWO_PI)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma", g % _TWO_PI)

    @property
    def matrix(self):
        """3x3 rotation matrix Rz(alpha) Ry(beta) Rz(gamma)."""
        ca, sa = math.cos(self.alpha), math.sin(self.alpha)
        cb, sb = math.cos(self.beta), math.sin(self.beta)
        cg, sg = math.cos(self.gamma), math.sin(self.gamma)
        return np.array(
            [
                [ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb],
                [sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb],
                [-sb * cg, sb * sg, cb],
            ]
        )

    @classmethod
    def from_matrix(cls, rot):
        """Recover ZYZ angles from a rotation matrix (inverse of .matrix)."""
        rot = np.asarray(rot, dtype=np.float64)
        cb = min(1.0, max(-1.0, rot[2, 2]))
        beta = math.acos(cb)
        if abs(rot[2, 2]) < 1.0 - 1e-12:
            alpha = math.atan2(rot[1, 2], rot[0, 2])
            gamma = math.atan2(rot[2, 1], -rot[2, 0])
        elif cb > 0.0:  # beta ~ 0: only alpha + gamma matters
            alpha = math.atan2(rot[1, 0], rot[0, 0])
            gamma = 0.0
        else:  # beta ~ pi: only alpha - gamma matters
            alpha = math.atan2(-rot[1, 0], rot[1, 1])
            gamma = 0.0
        return cls(alpha, beta, gamma)

    def compose(self, other):
        """Angles of the composite rotation self o other (self applied last)."""
        return WignerAngles.from_matrix(self.matrix @ other.matrix)


def wigner_D(ell, m, k, angles):
    """Wigner D-matrix entry D^l_{mk} = e^{-i m alpha} d^l_{mk}(beta) e^{-i k gamma}."""
    d = wigner_d_small(ell, m, k, angles.beta)
    return d * np.exp(-1j * (m * angles.alpha + k * angles.gamma))


def wigner_D_matrix(ell, angles):
    """Full (2l+1) x (2l+1) Wigner D-matrix, indices ordered -l..l."""
    ms = np.arange(-ell, ell + 1)
    d = wigner_d_matrix(ell, angles.beta)
    return (
        np.exp(-1j * angles.alpha * ms)[:, None]
        * d
        * np.exp(-1j * angles.gamma * ms)[None, :]
    )
