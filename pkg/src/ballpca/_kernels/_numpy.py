"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or disabled via
``BALLPCA_DISABLE_EXT=1``). Must stay numerically interchangeable with
``_core.pyx``: same recurrences, same boundary conventions.
"""

import numpy as np

BACKEND = "numpy"


def legendre_table(L, x):
    """Fully normalized associated Legendre values for all 0 <= m <= l <= L.

    Returns an array of shape ``((L+1)(L+2)/2, len(x))`` where row
    ``l(l+1)/2 + m`` holds

        Nbar_l^m(x) = sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!) * P_l^m(x)

    with the Condon-Shortley phase folded into P_l^m. The recurrence runs
    upward in l for each fixed m starting from the closed-form diagonal
    term; all intermediate values stay O(1), so no factorial overflow can
    occur at any supported degree.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    out = np.empty(((L + 1) * (L + 2) // 2, n), dtype=np.float64)
    sine = np.sqrt(np.maximum(0.0, 1.0 - x * x))

    out[0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, L + 1):
        prev = out[(m - 1) * m // 2 + (m - 1)]
        out[m * (m + 1) // 2 + m] = -np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * sine * prev
    for m in range(L):
        diag = out[m * (m + 1) // 2 + m]
        out[(m + 1) * (m + 2) // 2 + m] = np.sqrt(2.0 * m + 3.0) * x * diag
    for m in range(L - 1):
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            p1 = out[(l - 1) * l // 2 + m]
            p2 = out[(l - 2) * (l - 1) // 2 + m]
            out[l * (l + 1) // 2 + m] = a * (x * p1 - b * p2)
    return out


def trilinear_interpolate(vol, pts):
    """Trilinearly sample a cubic grid over [-1,1]^3 at physical points.

    ``vol`` has shape (N, N, N) with x the fastest-varying *physical* axis,
    i.e. ``vol[iz, iy, ix]``. ``pts`` is (P, 3) cartesian (x, y, z). Points
    outside [-1,1]^3 clamp to the boundary; masking to the unit ball is the
    caller's job.
    """
    vol = np.ascontiguousarray(vol, dtype=np.float64)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    N = vol.shape[0]
    scale = (N - 1) / 2.0
    g = np.clip((pts + 1.0) * scale, 0.0, N - 1.0)
    i0 = np.minimum(g.astype(np.int64), N - 2)
    t = g - i0
    ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
    tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]

    c000 = vol[iz, iy, ix]
    c100 = vol[iz, iy, ix + 1]
    c010 = vol[iz, iy + 1, ix]
    c110 = vol[iz, iy + 1, ix + 1]
    c001 = vol[iz + 1, iy, ix]
    c101 = vol[iz + 1, iy, ix + 1]
    c011 = vol[iz + 1, iy + 1, ix]
    c111 = vol[iz + 1, iy + 1, ix + 1]

    c00 = c000 * (1.0 - tx) + c100 * tx
    c10 = c010 * (1.0 - tx) + c110 * tx
    c01 = c001 * (1.0 - tx) + c101 * tx
    c11 = c011 * (1.0 - tx) + c111 * tx
    c0 = c00 * (1.0 - ty) + c10 * ty
    c1 = c01 * (1.0 - ty) + c11 * ty
    return c0 * (1.0 - tz) + c1 * tz
