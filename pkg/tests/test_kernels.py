import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import lpmv

from ballpca._kernels import _numpy, available_backends, backend


def tri_index(ell, m):
    return ell * (ell + 1) // 2 + m


def test_backend_reports_a_known_name():
    assert backend() in ("compiled", "numpy")


def test_disable_env_forces_numpy():
    code = (
        "from ballpca._kernels import backend; print(backend())"
    )
    proc = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "BALLPCA_DISABLE_EXT": "1"},
    )
    assert proc.stdout.strip() == "numpy"


def test_legendre_matches_scipy_lpmv():
    # lpmv carries the same Condon-Shortley phase; add the norm via lgamma
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 11)
    L = 12
    table = _numpy.legendre_table(L, x)
    for ell in range(L + 1):
        for m in range(ell + 1):
            norm = math.exp(
                0.5
                * (
                    math.log(2 * ell + 1)
                    - math.log(4 * math.pi)
                    + math.lgamma(ell - m + 1)
                    - math.lgamma(ell + m + 1)
                )
            )
            want = norm * lpmv(m, ell, x)
            got = table[tri_index(ell, m)]
            assert np.max(np.abs(got - want)) < 1e-12


def test_backends_agree_on_legendre():
    impls = available_backends()
    if "compiled" not in impls:
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 257)
    a = impls["numpy"].legendre_table(24, x)
    b = impls["compiled"].legendre_table(24, x)
    assert np.max(np.abs(a - b)) < 1e-14


def trilinear_reference(vol, pts):
    N = vol.shape[0]
    out = np.empty(len(pts))
    for k, (x, y, z) in enumerate(pts):
        g = np.clip((np.array([x, y, z]) + 1.0) * (N - 1) / 2.0, 0, N - 1)
        i = np.minimum(g.astype(int), N - 2)
        t = g - i
        acc = 0.0
        for dz in (0, 1):
            for dy in (0, 1):
                for dx in (0, 1):
                    wgt = (
                        (t[0] if dx else 1 - t[0])
                        * (t[1] if dy else 1 - t[1])
                        * (t[2] if dz else 1 - t[2])
                    )
                    acc += wgt * vol[i[2] + dz, i[1] + dy, i[0] + dx]
        out[k] = acc
    return out


def test_trilinear_matches_reference():
    rng = np.random.default_rng(2)
    vol = rng.standard_normal((7, 7, 7))
    pts = rng.uniform(-1.2, 1.2, size=(200, 3))  # shoots past the boundary too
    want = trilinear_reference(vol, pts)
    for impl in available_backends().values():
        got = impl.trilinear_interpolate(vol, pts)
        assert np.max(np.abs(got - want)) < 1e-13


def test_trilinear_exact_at_nodes():
    rng = np.random.default_rng(3)
    N = 5
    vol = rng.standard_normal((N, N, N))
    axis = np.linspace(-1, 1, N)
    pts = np.array([[axis[i], axis[j], axis[k]] for i in range(N) for j in range(N) for k in range(N)])
    for impl in available_backends().values():
        got = impl.trilinear_interpolate(vol, pts)
        want = np.array([vol[k, j, i] for i in range(N) for j in range(N) for k in range(N)])
        assert np.max(np.abs(got - want)) < 1e-14


def test_trilinear_reproduces_affine_fields():
    # trilinear interpolation is exact for f(x, y, z) = a + bx + cy + dz
    N = 9
    axis = np.linspace(-1, 1, N)
    Z, Y, X = np.meshgrid(axis, axis, axis, indexing="ij")
    vol = 0.5 + 1.5 * X - 2.0 * Y + 0.25 * Z
    rng = np.random.default_rng(4)
    pts = rng.uniform(-1, 1, size=(300, 3))
    want = 0.5 + 1.5 * pts[:, 0] - 2.0 * pts[:, 1] + 0.25 * pts[:, 2]
    for impl in available_backends().values():
        got = impl.trilinear_interpolate(vol, pts)
        assert np.max(np.abs(got - want)) < 1e-13
