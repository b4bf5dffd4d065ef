"""Shared helpers for the test suite."""

import numpy as np

from ballpca.transform import CoefficientVector


def random_coeffs(spec, rng, scale=1.0):
    data = scale * (rng.standard_normal(spec.D) + 1j * rng.standard_normal(spec.D))
    return CoefficientVector(spec, data)


def random_real_coeffs(spec, rng, scale=1.0):
    """Coefficients satisfying the real-volume conjugation symmetry."""
    data = np.zeros(spec.D, dtype=np.complex128)
    for ell in range(spec.L + 1):
        S = spec.S[ell]
        if S == 0:
            continue
        block = data[spec.block_slice(ell)].reshape(2 * ell + 1, S)
        block[ell] = scale * rng.standard_normal(S)
        for m in range(1, ell + 1):
            z = scale * (rng.standard_normal(S) + 1j * rng.standard_normal(S))
            block[ell + m] = z
            block[ell - m] = (-1) ** m * np.conj(z)
    return CoefficientVector(spec, data, real_volume=True)


def haar_angles(rng):
    """Haar-random rotation angles (uniform alpha/gamma, cos-uniform beta)."""
    from ballpca.harmonics import WignerAngles

    return WignerAngles(
        rng.uniform(0.0, 2.0 * np.pi),
        float(np.arccos(rng.uniform(-1.0, 1.0))),
        rng.uniform(0.0, 2.0 * np.pi),
    )
