"""Gaussian generative model on principal coefficients ("fake proteins").

Each kept component j gets an independent complex Gaussian
N(mu_j, sigma_j^2): the fitted variance is the full complex variance
E|alpha - mu|^2, split evenly between real and imaginary parts when
sampling. Sampling is counter-based (Philox), so a seed pins the output
bytes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .invariant_pca import reconstruct


@dataclass(eq=False)
class SynthesisModel:
    """Fitted per-component Gaussian plus the dataset radial mean."""

    basis: object  # PrincipalBasis
    d: int
    mu: np.ndarray  # (d,) complex
    sigma: np.ndarray  # (d,) real >= 0
    mean_radial: np.ndarray  # (S(0),) complex, re-added on synthesis

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.complex128)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        self.mean_radial = np.asarray(self.mean_radial, dtype=np.complex128)
        if self.mu.shape != (self.d,) or self.sigma.shape != (self.d,):
            raise DomainError("mu and sigma must both have length d")
        if np.any(self.sigma < 0.0):
            raise DomainError("sigma must be non-negative")
        if self.basis is not None and not (1 <= self.d <= self.basis.D):
            raise DomainError(f"d must lie in [1, {self.basis.D}], got {self.d}")


def fit_model(alphas, basis):
    """Fit per-component mean and unbiased variance from projections.

    ``alphas`` is (n, d) with one row per dataset volume. The variance is
    the unbiased complex sample variance sum|alpha - mu|^2 / (n - 1).
    """
    alphas = np.asarray(alphas, dtype=np.complex128)
    if alphas.ndim != 2:
        raise DomainError("projections must form an (n, d) array")
    n, d = alphas.shape
    if n < 2:
        raise DomainError("variance undefined: need at least two samples")
    mu = alphas.mean(axis=0)
    # shifted two-pass variance: exactly zero for identical samples, where the
    # plain formula keeps mean-rounding ulps that would break sigma=0 runs
    shift = alphas[0]
    dev2 = np.sum(np.abs(alphas - shift) ** 2, axis=0)
    var = np.maximum(dev2 - n * np.abs(mu - shift) ** 2, 0.0) / (n - 1)
    return SynthesisModel(
        basis=basis,
        d=d,
        mu=mu,
        sigma=np.sqrt(var),
        mean_radial=basis.mean_radial.copy(),
    )


def sample_coefficients(model, rng_seed):
    """Draw one random coefficient sequence beta ~ N(mu, sigma^2)."""
    # two's-complement mask: any 64-bit integer is a valid key
    rng = np.random.Generator(np.random.Philox(key=int(rng_seed) & (2**64 - 1)))
    g = rng.standard_normal((2, model.d))
    return model.mu + model.sigma * (g[0] + 1j * g[1]) / np.sqrt(2.0)


def sample_volume(model, rng_seed):
    """Synthesize one random volume: reconstruct(beta) plus the radial mean.

    Deterministic in (model, seed); identical seeds give identical bytes.
    """
    beta = sample_coefficients(model, rng_seed)
    out = reconstruct(beta, model.basis, model.d)
    spec = model.basis.spec
    if model.mean_radial.shape != (spec.S[0],):
        raise DomainError("model mean_radial length must equal S(0)")
    out.data[spec.block_slice(0)] += model.mean_radial
    return out
