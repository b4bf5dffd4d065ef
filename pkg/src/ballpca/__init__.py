"""SO(3)-invariant PCA of 3D volumes in the ball-harmonics basis.

Pipeline: sample volumes expand into complex coefficients f_{lms}; the
rotation-averaged covariance collapses into per-degree Hermitian blocks;
block eigenvectors define eigenvolumes used for projection, reconstruction,
compression curves, and a Gaussian generative model.
"""

from ._kernels import backend as kernel_backend
from .basis import BasisSpec, SphericalGrid, build_basis, build_grid, eval_ball_harmonic, nyquist_band_limit
from .errors import (
    BallPcaError,
    CompatibilityError,
    DataError,
    DomainError,
    FormatError,
    NumericalError,
)
from .harmonics import (
    BesselZeroTable,
    WignerAngles,
    build_zero_table,
    sph_bessel,
    sph_bessel_zero,
    sph_harmonic,
    wigner_D,
    wigner_D_matrix,
    wigner_d_small,
)
from .invariant_pca import (
    BlockCovariance,
    EnergyCurve,
    PrincipalBasis,
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
from .synthesis import SynthesisModel, fit_model, sample_volume
from .transform import (
    CoefficientVector,
    VoxelGrid,
    expand_function,
    expand_voxels,
    reflect_coeffs,
    rotate_coeffs,
    synthesize,
    synthesize_on_grid,
)

__version__ = "0.1.0"

__all__ = [
    "BallPcaError",
    "BasisSpec",
    "BesselZeroTable",
    "BlockCovariance",
    "CoefficientVector",
    "CompatibilityError",
    "DataError",
    "DomainError",
    "EnergyCurve",
    "FormatError",
    "NumericalError",
    "PrincipalBasis",
    "SphericalGrid",
    "SynthesisModel",
    "VoxelGrid",
    "WignerAngles",
    "accumulate_covariance",
    "build_basis",
    "build_covariance",
    "build_grid",
    "build_zero_table",
    "center",
    "compute_mean",
    "eigendecompose",
    "energy_curve",
    "eval_ball_harmonic",
    "expand_function",
    "expand_voxels",
    "fit_model",
    "kernel_backend",
    "nyquist_band_limit",
    "project",
    "reconstruct",
    "reflect_coeffs",
    "rotate_coeffs",
    "sample_volume",
    "select_rank",
    "sph_bessel",
    "sph_bessel_zero",
    "sph_harmonic",
    "synthesize",
    "synthesize_on_grid",
    "wigner_D",
    "wigner_D_matrix",
    "wigner_d_small",
    "__version__",
]
