"""Largest-eigenvalue distribution of elliptical Wishart matrices.

Zonal polynomials, generalized hypergeometric series of matrix argument with
arbitrary generator derivative sequences, truncated CDFs for the Gaussian,
matrix-t and Kotz type I models, and Monte Carlo checks.
"""

from .eigdist import (
    LargestEigenvalueCdf,
    WishartSpec,
    cdf_lmax,
    cdf_lmax_kotz,
    cdf_lmax_t_model,
    joint_density,
    quantile_lmax,
)
from .generators import GeneratorModel, parse_model
from .hypseries import SeriesSpec, rFs, rPs, rPs_heterogeneous
from .kernels import BACKEND
from .linalg import SpdMatrix
from .partitions import Partition
from .zonal import zonal_eval, zonal_identity_value

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GeneratorModel",
    "LargestEigenvalueCdf",
    "Partition",
    "SeriesSpec",
    "SpdMatrix",
    "WishartSpec",
    "cdf_lmax",
    "cdf_lmax_kotz",
    "cdf_lmax_t_model",
    "joint_density",
    "parse_model",
    "quantile_lmax",
    "rFs",
    "rPs",
    "rPs_heterogeneous",
    "zonal_eval",
    "zonal_identity_value",
]
