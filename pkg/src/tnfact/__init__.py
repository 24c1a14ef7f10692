"""Tensor-network factorizations of discrete probability distributions."""

from .dense import DenseTensor, contract, max_abs_diff, reshape
from .models import (
    BornModel,
    COMPLEX,
    LpsModel,
    MpsModel,
    NONNEG,
    REAL,
    evaluate,
    log_normalization,
    log_prob,
    lps_complex_to_real,
    lps_to_mps_real,
    marginal,
    mps_nonneg_to_lps_real,
    normalization,
    random_born,
    random_lps,
    random_mps,
    sample,
    sample_batch,
    to_dense,
)

__all__ = [
    "BornModel", "COMPLEX", "DenseTensor", "LpsModel", "MpsModel", "NONNEG",
    "REAL", "contract", "evaluate", "log_normalization", "log_prob",
    "lps_complex_to_real", "lps_to_mps_real", "marginal", "max_abs_diff",
    "mps_nonneg_to_lps_real", "normalization", "random_born", "random_lps",
    "random_mps", "reshape", "sample", "sample_batch", "to_dense",
]

__version__ = "0.1.0"
