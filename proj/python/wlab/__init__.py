"""wlab: auto-encoder laboratory with latent divergence penalties.

Thin python surface over the C++ core: dataset generation, MMD and KL
divergences, model training, and the evaluation metrics.
"""

from ._core import (
    Dataset,
    Model,
    bernoulli_recon_loss,
    cdf_max_deviation,
    disentanglement_score,
    disentanglement_score_codes,
    gaussian_kl,
    generate_dsprites,
    generate_fading_squares,
    kernel_eval,
    mmd_sq_unbiased,
    sample_pairs,
    sample_prior,
    test_recon_error,
    train,
    variance_profile,
)

__all__ = [
    "Dataset",
    "Model",
    "bernoulli_recon_loss",
    "cdf_max_deviation",
    "disentanglement_score",
    "disentanglement_score_codes",
    "gaussian_kl",
    "generate_dsprites",
    "generate_fading_squares",
    "kernel_eval",
    "mmd_sq_unbiased",
    "sample_pairs",
    "sample_prior",
    "test_recon_error",
    "train",
    "variance_profile",
]
