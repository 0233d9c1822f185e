"""Hyperspherical embeddings that reduce hubness in transductive few-shot learning."""
from .affinity import (
    KappaVector,
    SupportLabelInfo,
    affinity_matrix,
    calibrate_kappa,
    conditional_affinities,
    label_informed_gram,
    row_entropy,
    symmetrize,
)
from .fslbench import (
    AggregateStats,
    Episode,
    baseline_embed,
    pool_source,
    run_benchmark,
    sample_episode,
    simpleshot_classify,
    synth_episode,
    synth_pool,
    synthetic_source,
)
from .geometry import (
    cosine_matrix,
    inner_product_matrix,
    l2_normalize_rows,
    pca_project,
    sample_uniform_sphere,
)
from .hubness import HubnessReport, hub_occurrence, hubness, k_occurrence, skewness
from .objective import (
    EmbeddingResult,
    NoHubConfig,
    UnifMask,
    adam_step,
    embed,
    grad_nohub,
    kl_divergence,
    loss_lsp,
    loss_nohub,
    loss_unif,
    renyi2_entropy,
)

__version__ = "0.1.0"
