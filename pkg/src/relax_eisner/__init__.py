"""Differentiable projective dependency parsing with a relaxed Eisner chart."""

from .backward import GradCheckReport, backward_relaxed, grad_check, marginals, marginals_jvp
from .chart import (
    Chart,
    ContribChart,
    ItemKind,
    RelaxedParse,
    backptr_reconstruct,
    hard_eisner,
    inside_relaxed,
    log_partition,
    relaxed_eisner,
    tree_log_prob,
)
from .elbo import (
    Decoder,
    GaussianGrad,
    LossBundle,
    StubDecoder,
    gaussian_kl,
    semi_supervised_loss,
    soft_gcn_layer,
    sup_elbo_estimate,
    tree_entropy,
    tree_kl_to_uniform,
    unsup_elbo_estimate,
)
from .fileio import FormatError, TreebankSentence, load_weights, read_conllu, save_weights
from .oracle import enumerate_projective, oracle_best, oracle_logZ, oracle_marginals
from .stochastic import (
    GaussianParams,
    gumbel_max_categorical,
    perturb_and_parse_hard,
    perturb_and_parse_relaxed,
    reparam_gaussian,
    sample_gumbel,
)
from .trees import DomainError, ShapeError, heads_to_matrix, is_projective, is_valid_tree, matrix_to_heads, uas

__version__ = "0.1.0"
