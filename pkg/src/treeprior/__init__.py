"""Probability distribution on full rooted subtrees of a perfect k-ary tree.

Exact algorithms for normalization, node-event probabilities, the mode,
expectations, entropy, KL divergence and Bayesian posterior updates, each
checked against brute-force enumeration in :mod:`treeprior.oracle`.
"""

from .bayes import (
    BetaHyperparams,
    LikelihoodSpec,
    PathLikelihoodSpec,
    Posterior,
    beta_posterior,
    posterior_general,
    posterior_path,
    sequential_update,
)
from .distribution import (
    NodeEvents,
    TreeDistribution,
    conditional_expand_prob,
    log_prob,
    new_distribution,
    node_event_probs,
    prob,
    sample,
    sample_counts,
    total_mass,
)
from .errors import (
    CapExceededError,
    NumericError,
    ParameterError,
    ShapeError,
    SubtreeError,
    TreePriorError,
    ZeroEvidenceError,
)
from .mode import FlagAssignment, Mode, flag_calculation, mode
from .recursions import entropy, expect_product, expect_sum, kl_divergence, tree_max_value, tree_sum
from .seqmodel import ContextTreeModel, context_path, evaluate_sequence, kt_predictive
from .tree_core import (
    ROOT,
    BaseShape,
    FullSubtree,
    NodeId,
    children,
    count_subtrees,
    enumerate_subtrees,
    iter_subtrees,
    parent,
    validate_subtree,
)

__version__ = "0.1.0"
