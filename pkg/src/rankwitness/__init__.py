"""Nonnegative-rank witnesses for causal hypotheses with hidden variables of known cardinality."""
from .dist import (
    ConditionalSlice,
    ExpectationTable,
    JointDistribution,
    condition_slice,
    expectations_to_probs,
    from_matrix,
    marginalize,
    probs_to_expectations,
)
from .graph import (
    CausalGraph,
    SeparationQuery,
    VariableSpec,
    build_graph,
    d_separated,
    find_hidden_separators,
    path_is_blocked,
    separator_cardinality,
)
from .nnrank import (
    LatentDecomposition,
    NNFactorization,
    RankBounds,
    RankConfig,
    factorization_to_latent,
    latent_to_joint,
    linear_rank,
    nmf_upper_bound,
    nonnegative_rank,
    rectangle_cover_lower_bound,
)
from .protocols import (
    ComplexityReport,
    HybridProtocol,
    MessageProtocol,
    SeedProtocol,
    correlation_complexity,
    simulate_hybrid_protocol,
    simulate_message_protocol,
    simulate_seed_protocol,
    tradeoff_check,
)
from .psd import PsdFactorization, PsdRankBounds, psd_rank_bounds, psd_search, verify_psd_factorization
from .witness import (
    CausalHypothesis,
    Status,
    WitnessVerdict,
    brute_force_response_oracle,
    corollary1_check,
    lower_bound_hidden_cardinality,
    perfect_correlation_check,
    witness_direct_influence,
)

__version__ = "0.1.0"
