"""Entropy of symbolic actions of amenable groups via Følner windows and random pasts."""

__version__ = "0.1.0"

from .groups import (  # noqa: E402
    GroupElement,
    GroupSpec,
    Window,
    boundary_ratio,
    canonical_key,
    d_interior,
    decode_key,
    folner_window,
    interval,
    inverse,
    multiply,
    translate_right,
)
from .orders import (  # noqa: E402
    IidUniform,
    IntersectionOfUniform,
    LexicographicZd,
    SemigroupPast,
    WindowOrder,
    extend_uniform,
    invariance_statistic,
    linear_extensions_count,
    past_of,
    sample_order,
    validate,
)
from .systems import (  # noqa: E402
    Bernoulli,
    BlockCodeZ,
    Factored,
    JointDistribution,
    MarkovZ,
    PeriodicZ,
    SiteMap,
    exact_joint,
    push_forward_factor,
    sample_window,
    stationary_distribution,
)
from .entropy import (  # noqa: E402
    ConvergenceTable,
    EntropyEstimate,
    abramov_rokhlin_residual,
    chain_rule_decomposition,
    cond_entropy,
    empirical_joint,
    folner_entropy_rate,
    kieffer_pinsker_estimate,
    markov_kp_uniform_exact,
    predictability_profile,
    rokhlin_distance,
    shannon,
)

__all__ = [
    "__version__",
    "GroupElement",
    "GroupSpec",
    "Window",
    "boundary_ratio",
    "canonical_key",
    "d_interior",
    "decode_key",
    "folner_window",
    "interval",
    "inverse",
    "multiply",
    "translate_right",
    "IidUniform",
    "IntersectionOfUniform",
    "LexicographicZd",
    "SemigroupPast",
    "WindowOrder",
    "extend_uniform",
    "invariance_statistic",
    "linear_extensions_count",
    "past_of",
    "sample_order",
    "validate",
    "Bernoulli",
    "BlockCodeZ",
    "Factored",
    "JointDistribution",
    "MarkovZ",
    "PeriodicZ",
    "SiteMap",
    "exact_joint",
    "push_forward_factor",
    "sample_window",
    "stationary_distribution",
    "ConvergenceTable",
    "EntropyEstimate",
    "abramov_rokhlin_residual",
    "chain_rule_decomposition",
    "cond_entropy",
    "empirical_joint",
    "folner_entropy_rate",
    "kieffer_pinsker_estimate",
    "markov_kp_uniform_exact",
    "predictability_profile",
    "rokhlin_distance",
    "shannon",
]
