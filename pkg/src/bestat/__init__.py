"""Binary expansion statistics.

Rank data onto a dyadic grid, read dependence off sign-interaction
statistics computed with fast Walsh transforms, and calibrate adaptive
test statistics by Monte Carlo. See the README for the command line.
"""

from .beast import (
    BeastConfig,
    InteractionSummary,
    NullDistribution,
    TestResult,
    auto_lambda,
    beast_statistic,
    derive_null_seed,
    interaction_summary,
    load_null,
    load_or_simulate,
    most_frequent_interaction,
    oracle_statistic,
    oracle_weights,
    p_value,
    run_test,
    save_null,
    simulate_null,
    soft_threshold,
    subsample_mean_matrix,
    subsample_means,
)
from .beauty import binary_euler_check, phi_approx, phi_table, psi
from .classic import (
    QuadraticTestSpec,
    chi2_stat,
    max_bet_stat,
    quadratic_stat,
    spearman_proj,
    spearman_weight,
)
from .errors import (
    BestatError,
    CacheError,
    ConfigError,
    DataError,
    DomainError,
    ShapeError,
    SingularityError,
)
from .expansion import (
    binary_expand,
    cell_midpoints,
    cell_of,
    cells_of,
    count_cells,
    empirical_copula,
    interval_index,
    mask_to_signs,
    reconstruct,
    signs_to_mask,
)
from .hadamard import (
    InteractionSet,
    SymmetryVector,
    cross2_set,
    custom_set,
    format_interaction,
    full_symmetry,
    fwht,
    fwht_symmetry,
    interaction_matrix,
    inverse_symmetry,
    joint_cross_set,
    jointcross3_set,
    naive_symmetry,
    parity_sign,
    popcount,
    select,
    spearman_set,
    unif_set,
    walsh_value,
)
from .moments import (
    MomentPair,
    identity_a_residual,
    identity_b_values,
    identity_c_check,
    identity_d_gap,
    moments_from_probs,
    subsample_covariance,
)
from .scenarios import (
    PowerGrid,
    PowerRow,
    Scenario,
    estimate_power,
    get_scenario,
    power_csv,
    sample_scenario,
    scenario_names,
)

__version__ = "0.1.0"

__all__ = [
    "BeastConfig",
    "BestatError",
    "CacheError",
    "ConfigError",
    "DataError",
    "DomainError",
    "InteractionSet",
    "InteractionSummary",
    "MomentPair",
    "NullDistribution",
    "PowerGrid",
    "PowerRow",
    "QuadraticTestSpec",
    "Scenario",
    "ShapeError",
    "SingularityError",
    "SymmetryVector",
    "TestResult",
    "auto_lambda",
    "beast_statistic",
    "binary_euler_check",
    "binary_expand",
    "cell_midpoints",
    "cell_of",
    "cells_of",
    "chi2_stat",
    "count_cells",
    "cross2_set",
    "custom_set",
    "derive_null_seed",
    "empirical_copula",
    "estimate_power",
    "format_interaction",
    "full_symmetry",
    "fwht",
    "fwht_symmetry",
    "get_scenario",
    "identity_a_residual",
    "identity_b_values",
    "identity_c_check",
    "identity_d_gap",
    "interaction_matrix",
    "interaction_summary",
    "interval_index",
    "inverse_symmetry",
    "joint_cross_set",
    "jointcross3_set",
    "load_null",
    "load_or_simulate",
    "mask_to_signs",
    "max_bet_stat",
    "moments_from_probs",
    "most_frequent_interaction",
    "naive_symmetry",
    "oracle_statistic",
    "oracle_weights",
    "p_value",
    "parity_sign",
    "phi_approx",
    "phi_table",
    "popcount",
    "power_csv",
    "psi",
    "quadratic_stat",
    "reconstruct",
    "run_test",
    "sample_scenario",
    "save_null",
    "scenario_names",
    "select",
    "signs_to_mask",
    "simulate_null",
    "soft_threshold",
    "spearman_proj",
    "spearman_set",
    "spearman_weight",
    "subsample_covariance",
    "subsample_mean_matrix",
    "subsample_means",
    "unif_set",
    "walsh_value",
]
