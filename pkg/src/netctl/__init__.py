"""Minimum-energy target control of linear networks and trace-based energy bounds."""

from .bounds import (
    BoundEstimate,
    Regime,
    RegimeKind,
    TraceStats,
    alpha_beta_full_n_drivers,
    alpha_beta_m_drivers,
    alpha_beta_one_driver,
    alpha_beta_target,
    cauchy_like_inverse,
    classify_regime,
    estimate_bounds,
    lam_extreme_estimate,
    trace_stats_exact,
    upper_constant,
)
from .ctrb import (
    ControllableDecomposition,
    DriverSet,
    TargetSet,
    controllability_matrix,
    controllable_basis,
    decompose_gram_schmidt,
    decompose_permutation,
    decomposition_report,
    numerical_rank,
    orthonormal_completion,
    output_controllability_matrix,
    structural_checks,
)
from .energy import (
    ControlTask,
    OptimalPlan,
    energies,
    energy_sandwich,
    minimum_energy,
    optimal_input,
    simulate,
)
from .estimators import ControllableSubspace, EnergyBoundEstimator, MinimumEnergyControl
from .exceptions import *  # noqa: F401,F403
from .gramian import (
    eigenbasis_form,
    exact_extreme_eigenvalues,
    geometric_factor,
    gramian_full,
    gramian_target,
)
from .netgen import (
    ContinuousSystem,
    ErRecipe,
    Network,
    discretize,
    generate_er,
    load_edge_list,
    network_from_json,
    network_to_json,
    parse_edge_list,
)

__version__ = "0.1.0"
