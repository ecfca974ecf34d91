"""Bayesian persuasion with a tail-risk (CVaR) receiver.

Exact active-facet linear programming for CVaR and listed polyhedral risk
preferences, a finite-precision posterior-discretization pipeline with margin
filtering and local refinement, clique-indexed succinct-risk instances, and
brute-force verification oracles.
"""

from .core import (
    CliqueRisk,
    CvarRisk,
    JointMass,
    MassMismatchError,
    PersuasionInstance,
    PolyhedralRisk,
    Signal,
    SignalingScheme,
    instance_from_json,
    instance_to_json,
    joint_mass_from_scheme,
    load_instance,
    save_instance,
    scheme_entropy,
    scheme_from_joint_mass,
    scheme_from_json,
    scheme_to_json,
    sender_value,
    shannon_entropy,
    validate_instance,
)
from .cvar import (
    ConcavifyResult,
    FacetSet,
    NoCrossingError,
    Thresholds2x2,
    best_response_set,
    concavify_2x2,
    cvar_facets,
    cvar_value,
    facet_set,
    ic_margin,
    ic_regret,
    rho,
    rho_all,
    risk_premium,
    thresholds_2x2,
)
from .lpcore import LpProblem, LpSolution, lp_to_text, solve_lp
from .exact import (
    ExactResult,
    build_active_facet_lp,
    evaluate_under_cvar,
    risk_neutral_solve,
    solve_exact,
)
from .approx import (
    DiscretizationInfeasible,
    DiscretizedResult,
    EmptyAlphabetError,
    GridAlphabet,
    LocalDiscretizedResult,
    LocalFacetFamily,
    SoundnessError,
    StatisticFamily,
    build_alphabet,
    build_state_contingent_lp,
    choose_k,
    enumerate_grid,
    local_facets,
    local_k_bound,
    solve_discretized,
    solve_discretized_local,
)
from .hardness import (
    CliqueDecision,
    clique_decision,
    enumerate_k_cliques,
    expand_clique_facets,
    gen_clique_instance,
)
from .oracle import AuditReport, GridOptResult, audit_scheme, grid_opt

__version__ = "0.1.0"
