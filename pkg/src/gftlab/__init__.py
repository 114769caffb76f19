"""Budget-balanced double-auction mechanisms for gains-from-trade maximization.

Build GSOM/GBOM mechanism tables, benchmark them against the exact
second-best LP and the duality upper bound, transform them to strong budget
balance, and audit every incentive and budget property by brute force.
"""

from .market import (
    DiscreteDistribution,
    FeasibilityFamily,
    Instance,
    TypeProfile,
    dump_instance,
    enumerate_profiles,
    instance_to_dict,
    load_instance,
    profile_probability,
    validate_instance,
)
from .virtual import VirtualValueTable, buyer_virtual_values, seller_virtual_values, virtual_tables
from .matching import Matching, WeightedBipartiteGraph, max_weight_matching, pair_in_matching
from .bilateral import PostedPriceOutcome, bom_price, gft_bom, gft_som, som_price
from .mechanisms import (
    GBOM,
    GSOM,
    MechanismTable,
    build_custom_mechanism,
    build_mechanism,
    exante_surplus,
    gbom_allocate,
    gft_exact,
    gsom_allocate,
    pairwise_surplus_margin,
    table_from_dict,
    table_to_dict,
    threshold_payments,
    virtual_gft,
)
from .simplex import LpProblem, LpRow, LpSolution, solve_lp
from .benchmarks import (
    FractionalMechanism,
    SbbImplementability,
    build_second_best_lp,
    check_sbb_implementable,
    duality_benchmark,
    extract_fractional_mechanism,
    first_best,
    sbb_feasible_lp,
    solve_second_best_lp,
)
from .transforms import (
    InterimPaymentView,
    exante_sbb_to_sbb,
    exante_wbb_to_exante_sbb,
    interim_payments,
    wbb_to_sbb_pipeline,
)
from .audit import (
    AuditReport,
    PropertyResult,
    audit_mechanism,
    check_budget,
    check_dsic,
    check_interim_bic_ir,
    check_monotone,
)
from .experiments import GenSpec, SuiteConfig, evaluate_instance, gen_instance, run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
