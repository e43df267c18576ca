"""Equilibrium solver for a duopoly selling to a continuum of user types under type-linear prices."""

__version__ = "0.1.0"

from .conservative import ConstantBneSet, constant_bne_set, constant_bne_welfare
from .cost import CostFunction, SplitClass, cost, split_convexity, total_cost
from .distribution import (DegenerateIntervalError, DomainError, PiecewiseLinearDensity, TypeDistribution, Uniform,
                           cdf, mean_type)
from .equilibrium import (BneCandidate, BneStatus, Candidate, candidate_cutoffs, check_bne, equilibrium_segment,
                          find_all_bne)
from .market import (MarketOutcome, PriceFunction, Tie, UserProfile, assignment, enforceable_profiles, price_mass,
                     profits, welfare)
from .oracle import (DeviationGrid, best_response, cutoff_sweep, epsilon_bne_verify, response_sweep,
                     search_epsilon_bne)
from .scenario import Scenario, ScenarioError, Settings, example_scenario, load_scenario
from .strategy import (Guarantee, PremiseError, StrategyCertificate, dominant_strategy, one_innovative_bne_exists,
                       positive_profit_strategy, profit_preserving_strategy, symmetric_diagnostics)

__all__ = [
    "ConstantBneSet", "constant_bne_set", "constant_bne_welfare",
    "CostFunction", "SplitClass", "cost", "split_convexity", "total_cost",
    "DegenerateIntervalError", "DomainError", "PiecewiseLinearDensity", "TypeDistribution", "Uniform", "cdf",
    "mean_type",
    "BneCandidate", "BneStatus", "Candidate", "candidate_cutoffs", "check_bne", "equilibrium_segment", "find_all_bne",
    "MarketOutcome", "PriceFunction", "Tie", "UserProfile", "assignment", "enforceable_profiles", "price_mass",
    "profits", "welfare",
    "DeviationGrid", "best_response", "cutoff_sweep", "epsilon_bne_verify", "response_sweep", "search_epsilon_bne",
    "Scenario", "ScenarioError", "Settings", "example_scenario", "load_scenario",
    "Guarantee", "PremiseError", "StrategyCertificate", "dominant_strategy", "one_innovative_bne_exists",
    "positive_profit_strategy", "profit_preserving_strategy", "symmetric_diagnostics",
]
