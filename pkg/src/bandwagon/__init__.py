"""Numerical model of a market for goods with positive social influence.

Customers with heterogeneous willingness to pay buy when their surplus,
raised by a term proportional to the fraction of buyers, is non-negative.
The package solves the customers' equilibria, the monopolist's pricing
problem, both phase diagrams, and simulates pricing policies.
"""
from .demand import (Branch, BranchBoundaries, DemandEquilibria, Equilibrium, MarketParams,
                     branch_boundaries, d_fun, demand_curve, demand_equilibria, inverse_demand)
from .distribution import (Gaussian, GammaFunctions, IwpDistribution, Logistic,
                           TabulatedDistribution, make_gamma)
from .errors import ConvergenceError, DomainError, NoViableStrategy
from .phase import critical_points
from .supply import (SupplyCandidate, SupplyKind, SupplyOptimum, d_tilde,
                     effective_supply_price, optimize)

__all__ = [
    "Branch", "BranchBoundaries", "DemandEquilibria", "Equilibrium", "MarketParams",
    "branch_boundaries", "d_fun", "demand_curve", "demand_equilibria", "inverse_demand",
    "Gaussian", "GammaFunctions", "IwpDistribution", "Logistic", "TabulatedDistribution",
    "make_gamma", "ConvergenceError", "DomainError", "NoViableStrategy", "critical_points",
    "SupplyCandidate", "SupplyKind", "SupplyOptimum", "d_tilde", "effective_supply_price",
    "optimize",
]
__version__ = "0.1.0"
