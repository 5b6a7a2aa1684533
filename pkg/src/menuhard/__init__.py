"""Executable constructions behind query-complexity lower bounds for truthful
combinatorial auctions and public projects, checked exactly at small m."""

__version__ = "0.1.0"

from .core import Allocation, Bundle, EnumerationRefused, QueryCounter, TableValuation, Valuation, enumeration_cap
from .valuations import (
    AdditiveValuation,
    FlatValuation,
    PolarAdditiveValuation,
    StarValuation,
    TargetValuation,
    ZeroValuation,
    is_monotone,
    is_submodular,
)
from .mechanisms import cpp_bruteforce, cpp_vcg, greedy_auction, optimal_allocation, truthfulness_audit, vcg_auction
from .menus import Menu, check_polar_menu, extract_menu, find_structured_submenu
from .prob import audit_claim, chernoff_bound, exact_binomial_tail, exact_hypergeometric_tail

__all__ = [
    "AdditiveValuation", "Allocation", "Bundle", "EnumerationRefused", "FlatValuation", "Menu",
    "PolarAdditiveValuation", "QueryCounter", "StarValuation", "TableValuation", "TargetValuation", "Valuation",
    "ZeroValuation", "audit_claim", "check_polar_menu", "chernoff_bound", "cpp_bruteforce", "cpp_vcg",
    "enumeration_cap", "exact_binomial_tail", "exact_hypergeometric_tail", "extract_menu", "find_structured_submenu",
    "greedy_auction", "is_monotone", "is_submodular", "optimal_allocation", "truthfulness_audit", "vcg_auction",
]
