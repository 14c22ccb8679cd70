"""Turning hyperlinear approximations of Z^r into sofic-induced ones."""
from .approx import (
    DefectReport,
    HyperlinearApprox,
    SoficApprox,
    SoficInducedApprox,
    almost_invariance_defect,
    is_permutation_matrix,
    sofic_induce,
    validate_hyperlinear,
    validate_sofic,
)
from .pipeline import distances, exact_orbit_basis, sofify, verify_certificate
from .recursion import BlockResult, RecursionState, build_block, inner_step, label_permutation
from .schedule import ParamSchedule, desk_schedule, level_sizes
from .search import ConditionReport, SearchContext, StepParams, candidate_vector_search

__all__ = [
    "BlockResult",
    "ConditionReport",
    "DefectReport",
    "HyperlinearApprox",
    "ParamSchedule",
    "RecursionState",
    "SearchContext",
    "SoficApprox",
    "SoficInducedApprox",
    "StepParams",
    "almost_invariance_defect",
    "build_block",
    "candidate_vector_search",
    "desk_schedule",
    "distances",
    "exact_orbit_basis",
    "inner_step",
    "is_permutation_matrix",
    "label_permutation",
    "level_sizes",
    "sofic_induce",
    "sofify",
    "validate_hyperlinear",
    "validate_sofic",
    "verify_certificate",
]
