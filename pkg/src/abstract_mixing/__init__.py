"""Summing norms, mixed norms and mixing constants on finite instances."""
from .core_model import ExponentParams, Instance, ParameterError, ShapeError, SimplexMeasure, WeightedFamily
from .lp_solver import LpProblem, LpSolution, SolverFailure, solve
from .mixed_families import MixedFamilyValues, mixed_norm, mixed_norm_sup_measure, mixed_norm_tau_search
from .mixing import (
    SeminormBallModel,
    TwoLayerInstance,
    check_composition_mixing,
    check_composition_summing,
    check_conditions,
    check_inclusion,
    check_seminorm_characterization,
    mixing_lower_bound,
    mixing_upper_domination,
)
from .multilinear import MultilinearInstance, multi_characterization_check, multi_mixing_lower_bound, reduce_t1
from .summing import pietsch_norm_lp, ratio_lower_bound, witness_from_dual

__version__ = "0.1.0"
