"""Hard-instance laboratory for minimax lower bounds in noiseless
classification under geometric margin conditions."""

from .assouad import (assouad_bound, build_e_regions, minimax_lower_bound,
                      project_estimator)
from .classes import ClassSpec, plan_parameters, theoretical_rate
from .construction import PerturbedFamily, ThetaVector, build_partition, validate_construction
from .densities import HardInstance, LabeledSample, sample_labeled
from .errors import (ConsistencyError, LabError, NumericError, ParameterError,
                     PlanningError)
from .geometry import boundary_distance_bounds, classify, numeric_boundary_distance
from .harness import ExperimentConfig, RateFit, fit_rate, run
from .learners import (ConstantZero, HistogramPlugin, KNearest, TubeAwareOracle,
                       empirical_minimax, fit, risk)

__all__ = [
    "ClassSpec", "ConsistencyError", "ConstantZero", "ExperimentConfig", "HardInstance",
    "HistogramPlugin", "KNearest", "LabError", "LabeledSample", "NumericError",
    "ParameterError", "PerturbedFamily", "PlanningError", "RateFit", "ThetaVector",
    "TubeAwareOracle", "assouad_bound", "boundary_distance_bounds", "build_e_regions",
    "build_partition", "classify", "empirical_minimax", "fit", "fit_rate",
    "minimax_lower_bound", "numeric_boundary_distance", "plan_parameters",
    "project_estimator", "risk", "run", "sample_labeled", "theoretical_rate",
    "validate_construction",
]
__version__ = "0.1.0"
