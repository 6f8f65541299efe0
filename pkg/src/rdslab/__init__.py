"""rdslab: physical measures of randomly perturbed maps, two independent ways.

Monte Carlo sojourn averaging and a sparse transfer-operator discretization
compute, at each noise level, the finitely many stationary measures of a
perturbed system, their supports, weights, and absorption structure; sweep
drivers track how these objects behave as the noise level decreases.
"""

from .dynamics import NoiseLevel, OrbitSample, PerturbedSystem, coverage_report, random_orbit, sample_noise
from .measures import MeasureVector, SupportSet, hausdorff, sojourn_global, sojourn_point, support_of, w1_distance
from .models import ModelSpec, build_model, model_names
from .spaces import Partition, StateSpace
from .sweep import McBudget, PartitionPolicy, basin_growth_check, hull_distance, match_classes, run_sweep, threshold_estimate
from .ulam import MarkovModel, absorption, assemble_mean_sojourn, build_ulam, recurrent_classes, stationary_measure, weights

__version__ = "0.1.0"
