"""Calibrate Bayesian linear credit-model beliefs on log-probability and recourse cost."""
from .calibrate import BeliefGrid, ParetoSet, calibrate_run, pareto_front, sweep
from .context import ContextSpec, GridCellMetrics, apply_tn_floor, evaluate_cell, fn_tn_costs
from .data import Dataset, RawTable, SubsampleSpec, load_csv, standardize, subsample, transform_labels
from .posterior import (Belief, Posterior, PredictiveScore, capped_log_prob, decide, fit_posterior,
                        positive_probability, predictive_score)
from .recourse import (CostWeights, RecourseResult, linear_recourse, policy_recourse, verify_kkt,
                       weighted_recourse)

__version__ = "0.1.0"
