"""Nonparametric estimation of the drift and squared diffusion of a latent
volatility process from discrete observations of the price it drives.

Pipeline: simulate (or load) price increments, aggregate them into realized
quadratic variation blocks, regress block increments on block levels over
collections of trigonometric or piecewise-polynomial spaces, and pick the
dimension by a penalized criterion with data-calibrated constants.
"""

from ._version import __version__
from .models import (CIR, EXP_OU, EXP_TANH_OU, TANH_OU_SHIFT, DiffusionModel,
                     EulerSampler, ModelError, OUParams, builtin_model,
                     ou_exact_path, ou_exact_step, stationary_draw)
from .sampling import (FineGridPath, IntegratedSeries, ObservationSet,
                       SamplingError, generate_observations, integrate_blocks,
                       simulate_fine_path)
from .quadvar import (DIFF_SQ, DRIFT, QuadVarError, QuadVarSeries,
                      RegressionSample, build_regression, quad_var)
from .bases import (BasisError, BasisSpec, EstimationDomain, collection,
                    design_matrix, domain_from_data, max_dimension, poly_spec,
                    trig_eval, trig_spec)
from .lsq import Fit, FitError, empirical_error, evaluate, fit
from .selection import (CalibrationRecord, DiffCalibration, FullEstimate,
                        PenaltyParams, SelectionError, SelectionOutcome,
                        calibrate_diff_constant, calibrate_drift_constant,
                        full_estimation, penalty, select)
from .harness import (ExperimentPlan, HarnessError, McCell, McReport,
                      derive_rng, merge_reports, run_replication, run_table)
from .config import (ConfigError, RunConfig, dump_config, parse_config,
                     plans_from_config)

__all__ = [
    "__version__",
    # models
    "CIR", "EXP_OU", "EXP_TANH_OU", "TANH_OU_SHIFT", "DiffusionModel",
    "EulerSampler", "ModelError", "OUParams", "builtin_model", "ou_exact_path",
    "ou_exact_step", "stationary_draw",
    # sampling
    "FineGridPath", "IntegratedSeries", "ObservationSet", "SamplingError",
    "generate_observations", "integrate_blocks", "simulate_fine_path",
    # quadratic variation and regression samples
    "DIFF_SQ", "DRIFT", "QuadVarError", "QuadVarSeries", "RegressionSample",
    "build_regression", "quad_var",
    # bases and domain
    "BasisError", "BasisSpec", "EstimationDomain", "collection", "design_matrix",
    "domain_from_data", "max_dimension", "poly_spec", "trig_eval", "trig_spec",
    # least squares
    "Fit", "FitError", "empirical_error", "evaluate", "fit",
    # selection and calibration
    "CalibrationRecord", "DiffCalibration", "FullEstimate", "PenaltyParams",
    "SelectionError", "SelectionOutcome", "calibrate_diff_constant",
    "calibrate_drift_constant", "full_estimation", "penalty", "select",
    # Monte Carlo harness
    "ExperimentPlan", "HarnessError", "McCell", "McReport", "derive_rng",
    "merge_reports", "run_replication", "run_table",
    # configuration
    "ConfigError", "RunConfig", "dump_config", "parse_config", "plans_from_config",
]
