"""Sparse tensor graphical models: estimation, inference and simulation."""
from .estimate import PrecisionSet, TlassoConfig, fit, fit_direct_glasso, fit_pmle, mode_covariance, tuning_lambda
from .experiment import ExperimentConfig, presets, run_experiment
from .glasso import GlassoConfig, GlassoResult
from .inference import InferenceReport, fdr_threshold, kron_fdp, recover_support
from .metrics import EvalResult, kron_error, mode_errors, selection_rates
from .simulate import GroundTruth, make_rng, make_truth, sample_tensor_normal

__version__ = "0.1.0"
