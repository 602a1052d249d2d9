"""Federated, differentially private training of a small variational quantum classifier.

The circuit is simulated exactly on a statevector backend; privacy is tracked
with a Renyi accountant for the Poisson-subsampled Gaussian mechanism.
"""

from .accountant import PrivacyLedger, calibrate_sigma, compute_epsilon, rdp_step_cost
from .config import ConfigError, TrainingConfig
from .data import DataFormatError, Dataset, generate_synthetic, load_features_csv, write_features_csv
from .dp_sgd import DpConfig, clip_gradient, dp_sgd_step, run_dp_sgd
from .estimator import QFLDPClassifier
from .experiment import run_experiment
from .federation import RoundConfig, aggregate, partition, run_training
from .model import FeatureReducer, HybridModel, evaluate, loss_and_gradient, model_forward
from .statevector import GateOp, QuantumState, apply_gate, expectation_z, zero_state
from .vqc import vqc_forward, vqc_gradient

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataFormatError",
    "Dataset",
    "DpConfig",
    "FeatureReducer",
    "GateOp",
    "HybridModel",
    "PrivacyLedger",
    "QFLDPClassifier",
    "QuantumState",
    "RoundConfig",
    "TrainingConfig",
    "aggregate",
    "apply_gate",
    "calibrate_sigma",
    "clip_gradient",
    "compute_epsilon",
    "dp_sgd_step",
    "evaluate",
    "expectation_z",
    "generate_synthetic",
    "load_features_csv",
    "loss_and_gradient",
    "model_forward",
    "partition",
    "rdp_step_cost",
    "run_dp_sgd",
    "run_experiment",
    "run_training",
    "vqc_forward",
    "vqc_gradient",
    "write_features_csv",
    "zero_state",
]
