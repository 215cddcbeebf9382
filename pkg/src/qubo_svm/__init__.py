"""Linear SVM training through k-bit QUBO encodings of the dual problem."""

__version__ = "0.1.0"

from .baseline import SmoConfig, dual_objective, smo_train
from .datasets import FoldPlan, SvmDataset, load_dataset, make_folds
from .encoding import (
    PrecisionEncoding,
    QuboSvmProblem,
    TrainedModel,
    build_qubo,
    constraint_residual,
    decode_alpha,
    make_encoding,
    predict,
    predict_many,
    recover_bias,
    train,
)
from .errors import ConstraintUnsatisfied, NoSupportVectors, ProblemTooLarge, ValidationError
from .kernels import BACKEND
from .qubo import QuboInstance, SolverReport, brute_force_solve, energy, flip_delta, to_ising
from .tabu import TabuConfig, multistart_best, tabu_solve

__all__ = [
    "BACKEND",
    "ConstraintUnsatisfied",
    "FoldPlan",
    "NoSupportVectors",
    "PrecisionEncoding",
    "ProblemTooLarge",
    "QuboInstance",
    "QuboSvmProblem",
    "SmoConfig",
    "SolverReport",
    "SvmDataset",
    "TabuConfig",
    "TrainedModel",
    "ValidationError",
    "brute_force_solve",
    "build_qubo",
    "constraint_residual",
    "decode_alpha",
    "dual_objective",
    "energy",
    "flip_delta",
    "load_dataset",
    "make_encoding",
    "make_folds",
    "multistart_best",
    "predict",
    "predict_many",
    "recover_bias",
    "smo_train",
    "tabu_solve",
    "to_ising",
    "train",
]
