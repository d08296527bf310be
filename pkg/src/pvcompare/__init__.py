"""Comparison of the predictive values of two binary diagnostic tests when
only part of the sample has its disease status verified."""

from .em import EmResult, run_em
from .estimators import EMSEMComparison, MultipleImputationComparison
from .exceptions import InputError, NumericalError, PVCompareError
from .inference import PvInference, summarize
from .mi import impute_m, pool, rubin_pool
from .model import CompleteTable, Lambdas, Theta, VerificationTable
from .report import __version__
from .sem import sem_covariance
from .sim import Scenario, run_study

__all__ = [
    "CompleteTable", "EMSEMComparison", "EmResult", "InputError", "Lambdas",
    "MultipleImputationComparison", "NumericalError", "PVCompareError", "PvInference",
    "Scenario", "Theta", "VerificationTable", "impute_m", "pool", "rubin_pool",
    "run_em", "run_study", "sem_covariance", "summarize", "__version__",
]
