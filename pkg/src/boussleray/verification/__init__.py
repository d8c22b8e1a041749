from .marsigli import DiagnosticReport, MarsigliResult, MarsigliScenario, run_marsigli
from .mms import MmsProblem
from .norms import ErrorNorms, compute_error_norms, h1_seminorm_error, l2_error
from .properties import PropertyResult, run_property_suite
from .studies import RateTable, observed_rate, run_mms, run_spatial_study, run_temporal_study

__all__ = [
    "DiagnosticReport",
    "ErrorNorms",
    "MarsigliResult",
    "MarsigliScenario",
    "MmsProblem",
    "PropertyResult",
    "RateTable",
    "compute_error_norms",
    "h1_seminorm_error",
    "l2_error",
    "observed_rate",
    "run_marsigli",
    "run_mms",
    "run_property_suite",
    "run_spatial_study",
    "run_temporal_study",
]
