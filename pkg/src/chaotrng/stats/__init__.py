"""Statistical test battery and bias estimate."""
from .battery import BATTERY, TABLE_ROWS, BiasEstimate, TestReport, bias_estimate, run_battery
from .nist import TestResult

__all__ = [
    "BATTERY",
    "TABLE_ROWS",
    "BiasEstimate",
    "TestReport",
    "TestResult",
    "bias_estimate",
    "run_battery",
]
