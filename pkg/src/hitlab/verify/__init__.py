"""Monte Carlo verification of the closed forms."""

from .report import CSV_COLUMNS, format_table, suite_verdict, write_report_csv
from .scenarios import (
    CLAIMS,
    SCENARIOS,
    Check,
    Scenario,
    Thresholds,
    VerificationResult,
    run_scenario,
    run_suite,
    scenario_ids,
)
from .stats import (
    Estimate,
    RichardsonResult,
    chi_square_test,
    estimate,
    ks_test,
    richardson_bias,
    two_sample_z,
    z_test,
)

__all__ = [
    "CLAIMS", "CSV_COLUMNS", "SCENARIOS", "Check", "Estimate", "RichardsonResult", "Scenario",
    "Thresholds", "VerificationResult", "chi_square_test", "estimate", "format_table",
    "ks_test", "richardson_bias", "run_scenario", "run_suite", "scenario_ids",
    "suite_verdict", "two_sample_z", "write_report_csv", "z_test",
]
