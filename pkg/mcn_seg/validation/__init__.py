"""Verification harnesses: gradient checks, oracles and property demos."""

from mcn_seg.validation.filter_benchmark import (
    FilterBenchmarkResult,
    run_filter_benchmark,
)
from mcn_seg.validation.gradient_suite import (
    GradCheckCase,
    GradCheckRow,
    default_cases,
    run_suite,
)
from mcn_seg.validation.mpn_benefit import MpnBenefitResult, run_mpn_benefit
from mcn_seg.validation.receptive_field_oracle import (
    ReceptiveFieldRow,
    gradient_support,
    measured_receptive_field,
    receptive_field_report,
)

__all__ = [
    "FilterBenchmarkResult",
    "GradCheckCase",
    "GradCheckRow",
    "MpnBenefitResult",
    "ReceptiveFieldRow",
    "default_cases",
    "gradient_support",
    "measured_receptive_field",
    "receptive_field_report",
    "run_filter_benchmark",
    "run_mpn_benefit",
    "run_suite",
]
