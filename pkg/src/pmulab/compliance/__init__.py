"""M-class test suite: enumeration, execution, limits and reports."""
from .limits import Limit, LimitTable, default_limits, load_limits
from .report import build_report, write_csv, write_json
from .runner import Impairments, Verdict, config_for, evaluate, run_suite, run_test
from .suite import (PUBLISHED_TOTAL, SuiteCounts, TestCase, enumerate_tests, select,
                    suite_counts)

__all__ = [
    "Impairments", "Limit", "LimitTable", "PUBLISHED_TOTAL", "SuiteCounts", "TestCase", "Verdict",
    "build_report", "config_for", "default_limits", "enumerate_tests", "evaluate",
    "load_limits", "run_suite", "run_test", "select", "suite_counts", "write_csv", "write_json",
]
