from .patterns import PATTERNS, BenchmarkSpec, build_pattern, regions_for_payload
from .report import emit_report
from .runner import BenchmarkResult, ModeStats, run_benchmark

__all__ = [
    "PATTERNS",
    "BenchmarkResult",
    "BenchmarkSpec",
    "ModeStats",
    "build_pattern",
    "emit_report",
    "regions_for_payload",
    "run_benchmark",
]
