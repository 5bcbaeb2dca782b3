# ==============================================================================
# utils/__init__.py — Utils Package
# ==============================================================================
# Purpose: Seeded randomness and run artifact writing
# ==============================================================================

from .report_writer import ReportWriter, read_report, read_follower_trace
from .rng import SeededRNG

__all__ = [
    'ReportWriter',
    'read_report',
    'read_follower_trace',
    'SeededRNG',
]
