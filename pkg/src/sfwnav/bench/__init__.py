"""Evaluation harness: episodes, suites, reports, plots and the command line."""

from .plot import plot_episode
from .runner import METHODS, EpisodeMetrics, recount_proxemics, run_episode
from .suite import RunReport, SuiteConfig, aggregate, run_suite
from .trace import Trace, read_trace, write_trace

__all__ = [
    "METHODS", "EpisodeMetrics", "RunReport", "SuiteConfig", "Trace", "aggregate", "plot_episode",
    "read_trace", "recount_proxemics", "run_episode", "run_suite", "write_trace",
]
