"""Configuration, experiment sweeps, reports and the command-line entry point."""

from .config import HarnessConfig, load_config
from .report import write_report
from .sweep import SweepConfig, SweepRecord, run_sweep

__all__ = ["HarnessConfig", "load_config", "SweepConfig", "SweepRecord", "run_sweep", "write_report"]
