"""Experiment plumbing: configs, single runs, figures, sweeps and the demo."""
from .config import RunConfig, load_config, merge
from .runner import CSV_HEADER, RunOutcome, rows_to_csv, run_once

__all__ = ["RunConfig", "load_config", "merge", "CSV_HEADER", "RunOutcome", "rows_to_csv", "run_once"]
