"""Experiment runner and subdomain bundle interchange."""
from .bundle import export_bundle, ingest_bundle
from .study import CSV_COLUMNS, ExperimentConfig, RunResult, run_problem, run_study, write_csv

__all__ = ["CSV_COLUMNS", "ExperimentConfig", "RunResult", "export_bundle", "ingest_bundle",
           "run_problem", "run_study", "write_csv"]
