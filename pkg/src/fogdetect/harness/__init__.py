"""Data ingestion, experiment drivers and the command-line interface."""
from .data import IngestSpec, QuantizationError, SyntheticSpec, ingest, sample_sets, split_halves, synthetic_series
from .experiments import (
    CommModel,
    experiment_capacity,
    experiment_commcost,
    experiment_effectiveness,
    simulate,
    train_thresholds,
    write_table,
)

__all__ = [
    "CommModel",
    "IngestSpec",
    "QuantizationError",
    "SyntheticSpec",
    "experiment_capacity",
    "experiment_commcost",
    "experiment_effectiveness",
    "ingest",
    "sample_sets",
    "simulate",
    "split_halves",
    "synthetic_series",
    "train_thresholds",
    "write_table",
]
