"""Clonal selection classification with clustered, trainable immunological memory."""

from .affinity import AffinityReport, affinity, classify, matches_label, raw_output
from .core import (
    Antibody,
    ConfigError,
    ExperimentConfig,
    RandomSource,
    Sample,
    SampleSet,
    load_config,
    validate_config,
)
from .dataset import DatasetSpec, generate, normalize, read_csv, write_csv
from .harness import RunReport, compare, run_experiment
from .memory import MemoryCell, MemoryStore, classify_with_memory, retrieve
from .recsa import ElitePools, GenerationTrace, run

__version__ = "0.1.0"
