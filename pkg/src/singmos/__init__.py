"""Singing-voice MOS regression over precomputed embeddings.

A small, dependency-light stack: hand-derived differentiable layers (nn),
four regression architectures including gated two-model fusion with a
Bhattacharyya-distance alignment loss (models), bit-exact embedding and
checkpoint persistence (store / models), and a deterministic training and
evaluation harness with a grid runner (training). The `singmos` CLI exposes
the whole workflow.
"""

from .errors import (
    ConfigurationError,
    CorruptionError,
    DataConsistencyError,
    DimensionError,
    DomainError,
    FormatError,
    NumericDivergenceError,
    SingmosError,
    ValidationError,
)
from .models import (
    ForwardOutput,
    Model,
    ModelKind,
    ModelSpec,
    build,
    load_checkpoint,
    parameter_count,
    save_checkpoint,
)
from .nn import LayerParams, LossBreakdown, Tensor
from .store import (
    ClipLabel,
    Dataset,
    EmbeddingTable,
    load_labels,
    make_batches,
    read_embeddings,
    synth_generate,
    write_embeddings,
    write_labels,
)
from .training import GridCell, TrainConfig, TrainReport, evaluate, run_grid, train

__version__ = "0.1.0"

__all__ = [
    "ClipLabel",
    "ConfigurationError",
    "CorruptionError",
    "DataConsistencyError",
    "Dataset",
    "DimensionError",
    "DomainError",
    "EmbeddingTable",
    "FormatError",
    "ForwardOutput",
    "GridCell",
    "LayerParams",
    "LossBreakdown",
    "Model",
    "ModelKind",
    "ModelSpec",
    "NumericDivergenceError",
    "SingmosError",
    "Tensor",
    "TrainConfig",
    "TrainReport",
    "ValidationError",
    "build",
    "evaluate",
    "load_checkpoint",
    "load_labels",
    "make_batches",
    "parameter_count",
    "read_embeddings",
    "run_grid",
    "save_checkpoint",
    "synth_generate",
    "train",
    "write_embeddings",
    "write_labels",
]
