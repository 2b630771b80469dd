"""Causal-DAG-aware survival prediction with a conditional VAE."""
from .errors import (
    CycleError,
    DegenerateRangeError,
    DimensionError,
    EmptyDatasetError,
    FormatError,
    NoComparablePairsError,
    NonScalarLossError,
    NonSquareError,
    ShapeError,
    TargetNotSinkWarning,
    TooSmallError,
)
from .graph import (
    Dag,
    DagSampleConfig,
    read_adjacency,
    sample_erdos_renyi_dag,
    sem_backward,
    sem_forward,
    validate_dag,
    write_adjacency,
)
from .synthgen import (
    GenConfig,
    SurvivalDataset,
    apply_censoring,
    discretize,
    generate,
    read_dataset,
    split,
    write_dataset,
)
from .metrics import CtdReport, bootstrap, ctd
from .model import (
    PRESETS,
    DagSurvModel,
    ModelConfig,
    SurvivalPrediction,
    TrainConfig,
    elbo_loss,
    kl_term,
    load_model,
    predict,
    reparameterize,
    save_model,
    survival_log_likelihood,
    train,
)

__version__ = "0.1.0"
