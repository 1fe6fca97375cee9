"""qectrain — offline trainer for the recurrent surface-code decoder.

Consumes the decoder stack's published interchange formats (shot files,
defect files, weight files) and command-line tool only; produces weight
files the runtime loads unchanged.
"""

from .evaluate import DecayFit, compare_decoders, fit_decay, score_dataset, score_float
from .formats import (
    ShotData,
    WeightTensors,
    load_weights,
    read_defects,
    read_shots,
    save_weights,
)
from .model import ClippedLstm, integer_forward
from .prepare import PAD_VALUE, SEQ_LEN, defects_from_raw, prepare
from .train import StageReport, TrainConfig, TrainingDiverged, pretrain, quantize_train

__version__ = "0.1.0"

__all__ = [
    "ClippedLstm",
    "DecayFit",
    "PAD_VALUE",
    "SEQ_LEN",
    "ShotData",
    "StageReport",
    "TrainConfig",
    "TrainingDiverged",
    "WeightTensors",
    "compare_decoders",
    "defects_from_raw",
    "fit_decay",
    "integer_forward",
    "load_weights",
    "prepare",
    "pretrain",
    "quantize_train",
    "read_defects",
    "read_shots",
    "save_weights",
    "score_dataset",
    "score_float",
    "__version__",
]
