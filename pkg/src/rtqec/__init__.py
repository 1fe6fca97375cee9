"""Desk-scale real-time surface-code memory stack.

Bit-accurate building blocks for a distance-d rotated surface-code memory
experiment with a hardware-style decode-and-feedback loop:

- layout: code geometry (data/ancilla roles, stabilizer supports, logicals)
- sim: stochastic Pauli-frame memory-experiment sampler + fault probing
- dataset: binary shot-record and defect-stream file formats
- syndrome: measurement-difference preprocessing (defect extraction)
- qlstm: integer fixed-point recurrent decoder + weight file format
- mwpm: exact minimum-weight perfect-matching baseline decoder
- feedback: Pauli-frame bookkeeping and corrective-pulse planning
- loop: closed-loop experiment runner, latency budget, decay fitting
- scaling: resource projections versus code distance
- cli: reproducible command-line front end (rtqec ...)
"""

__version__ = "0.1.0"

from .feedback import PauliFrame, apply_verdict, final_pfu, plan_feedback
from .layout import CodeLayout, Stabilizer, build_layout
from .loop import (
    ExperimentResult,
    LatencyBudget,
    LoopConfig,
    check_feasibility,
    check_throughput,
    fit_decay,
    run,
)
from .mwpm import DetectorGraph, MatchResult, build_graph, decode, decode_batch
from .qlstm import QLstmDecoder, QLstmWeights
from .scaling import CapacityReport, ScalingRow, max_supported_distance, project
from .sim import InjectionSpec, NoiseParams, ShotRecord, sample_memory

__all__ = [
    "CodeLayout",
    "Stabilizer",
    "build_layout",
    "NoiseParams",
    "InjectionSpec",
    "ShotRecord",
    "sample_memory",
    "QLstmWeights",
    "QLstmDecoder",
    "DetectorGraph",
    "MatchResult",
    "build_graph",
    "decode",
    "decode_batch",
    "PauliFrame",
    "apply_verdict",
    "plan_feedback",
    "final_pfu",
    "LoopConfig",
    "LatencyBudget",
    "ExperimentResult",
    "run",
    "check_feasibility",
    "check_throughput",
    "fit_decay",
    "ScalingRow",
    "CapacityReport",
    "project",
    "max_supported_distance",
    "__version__",
]
