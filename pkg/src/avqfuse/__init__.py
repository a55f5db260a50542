"""Confidence-aware audio-visual quality fusion.

Core pieces: a small float64 autodiff substrate (`tensor`, `optim`),
modality confidence estimation (`confidence`), the confidence-gated
cross-modal channel-attention mixer (`mixer`), the end-to-end model with
its composite loss and training loop (`model`), evaluation statistics
(`metrics`), a synthetic asymmetric-distortion generator (`synth`), and a
CLI harness (`cli`).
"""

__version__ = "0.1.0"

from .confidence import ArtifactMatrix, AudioQualityCue, ConfidencePair, VisualConfidenceModule, audio_confidence
from .errors import AvqError
from .metrics import EvalReport, SignificanceReport, evaluate, fit_logistic4, paired_tests, plcc, srocc
from .mixer import MixerOutput, MixerParams, mix
from .model import (
    ClipSample,
    Model,
    ModelConfig,
    Prediction,
    TrainSettings,
    load_checkpoint,
    pcc_loss,
    save_checkpoint,
    total_loss,
    train,
)
from .optim import Adam, AdamState, adam_step, finite_difference_check
from .synth import DistortionScenario, GeneratorSpec, ScenarioMix, generate_clip, generate_split
from .tensor import Tensor, no_grad

__all__ = [
    "__version__",
    "Adam",
    "AdamState",
    "ArtifactMatrix",
    "AudioQualityCue",
    "AvqError",
    "ClipSample",
    "ConfidencePair",
    "DistortionScenario",
    "EvalReport",
    "GeneratorSpec",
    "MixerOutput",
    "MixerParams",
    "Model",
    "ModelConfig",
    "Prediction",
    "ScenarioMix",
    "SignificanceReport",
    "Tensor",
    "TrainSettings",
    "VisualConfidenceModule",
    "adam_step",
    "audio_confidence",
    "evaluate",
    "finite_difference_check",
    "fit_logistic4",
    "generate_clip",
    "generate_split",
    "load_checkpoint",
    "mix",
    "no_grad",
    "paired_tests",
    "pcc_loss",
    "plcc",
    "save_checkpoint",
    "srocc",
    "total_loss",
    "train",
]
