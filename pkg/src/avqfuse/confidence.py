"""Per-clip modality confidence estimation.

Visual confidence: frame-level artifact probabilities are smoothed along
time by a learnable depthwise convolution, each smoothed frame row is scored
by parallel MLP heads plus a combiner ending in a sigmoid, and the clip
score is the temporal average. Audio confidence: a raw quality cue is
min-max normalized into [0, 1] against a fixed configured range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, DegenerateInputError, ShapeMismatchError
from .tensor import Tensor

# Head/combiner sizes: smallest configuration that keeps the parallel heads
# non-degenerate. Kernel width 5 covers short flicker bursts at 8-frame
# sampling.
NUM_HEADS = 4
HEAD_HIDDEN = 16
COMBINER_HIDDEN = 8
KERNEL_WIDTH = 5


@dataclass
class ArtifactMatrix:
    """T x K matrix of per-frame artifact probabilities, entries in [0, 1]."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        if self.probs.ndim != 2:
            raise ShapeMismatchError(f"artifact matrix must be rank 2, got shape {self.probs.shape}")
        if self.probs.size and (self.probs.min() < 0.0 or self.probs.max() > 1.0):
            raise ConfigError("artifact probabilities must lie in [0, 1]")

    @property
    def num_frames(self):
        return self.probs.shape[0]

    @property
    def num_kinds(self):
        return self.probs.shape[1]


@dataclass
class AudioQualityCue:
    """Raw no-reference audio quality score plus its normalization range."""

    raw_score: float
    cue_min: float = 1.0
    cue_max: float = 5.0

    def __post_init__(self):
        if not self.cue_min < self.cue_max:
            raise ConfigError(f"cue_min must be < cue_max, got [{self.cue_min}, {self.cue_max}]")


@dataclass
class ConfidencePair:
    """Clip-level visual and audio confidences with per-frame visual scores."""

    r_v: float
    r_a: float
    frame_scores: np.ndarray = field(default_factory=lambda: np.zeros(0))


def audio_confidence(cue: AudioQualityCue) -> float:
    """Min-max normalize the raw cue into [0, 1], clamping out-of-range scores."""
    span = cue.cue_max - cue.cue_min
    return float(np.clip((cue.raw_score - cue.cue_min) / span, 0.0, 1.0))


class VisualConfidenceModule:
    """Learnable artifact-to-confidence network.

    Parameters: a (K, 5) depthwise temporal kernel initialized to a
    normalized box filter, NUM_HEADS parallel K -> 16 -> 1 MLP heads (ReLU),
    and a heads -> 8 -> 1 combiner whose output passes through a sigmoid.
    """

    def __init__(self, num_kinds: int, rng: np.random.Generator, name="vcm"):
        k = num_kinds
        self.num_kinds = k
        box = np.full((k, KERNEL_WIDTH), 1.0 / KERNEL_WIDTH)
        self.kernel = T.parameter(box, name=f"{name}.kernel")
        self.heads = []
        for h in range(NUM_HEADS):
            self.heads.append(
                {
                    "w1": T.init_uniform(rng, (k, HEAD_HIDDEN), k, name=f"{name}.head{h}.w1"),
                    "b1": T.init_uniform(rng, (HEAD_HIDDEN,), k, name=f"{name}.head{h}.b1"),
                    "w2": T.init_uniform(rng, (HEAD_HIDDEN, 1), HEAD_HIDDEN, name=f"{name}.head{h}.w2"),
                    "b2": T.init_uniform(rng, (1,), HEAD_HIDDEN, name=f"{name}.head{h}.b2"),
                }
            )
        self.comb_w1 = T.init_uniform(rng, (NUM_HEADS, COMBINER_HIDDEN), NUM_HEADS, name=f"{name}.comb.w1")
        self.comb_b1 = T.init_uniform(rng, (COMBINER_HIDDEN,), NUM_HEADS, name=f"{name}.comb.b1")
        self.comb_w2 = T.init_uniform(rng, (COMBINER_HIDDEN, 1), COMBINER_HIDDEN, name=f"{name}.comb.w2")
        self.comb_b2 = T.init_uniform(rng, (1,), COMBINER_HIDDEN, name=f"{name}.comb.b2")

    def parameters(self):
        out = [self.kernel]
        for head in self.heads:
            out.extend(head.values())
        out.extend([self.comb_w1, self.comb_b1, self.comb_w2, self.comb_b2])
        return out

    def kernel_parameters(self):
        return [self.kernel]

    def head_parameters(self):
        out = []
        for head in self.heads:
            out.extend(head.values())
        return out

    def combiner_parameters(self):
        return [self.comb_w1, self.comb_b1, self.comb_w2, self.comb_b2]

    def smooth_artifacts(self, artifacts: ArtifactMatrix) -> Tensor:
        """Temporally smooth each artifact channel with the learned kernel."""
        return T.depthwise_temporal_conv1d(Tensor(artifacts.probs), self.kernel)

    def frame_scores_from_rows(self, rows: Tensor) -> Tensor:
        """Score smoothed frame rows: (N, K) -> (N, 1) confidences in (0, 1)."""
        if rows.shape[1] != self.num_kinds:
            raise ShapeMismatchError(
                f"expected rows with {self.num_kinds} artifact kinds, got shape {rows.shape}"
            )
        head_outs = []
        for head in self.heads:
            hidden = T.relu(T.matmul(rows, head["w1"]) + head["b1"])
            head_outs.append(T.matmul(hidden, head["w2"]) + head["b2"])
        stacked = T.concat(head_outs, axis=1)
        hidden = T.relu(T.matmul(stacked, self.comb_w1) + self.comb_b1)
        return T.sigmoid(T.matmul(hidden, self.comb_w2) + self.comb_b2)

    def frame_confidence(self, x_t) -> float:
        """Score a single smoothed frame row of length K."""
        row = np.asarray(x_t.data if isinstance(x_t, Tensor) else x_t, dtype=np.float64).reshape(1, -1)
        with T.no_grad():
            return self.frame_scores_from_rows(Tensor(row)).item()

    def clip_confidence_tensor(self, artifacts: ArtifactMatrix) -> tuple[Tensor, Tensor]:
        """Differentiable clip confidence: returns (r_v (1,1), frame scores (T,1))."""
        if artifacts.num_frames < 1:
            raise DegenerateInputError("clip confidence needs at least one frame")
        smoothed = self.smooth_artifacts(artifacts)
        scores = self.frame_scores_from_rows(smoothed)
        return T.tmean(scores, axis=0, keepdims=True), scores

    def clip_visual_confidence(self, artifacts: ArtifactMatrix) -> tuple[float, np.ndarray]:
        """Clip-level visual confidence and the per-frame scores behind it."""
        with T.no_grad():
            r_v, scores = self.clip_confidence_tensor(artifacts)
            return r_v.item(), scores.data.reshape(-1).copy()


def smooth_artifacts(artifacts: ArtifactMatrix, kernel: Tensor) -> Tensor:
    """Module-free smoothing entry point (same contract as the method)."""
    return T.depthwise_temporal_conv1d(Tensor(artifacts.probs), kernel)
