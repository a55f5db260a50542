"""Confidence-gated cross-modal channel attention.

An audio query built from the audio embedding concatenated with its
confidence meets visual channel keys that are gated by the visual
confidence; their elementwise product (through a sigmoid) yields per-channel
attention weights applied as a multiplicative residual to the visual feature
map. All projections are pure linear maps without biases so the
zero-parameter behavior stays exactly sigmoid(0) = 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ShapeMismatchError
from .tensor import Tensor


@dataclass
class MixerParams:
    """Learnable projections: audio query (d+1, C), visual key (C, C), gate (1, C)."""

    w_audio: Tensor
    w_visual: Tensor
    w_gate: Tensor

    @classmethod
    def init(cls, audio_dim: int, channels: int, rng: np.random.Generator, name="mixer"):
        return cls(
            w_audio=T.init_uniform(rng, (audio_dim + 1, channels), audio_dim + 1, name=f"{name}.w_audio"),
            w_visual=T.init_uniform(rng, (channels, channels), channels, name=f"{name}.w_visual"),
            w_gate=T.init_uniform(rng, (1, channels), 1, name=f"{name}.w_gate"),
        )

    @classmethod
    def zeros(cls, audio_dim: int, channels: int):
        return cls(
            w_audio=T.parameter(np.zeros((audio_dim + 1, channels)), name="mixer.w_audio"),
            w_visual=T.parameter(np.zeros((channels, channels)), name="mixer.w_visual"),
            w_gate=T.parameter(np.zeros((1, channels)), name="mixer.w_gate"),
        )

    def parameters(self):
        return [self.w_audio, self.w_visual, self.w_gate]

    @property
    def channels(self):
        return self.w_visual.shape[0]

    @property
    def audio_dim(self):
        return self.w_audio.shape[0] - 1


@dataclass
class MixerOutput:
    """Enhanced features plus every intermediate, kept for inspection."""

    v_enhanced: Tensor  # (B, C, H, W)
    alpha: Tensor  # (B, C), strictly inside (0, 1)
    q_a: Tensor  # (B, C)
    k_v: Tensor  # (B, C)
    k_v_gated: Tensor  # (B, C)


def audio_query(a: Tensor, r_a: Tensor, p: MixerParams) -> Tensor:
    """Project [audio ; audio confidence] into the visual channel space."""
    if a.data.ndim != 2 or a.shape[1] != p.audio_dim:
        raise ShapeMismatchError(f"audio_query: audio shape {a.shape} does not match W_a {p.w_audio.shape}")
    if r_a.data.ndim != 2 or r_a.shape != (a.shape[0], 1):
        raise ShapeMismatchError(f"audio_query: confidence shape {r_a.shape} must be ({a.shape[0]}, 1)")
    return T.matmul(T.concat([a, r_a], axis=1), p.w_audio)


def gated_visual_key(v: Tensor, r_v: Tensor, p: MixerParams) -> tuple[Tensor, Tensor]:
    """Pooled visual keys and their confidence-gated counterpart."""
    if v.data.ndim != 4 or v.shape[1] != p.channels:
        raise ShapeMismatchError(f"gated_visual_key: visual shape {v.shape} does not match W_v {p.w_visual.shape}")
    if r_v.data.ndim != 2 or r_v.shape != (v.shape[0], 1):
        raise ShapeMismatchError(f"gated_visual_key: confidence shape {r_v.shape} must be ({v.shape[0]}, 1)")
    k_v = T.matmul(T.global_average_pool(v), p.w_visual)
    gate = T.sigmoid(T.matmul(r_v, p.w_gate))
    return k_v, T.mul(k_v, gate)


def channel_attention(q_a: Tensor, k_v_gated: Tensor) -> Tensor:
    """Sigmoid of the elementwise query-key product; strictly in (0, 1)."""
    if q_a.shape != k_v_gated.shape:
        raise ShapeMismatchError(f"channel_attention: shapes {q_a.shape} and {k_v_gated.shape} differ")
    return T.sigmoid(T.mul(q_a, k_v_gated))


def enhance(v: Tensor, alpha: Tensor) -> Tensor:
    """Multiplicative channel residual: v * (1 + alpha), uniform over (H, W)."""
    if v.data.ndim != 4 or alpha.data.ndim != 2 or v.shape[:2] != alpha.shape:
        raise ShapeMismatchError(f"enhance: visual shape {v.shape} does not match alpha shape {alpha.shape}")
    b, c = alpha.shape
    return T.add(v, T.mul(v, T.reshape(alpha, (b, c, 1, 1))))


def mix(v: Tensor, a: Tensor, r_a: Tensor, r_v: Tensor, p: MixerParams) -> MixerOutput:
    """Full mixer pass; intermediates are retained in the output."""
    q_a = audio_query(a, r_a, p)
    k_v, k_v_gated = gated_visual_key(v, r_v, p)
    alpha = channel_attention(q_a, k_v_gated)
    v_enhanced = enhance(v, alpha)
    return MixerOutput(v_enhanced=v_enhanced, alpha=alpha, q_a=q_a, k_v=k_v, k_v_gated=k_v_gated)
