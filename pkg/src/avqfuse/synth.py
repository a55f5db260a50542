"""Synthetic asymmetric-distortion generator and dataset record files.

Clips come from a known generative model so every downstream claim is
checkable against ground truth: the label is a clamped linear function of
the two severities plus Gaussian noise, artifact probabilities rise
monotonically with video severity through per-type normalized sigmoid
response profiles, and the audio cue falls affinely with audio severity.

A per-clip content scale multiplies both the visual base features and the
audio embedding. Severity must therefore be disentangled from content
loudness/contrast, which is exactly the kind of cross-modal comparison the
mixer's multiplicative attention path provides; the confidence inputs carry
the cleaner severity signal. Generation is a pure function of
(scenario, spec) including all seeds.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .confidence import ArtifactMatrix, AudioQualityCue
from .errors import ConfigError, FormatError
from .model import ClipSample, ModelConfig

MODES = ("video_only", "audio_only", "both", "clean")

DATASET_MAGIC = b"AVQD"
DATASET_VERSION = 1

# Seed-stream offsets keeping the three splits disjoint for any base seed
# below the offset spacing.
_SPLIT_OFFSETS = {"train": 0, "val": 1_000_000, "test": 2_000_000}


@dataclass
class DistortionScenario:
    """Degradation regime for a single clip; clean forces both severities to 0."""

    mode: str
    video_severity: float = 0.0
    audio_severity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown distortion mode {self.mode!r}; expected one of {MODES}")
        if self.seed < 0:
            raise ConfigError(f"scenario seed must be non-negative, got {self.seed}")
        if self.mode == "clean":
            self.video_severity = 0.0
            self.audio_severity = 0.0
        elif self.mode == "video_only":
            self.audio_severity = 0.0
        elif self.mode == "audio_only":
            self.video_severity = 0.0
        for name in ("video_severity", "audio_severity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")


@dataclass
class GeneratorSpec:
    """Dims, ground-truth label weighting, and seeded response profiles."""

    channels: int = 32
    height: int = 4
    width: int = 4
    audio_dim: int = 16
    frames: int = 8
    artifact_kinds: int = 10
    w_v: float = 0.6
    w_a: float = 0.4
    noise_std: float = 0.02
    cue_min: float = 1.0
    cue_max: float = 5.0
    profile_seed: int = 1234
    # Filled by __post_init__ from profile_seed:
    art_base: np.ndarray = field(default=None, repr=False)
    art_peak: np.ndarray = field(default=None, repr=False)
    art_mid: np.ndarray = field(default=None, repr=False)
    art_sharp: float = 8.0
    vis_sens: np.ndarray = field(default=None, repr=False)
    aud_sens: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.w_v < 0 or self.w_a < 0 or abs(self.w_v + self.w_a - 1.0) > 1e-12:
            raise ConfigError(f"modality weights must be non-negative and sum to 1, got {self.w_v}, {self.w_a}")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be non-negative, got {self.noise_std}")
        if not self.cue_min < self.cue_max:
            raise ConfigError(f"cue range invalid: [{self.cue_min}, {self.cue_max}]")
        prof = np.random.default_rng([self.profile_seed, 0x9F])
        if self.art_base is None:
            self.art_base = prof.uniform(0.02, 0.08, self.artifact_kinds)
        if self.art_peak is None:
            self.art_peak = prof.uniform(0.70, 0.95, self.artifact_kinds)
        if self.art_mid is None:
            self.art_mid = prof.uniform(0.25, 0.75, self.artifact_kinds)
        if self.vis_sens is None:
            self.vis_sens = prof.uniform(0.25, 1.0, self.channels)
        if self.aud_sens is None:
            self.aud_sens = prof.uniform(0.25, 1.0, self.audio_dim)

    def model_config(self, **overrides) -> ModelConfig:
        """ModelConfig with matching dimensions."""
        base = dict(
            channels=self.channels,
            height=self.height,
            width=self.width,
            audio_dim=self.audio_dim,
            frames=self.frames,
            artifact_kinds=self.artifact_kinds,
        )
        base.update(overrides)
        return ModelConfig(**base)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def artifact_response(spec: GeneratorSpec, severity: float) -> np.ndarray:
    """Noise-free artifact probabilities at a given video severity.

    Each type follows a sigmoid in severity, renormalized so the response is
    exactly 0 at severity 0 and exactly 1 at severity 1; different seeded
    midpoints make different types activate at different severities.
    """
    lo = _sigmoid(spec.art_sharp * (0.0 - spec.art_mid))
    hi = _sigmoid(spec.art_sharp * (1.0 - spec.art_mid))
    raw = _sigmoid(spec.art_sharp * (severity - spec.art_mid))
    resp = (raw - lo) / (hi - lo)
    return spec.art_base + (spec.art_peak - spec.art_base) * resp


def generate_clip(scenario: DistortionScenario, spec: GeneratorSpec) -> ClipSample:
    """Draw one clip. The RNG stream order below is frozen; reordering it
    would silently change every dataset."""
    rng = np.random.default_rng(scenario.seed)
    vs = scenario.video_severity
    av = scenario.audio_severity

    content_scale = rng.uniform(0.8, 1.25)
    z_vis = rng.standard_normal(spec.channels)
    z_aud = rng.standard_normal(spec.audio_dim)
    vis_noise = rng.standard_normal((spec.frames, spec.channels, spec.height, spec.width))
    art_noise = rng.uniform(-1.0, 1.0, (spec.frames, spec.artifact_kinds))
    aud_noise = rng.standard_normal(spec.audio_dim)
    cue_noise = rng.standard_normal()
    mos_noise = rng.standard_normal()

    base = content_scale * (1.0 + 0.35 * z_vis)  # (C,)
    atten = 1.0 - spec.vis_sens * vs  # (C,)
    visual = (base * atten)[None, :, None, None] + (0.05 + 0.30 * vs) * vis_noise

    probs = np.clip(artifact_response(spec, vs)[None, :] + spec.noise_std * art_noise, 0.0, 1.0)

    aud_base = content_scale * (1.0 + 0.35 * z_aud)
    audio = aud_base * (1.0 - spec.aud_sens * av) + (0.05 + 0.30 * av) * aud_noise

    span = spec.cue_max - spec.cue_min
    raw_cue = spec.cue_max - span * av + spec.noise_std * span * cue_noise

    mos = float(np.clip(1.0 - spec.w_v * vs - spec.w_a * av + spec.noise_std * mos_noise, 0.0, 1.0))

    return ClipSample(
        visual=visual,
        audio=audio,
        artifacts=ArtifactMatrix(probs),
        audio_cue=AudioQualityCue(raw_score=float(raw_cue), cue_min=spec.cue_min, cue_max=spec.cue_max),
        mos=mos,
    )


@dataclass
class ScenarioMix:
    """Mode proportions and severity ranges used when drawing scenarios."""

    p_video: float = 0.3
    p_audio: float = 0.3
    p_both: float = 0.3
    p_clean: float = 0.1
    video_sev_lo: float = 0.05
    video_sev_hi: float = 1.0
    audio_sev_lo: float = 0.05
    audio_sev_hi: float = 1.0

    def __post_init__(self):
        probs = (self.p_video, self.p_audio, self.p_both, self.p_clean)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError(f"mode proportions must be non-negative and sum to 1, got {probs}")
        if not (0 <= self.video_sev_lo <= self.video_sev_hi <= 1):
            raise ConfigError("video severity range must satisfy 0 <= lo <= hi <= 1")
        if not (0 <= self.audio_sev_lo <= self.audio_sev_hi <= 1):
            raise ConfigError("audio severity range must satisfy 0 <= lo <= hi <= 1")

    @classmethod
    def mixed(cls, video_hi: float = 1.0, audio_hi: float = 1.0):
        return cls(video_sev_hi=video_hi, audio_sev_hi=audio_hi)

    @classmethod
    def video_only(cls, hi: float = 0.7):
        return cls(p_video=1.0, p_audio=0.0, p_both=0.0, p_clean=0.0, video_sev_hi=hi)

    @classmethod
    def audio_only(cls, hi: float = 0.7):
        return cls(p_video=0.0, p_audio=1.0, p_both=0.0, p_clean=0.0, audio_sev_hi=hi)

    @classmethod
    def clean_only(cls):
        return cls(p_video=0.0, p_audio=0.0, p_both=0.0, p_clean=1.0)


def draw_scenario(mix: ScenarioMix, seed: int) -> DistortionScenario:
    """Deterministically draw a scenario for one clip seed."""
    rng = np.random.default_rng([seed, 0x5C])
    u = rng.uniform()
    vs = rng.uniform(mix.video_sev_lo, mix.video_sev_hi)
    av = rng.uniform(mix.audio_sev_lo, mix.audio_sev_hi)
    if u < mix.p_video:
        return DistortionScenario("video_only", video_severity=vs, seed=seed)
    if u < mix.p_video + mix.p_audio:
        return DistortionScenario("audio_only", audio_severity=av, seed=seed)
    if u < mix.p_video + mix.p_audio + mix.p_both:
        return DistortionScenario("both", video_severity=vs, audio_severity=av, seed=seed)
    return DistortionScenario("clean", seed=seed)


def generate_set(n: int, mix: ScenarioMix, spec: GeneratorSpec, seed_start: int) -> list[ClipSample]:
    if n <= 0:
        raise ConfigError(f"clip count must be positive, got {n}")
    return [generate_clip(draw_scenario(mix, seed_start + i), spec) for i in range(n)]


def generate_split(n_train: int, n_val: int, n_test: int, mix: ScenarioMix, spec: GeneratorSpec, base_seed: int = 0):
    """Three disjoint-seeded splits drawn from the same scenario mix."""
    for name, n in (("n_train", n_train), ("n_val", n_val), ("n_test", n_test)):
        if n <= 0:
            raise ConfigError(f"{name} must be positive, got {n}")
    train = generate_set(n_train, mix, spec, base_seed + _SPLIT_OFFSETS["train"])
    val = generate_set(n_val, mix, spec, base_seed + _SPLIT_OFFSETS["val"])
    test = generate_set(n_test, mix, spec, base_seed + _SPLIT_OFFSETS["test"])
    return train, val, test


def clip_content_hash(sample: ClipSample) -> str:
    """Stable content digest used for cross-split duplicate checks."""
    h = hashlib.sha256()
    for arr in (sample.visual, sample.audio, sample.artifacts.probs):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    h.update(
        struct.pack(
            "<4d", sample.audio_cue.raw_score, sample.audio_cue.cue_min, sample.audio_cue.cue_max, sample.mos
        )
    )
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Record file format: header (magic, version, clip count, six u32 dims
# T C H W d K), then per clip the little-endian float64 arrays in order
# visual, audio, artifacts, then raw_cue, cue_min, cue_max, mos.


def save_dataset(path, clips: list[ClipSample]):
    if not clips:
        raise ConfigError("cannot save an empty dataset")
    t, c, h, w = clips[0].visual.shape
    d = clips[0].audio.shape[0]
    k = clips[0].artifacts.probs.shape[1]
    for i, clip in enumerate(clips):
        if clip.visual.shape != (t, c, h, w) or clip.audio.shape != (d,) or clip.artifacts.probs.shape != (t, k):
            raise ConfigError(f"clip {i} has inconsistent dimensions")
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<IIIIIIII", DATASET_VERSION, len(clips), t, c, h, w, d, k))
        for clip in clips:
            fh.write(np.ascontiguousarray(clip.visual, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(clip.audio, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(clip.artifacts.probs, dtype="<f8").tobytes())
            fh.write(
                struct.pack(
                    "<4d", clip.audio_cue.raw_score, clip.audio_cue.cue_min, clip.audio_cue.cue_max, clip.mos
                )
            )


def load_dataset(path) -> list[ClipSample]:
    with open(path, "rb") as fh:
        blob = fh.read()
    off = 0

    def take(n, what):
        nonlocal off
        if off + n > len(blob):
            raise FormatError(f"dataset truncated while reading {what}", offset=off)
        chunk = blob[off : off + n]
        off += n
        return chunk

    if take(4, "magic") != DATASET_MAGIC:
        raise FormatError("not a dataset record file (bad magic)", offset=0)
    version, count, t, c, h, w, d, k = struct.unpack("<IIIIIIII", take(32, "header"))
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {version}", offset=4)
    if count == 0 or min(t, c, h, w, d, k) == 0:
        raise FormatError("header declares empty dimensions", offset=8)
    clips = []
    for i in range(count):
        record_off = off
        visual = np.frombuffer(take(8 * t * c * h * w, f"clip {i} visual"), dtype="<f8").reshape(t, c, h, w)
        audio = np.frombuffer(take(8 * d, f"clip {i} audio"), dtype="<f8")
        probs = np.frombuffer(take(8 * t * k, f"clip {i} artifacts"), dtype="<f8").reshape(t, k)
        raw_cue, cue_min, cue_max, mos = struct.unpack("<4d", take(32, f"clip {i} scalars"))
        if not (
            np.all(np.isfinite(visual))
            and np.all(np.isfinite(audio))
            and np.all(np.isfinite(probs))
            and all(np.isfinite(v) for v in (raw_cue, cue_min, cue_max, mos))
        ):
            raise FormatError(f"clip {i} contains non-finite values", offset=record_off)
        try:
            clips.append(
                ClipSample(
                    visual=visual.copy(),
                    audio=audio.copy(),
                    artifacts=ArtifactMatrix(probs.copy()),
                    audio_cue=AudioQualityCue(raw_score=raw_cue, cue_min=cue_min, cue_max=cue_max),
                    mos=mos,
                )
            )
        except ConfigError as exc:
            raise FormatError(f"clip {i} failed validation: {exc}", offset=record_off) from None
    if off != len(blob):
        raise FormatError("trailing bytes after last clip", offset=off)
    return clips
