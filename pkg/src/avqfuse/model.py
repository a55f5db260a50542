"""End-to-end quality model: confidences, mixer, fusion head, losses, training.

The forward pass flattens clips x frames into one batch axis for the mixer
(each clip's audio query and confidences broadcast to its frames), averages
the enhanced per-frame features back into a clip vector, scales each
modality vector by its confidence, and regresses through a small MLP with a
sigmoid output so scores land in [0, 1] like the normalized labels.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import asdict, dataclass

import numpy as np

from . import mixer as mixer_ops
from . import tensor as T
from .confidence import ArtifactMatrix, AudioQualityCue, ConfidencePair, VisualConfidenceModule, audio_confidence
from .errors import (
    ConfigError,
    DegenerateInputError,
    DivergenceError,
    FormatError,
    ShapeMismatchError,
    ZeroVarianceError,
)
from .mixer import MixerParams
from .tensor import Tensor

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"AVQC"
CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    """Dimensions, ablation toggles, and loss/initialization settings."""

    channels: int = 32
    height: int = 4
    width: int = 4
    audio_dim: int = 16
    frames: int = 8
    artifact_kinds: int = 10
    use_avm: bool = True
    use_vcm: bool = True
    use_acm: bool = True
    lambda_pcc: float = 0.15
    fusion_hidden: int = 64
    seed: int = 0

    def __post_init__(self):
        for name in ("channels", "height", "width", "audio_dim", "frames", "artifact_kinds", "fusion_hidden"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lambda_pcc < 0:
            raise ConfigError(f"lambda_pcc must be non-negative, got {self.lambda_pcc}")


@dataclass
class ClipSample:
    """One training example; feature tensors stand in for backbone outputs."""

    visual: np.ndarray  # (T, C, H, W)
    audio: np.ndarray  # (d,)
    artifacts: ArtifactMatrix
    audio_cue: AudioQualityCue
    mos: float

    def __post_init__(self):
        self.visual = np.ascontiguousarray(np.asarray(self.visual, dtype=np.float64))
        self.audio = np.ascontiguousarray(np.asarray(self.audio, dtype=np.float64))
        if not 0.0 <= self.mos <= 1.0:
            raise ConfigError(f"mos must lie in [0, 1], got {self.mos}")


@dataclass
class Prediction:
    score: float
    confidences: ConfidencePair
    alpha_mean: np.ndarray  # (C,) temporal mean of attention weights; zeros when the mixer is off


class Model:
    """Parameter container plus the batched differentiable forward pass."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        rng = np.random.default_rng([cfg.seed, 0xA7])
        self.vcm = VisualConfidenceModule(cfg.artifact_kinds, rng)
        self.mixer = MixerParams.init(cfg.audio_dim, cfg.channels, rng)
        fusion_in = cfg.channels + cfg.audio_dim + 2
        self.fusion_w1 = T.init_uniform(rng, (fusion_in, cfg.fusion_hidden), fusion_in, name="fusion.w1")
        self.fusion_b1 = T.init_uniform(rng, (cfg.fusion_hidden,), fusion_in, name="fusion.b1")
        self.out_w = T.init_uniform(rng, (cfg.fusion_hidden, 1), cfg.fusion_hidden, name="fusion.out_w")
        self.out_b = T.init_uniform(rng, (1,), cfg.fusion_hidden, name="fusion.out_b")

    def parameters(self) -> list[Tensor]:
        return (
            self.vcm.parameters()
            + self.mixer.parameters()
            + [self.fusion_w1, self.fusion_b1, self.out_w, self.out_b]
        )

    def trainable_parameters(self) -> list[Tensor]:
        """Parameters on active paths only; disabled modules stay at init."""
        out = []
        if self.cfg.use_vcm:
            out += self.vcm.parameters()
        if self.cfg.use_avm:
            out += self.mixer.parameters()
        out += [self.fusion_w1, self.fusion_b1, self.out_w, self.out_b]
        return out

    def parameter_groups(self) -> dict[str, list[Tensor]]:
        """Named groups used by the gradient-check report."""
        return {
            "mixer.w_audio": [self.mixer.w_audio],
            "mixer.w_visual": [self.mixer.w_visual],
            "mixer.w_gate": [self.mixer.w_gate],
            "vcm.kernel": self.vcm.kernel_parameters(),
            "vcm.heads": self.vcm.head_parameters(),
            "vcm.combiner": self.vcm.combiner_parameters(),
            "fusion.hidden": [self.fusion_w1, self.fusion_b1],
            "fusion.output": [self.out_w, self.out_b],
        }

    def _validate_sample(self, sample: ClipSample, index: int):
        cfg = self.cfg
        vshape = (cfg.frames, cfg.channels, cfg.height, cfg.width)
        if sample.visual.shape != vshape:
            raise ShapeMismatchError(
                f"sample {index}: visual shape {sample.visual.shape} does not match configured {vshape}"
            )
        if sample.audio.shape != (cfg.audio_dim,):
            raise ShapeMismatchError(
                f"sample {index}: audio shape {sample.audio.shape} does not match configured ({cfg.audio_dim},)"
            )
        if sample.artifacts.probs.shape != (cfg.frames, cfg.artifact_kinds):
            raise ShapeMismatchError(
                f"sample {index}: artifact shape {sample.artifacts.probs.shape} does not match "
                f"configured ({cfg.frames}, {cfg.artifact_kinds})"
            )

    def batch_scores(self, batch: list[ClipSample]):
        """Differentiable scores for a batch: ((B,1) Tensor, diagnostics dict)."""
        if not batch:
            raise DegenerateInputError("batch must be non-empty")
        cfg = self.cfg
        for i, sample in enumerate(batch):
            self._validate_sample(sample, i)
        b = len(batch)
        t_frames = cfg.frames

        if cfg.use_vcm:
            smoothed = T.concat([self.vcm.smooth_artifacts(s.artifacts) for s in batch], axis=0)
            frame_scores = self.vcm.frame_scores_from_rows(smoothed)  # (B*T, 1)
            r_v = T.tmean(T.reshape(frame_scores, (b, t_frames)), axis=1, keepdims=True)
        else:
            frame_scores = Tensor(np.ones((b * t_frames, 1)))
            r_v = Tensor(np.ones((b, 1)))

        if cfg.use_acm:
            r_a = Tensor(np.array([[audio_confidence(s.audio_cue)] for s in batch]))
        else:
            r_a = Tensor(np.ones((b, 1)))

        audio = Tensor(np.stack([s.audio for s in batch]))  # (B, d)
        frames = Tensor(np.concatenate([s.visual for s in batch], axis=0))  # (B*T, C, H, W)

        if cfg.use_avm:
            mixed = mixer_ops.mix(
                frames,
                T.tile_rows(audio, t_frames),
                T.tile_rows(r_a, t_frames),
                T.tile_rows(r_v, t_frames),
                self.mixer,
            )
            pooled = T.global_average_pool(mixed.v_enhanced)
            alpha_mean = np.mean(mixed.alpha.data.reshape(b, t_frames, cfg.channels), axis=1)
        else:
            pooled = T.global_average_pool(frames)
            alpha_mean = np.zeros((b, cfg.channels))

        clip_visual = T.tmean(T.reshape(pooled, (b, t_frames, cfg.channels)), axis=1)  # (B, C)

        fused_in = T.concat([T.mul(clip_visual, r_v), T.mul(audio, r_a), r_v, r_a], axis=1)
        hidden = T.relu(T.matmul(fused_in, self.fusion_w1) + self.fusion_b1)
        scores = T.sigmoid(T.matmul(hidden, self.out_w) + self.out_b)  # (B, 1)

        diag = {
            "r_v": r_v,
            "r_a": r_a,
            "frame_scores": frame_scores,
            "alpha_mean": alpha_mean,
        }
        return scores, diag

    def predict_scores(self, samples: list[ClipSample]) -> np.ndarray:
        """Plain ndarray of scores, no tape."""
        with T.no_grad():
            scores, _ = self.batch_scores(samples)
            return scores.data.reshape(-1).copy()

    def forward(self, batch: list[ClipSample]) -> list[Prediction]:
        """Per-sample predictions with confidences and attention diagnostics."""
        with T.no_grad():
            scores, diag = self.batch_scores(batch)
            b = len(batch)
            frame_scores = diag["frame_scores"].data.reshape(b, self.cfg.frames)
            r_v = diag["r_v"].data.reshape(-1)
            r_a = diag["r_a"].data.reshape(-1)
            preds = []
            for i in range(b):
                preds.append(
                    Prediction(
                        score=float(scores.data[i, 0]),
                        confidences=ConfidencePair(
                            r_v=float(r_v[i]), r_a=float(r_a[i]), frame_scores=frame_scores[i].copy()
                        ),
                        alpha_mean=diag["alpha_mean"][i].copy(),
                    )
                )
            return preds

    def snapshot(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.parameters()]

    def restore(self, snapshot: list[np.ndarray]):
        for p, saved in zip(self.parameters(), snapshot):
            p.data[...] = saved


# ---------------------------------------------------------------------------
# Losses


def pcc_loss_tensor(pred: Tensor, target: Tensor) -> Tensor:
    """1 - Pearson correlation over the batch, differentiable."""
    n = pred.size
    if n < 2:
        raise ZeroVarianceError(f"correlation needs at least 2 samples, got {n}")
    dp = pred - T.tmean(pred)
    dt = target - T.tmean(target)
    var_p = T.tsum(dp * dp)
    var_t = T.tsum(dt * dt)
    if var_t.item() == 0.0:
        raise ZeroVarianceError("targets are constant; Pearson correlation undefined")
    if var_p.item() == 0.0:
        raise ZeroVarianceError("predictions are constant; Pearson correlation undefined")
    rho = T.tsum(dp * dt) / T.sqrt(var_p * var_t)
    return 1.0 - rho


def mse_loss_tensor(pred: Tensor, target: Tensor) -> Tensor:
    diff = pred - target
    return T.tmean(diff * diff)


def total_loss_tensor(pred: Tensor, target: Tensor, lambda_pcc: float):
    """MSE plus weighted correlation loss; falls back to MSE alone on
    zero-variance batches. Returns (loss, pcc_used)."""
    if lambda_pcc < 0:
        raise ConfigError(f"lambda_pcc must be non-negative, got {lambda_pcc}")
    mse = mse_loss_tensor(pred, target)
    if lambda_pcc == 0.0:
        return mse, False
    if pred.size < 3:
        # Two-point Pearson is identically +-1: no gradient signal, only
        # float jitter. Fall back to MSE like a zero-variance batch.
        log.debug("correlation loss skipped: batch of %d is too small", pred.size)
        return mse, False
    try:
        pcc = pcc_loss_tensor(pred, target)
    except ZeroVarianceError as exc:
        log.warning("correlation loss skipped for this batch: %s", exc)
        return mse, False
    return mse + lambda_pcc * pcc, True


def pcc_loss(pred, target) -> float:
    with T.no_grad():
        return pcc_loss_tensor(Tensor(np.asarray(pred, dtype=np.float64)), Tensor(np.asarray(target, dtype=np.float64))).item()


def total_loss(pred, target, lambda_pcc: float) -> float:
    with T.no_grad():
        loss, _ = total_loss_tensor(
            Tensor(np.asarray(pred, dtype=np.float64)), Tensor(np.asarray(target, dtype=np.float64)), lambda_pcc
        )
        return loss.item()


# ---------------------------------------------------------------------------
# Training


@dataclass
class TrainSettings:
    """Optimization hyperparameters; defaults follow the reference protocol."""

    learning_rate: float = 5e-5
    batch_size: int = 6
    weight_decay: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    patience: int = 20
    max_epochs: int = 200

    def __post_init__(self):
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size, patience and max_epochs must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_plcc: float
    val_srocc: float


def train(train_set, val_set, cfg: ModelConfig, settings: TrainSettings | None = None):
    """Adam training with early stopping on validation SROCC.

    Ties in SROCC break toward lower validation MSE. Returns the model at
    its best validation epoch plus the per-epoch history.
    """
    from .metrics import plcc as plcc_metric
    from .metrics import srocc as srocc_metric

    if not train_set or not val_set:
        raise DegenerateInputError("train and validation splits must be non-empty")
    settings = settings or TrainSettings()
    from .optim import Adam

    model = Model(cfg)
    opt = Adam(
        model.trainable_parameters(),
        learning_rate=settings.learning_rate,
        beta1=settings.beta1,
        beta2=settings.beta2,
        epsilon=settings.epsilon,
        weight_decay=settings.weight_decay,
    )
    shuffle_rng = np.random.default_rng([cfg.seed, 0x5EED])
    val_mos = np.array([s.mos for s in val_set])

    history: list[EpochStats] = []
    best_key = None
    best_snapshot = model.snapshot()
    best_epoch = -1
    stale = 0

    n = len(train_set)
    for epoch in range(settings.max_epochs):
        perm = shuffle_rng.permutation(n)
        loss_sum = 0.0
        for step, start in enumerate(range(0, n, settings.batch_size)):
            batch = [train_set[i] for i in perm[start : start + settings.batch_size]]
            target = Tensor(np.array([[s.mos] for s in batch]))
            opt.zero_grad()
            scores, _ = model.batch_scores(batch)
            loss, _ = total_loss_tensor(scores, target, cfg.lambda_pcc)
            loss_val = loss.item()
            if not math.isfinite(loss_val):
                raise DivergenceError(f"non-finite training loss {loss_val} at epoch {epoch} step {step}")
            loss.backward()
            opt.step()
            loss_sum += loss_val * len(batch)

        val_pred = model.predict_scores(val_set)
        try:
            val_plcc = plcc_metric(val_pred, val_mos)
            val_srocc = srocc_metric(val_pred, val_mos)
        except ZeroVarianceError:
            val_plcc, val_srocc = 0.0, 0.0
        val_mse = float(np.mean((val_pred - val_mos) ** 2))
        history.append(EpochStats(epoch=epoch, train_loss=loss_sum / n, val_plcc=val_plcc, val_srocc=val_srocc))

        key = (val_srocc, -val_mse)
        if best_key is None or key > best_key:
            best_key = key
            best_snapshot = model.snapshot()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= settings.patience:
                break

    model.restore(best_snapshot)
    log.info("training stopped after %d epochs; best epoch %d", len(history), best_epoch)
    return model, history


# ---------------------------------------------------------------------------
# Checkpoint container: magic, version, JSON header (config echo + seed),
# then named little-endian float64 parameter blobs. Round-trips bit-exactly.


def save_checkpoint(path, model: Model):
    params = model.parameters()
    header = json.dumps(
        {"format_version": CHECKPOINT_VERSION, "config": asdict(model.cfg), "seed": model.cfg.seed},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(params)))
        for p in params:
            name = (p.name or "").encode("utf-8")
            fh.write(struct.pack("<H", len(name)))
            fh.write(name)
            fh.write(struct.pack("<B", p.data.ndim))
            fh.write(struct.pack(f"<{p.data.ndim}I", *p.data.shape))
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_checkpoint(path) -> Model:
    with open(path, "rb") as fh:
        blob = fh.read()
    off = 0

    def take(n, what):
        nonlocal off
        if off + n > len(blob):
            raise FormatError(f"checkpoint truncated while reading {what}", offset=off)
        chunk = blob[off : off + n]
        off += n
        return chunk

    if take(4, "magic") != CHECKPOINT_MAGIC:
        raise FormatError("not a checkpoint file (bad magic)", offset=0)
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    (header_len,) = struct.unpack("<I", take(4, "header length"))
    header_off = off
    try:
        header = json.loads(take(header_len, "header").decode("utf-8"))
        cfg = ModelConfig(**header["config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"bad checkpoint header: {exc}", offset=header_off) from None
    model = Model(cfg)
    params = {p.name: p for p in model.parameters()}
    (count,) = struct.unpack("<I", take(4, "parameter count"))
    if count != len(params):
        raise FormatError(f"checkpoint has {count} parameters, model expects {len(params)}", offset=off - 4)
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = take(name_len, "name").decode("utf-8")
        if name not in params:
            raise FormatError(f"unknown parameter {name!r}", offset=off - name_len)
        (rank,) = struct.unpack("<B", take(1, "rank"))
        shape = struct.unpack(f"<{rank}I", take(4 * rank, "shape"))
        p = params[name]
        if tuple(shape) != p.data.shape:
            raise FormatError(f"parameter {name!r} has shape {shape}, expected {p.data.shape}", offset=off)
        nbytes = 8 * int(np.prod(shape, dtype=np.int64)) if rank else 8
        data = np.frombuffer(take(nbytes, f"data for {name!r}"), dtype="<f8").reshape(shape)
        p.data[...] = data
    if off != len(blob):
        raise FormatError("trailing bytes after last parameter", offset=off)
    return model
