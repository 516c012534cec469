"""Training loop for the window-level regression task"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import torch
from pydantic import BaseModel, Field, model_validator

from pulsebench.clipio import read_clip
from pulsebench.config import DEFAULT_SEED
from pulsebench.exceptions import ConfigError, TrainingError
from pulsebench.neural.models import MODEL_BUILDERS, ModelGraph, init_weights
from pulsebench.preprocess import WINDOW_FRAMES, WindowTensor, clip_windows
from pulsebench.synth import CorpusConfig, gen_corpus

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    lr: float = Field(1e-3, ge=0)
    batch_size: int = Field(8, ge=1)
    epochs: int = Field(30, ge=1)
    seed: int = DEFAULT_SEED
    betas: Tuple[float, float] = (0.9, 0.999)
    weight_decay: float = Field(0.0, ge=0)
    loss: Literal["mse", "neg_pearson"] = "mse"
    reinitialize: bool = True


@dataclass
class TrainResult:
    weights: Dict[str, np.ndarray]
    losses: List[float] = field(default_factory=list)

    def loss_curve(self) -> List[Tuple[int, float]]:
        return list(enumerate(self.losses, start=1))


def _standardize(x: torch.Tensor, eps: float = 1e-8) -> torch.Tensor:
    mean = x.mean(dim=-1, keepdim=True)
    std = x.std(dim=-1, unbiased=False, keepdim=True)
    return (x - mean) / (std + eps)


def mse_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """MSE between the standardized prediction and the standardized label"""
    return torch.mean((_standardize(pred) - _standardize(target)) ** 2)


def neg_pearson_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    r = torch.mean(_standardize(pred) * _standardize(target), dim=-1)
    return torch.mean(1.0 - r)


LOSSES = {"mse": mse_loss, "neg_pearson": neg_pearson_loss}


def train(model: ModelGraph, windows: Sequence[WindowTensor], cfg: Optional[TrainConfig] = None,
          progress_every: int = 10) -> TrainResult:
    """Fit ``model`` in place on normalized windows.

    Deterministic for a given config: weights are re-initialized from the seed
    (unless ``reinitialize`` is off) and every epoch's shuffle comes from a
    generator seeded once per run.
    """
    cfg = cfg or TrainConfig()
    if not windows:
        raise ConfigError("training needs at least one window")
    torch.manual_seed(cfg.seed)
    if cfg.reinitialize:
        init_weights(model, cfg.seed)

    x_all = model.prepare(np.stack([w.x for w in windows]))
    y_all = torch.as_tensor(np.stack([w.y for w in windows]), dtype=torch.float32)
    loss_fn = LOSSES[cfg.loss]
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=cfg.betas, weight_decay=cfg.weight_decay)
    generator = torch.Generator().manual_seed(cfg.seed)

    losses: List[float] = []
    model.train()
    for epoch in range(1, cfg.epochs + 1):
        order = torch.randperm(len(windows), generator=generator)
        batch_losses = []
        for batch_index, start in enumerate(range(0, len(windows), cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(x_all[idx]), y_all[idx])
            if not torch.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}",
                    diagnostics={
                        "epoch": epoch,
                        "batch": batch_index,
                        "loss": float(loss.detach()),
                        "window_starts": [windows[i].t0 for i in idx.tolist()],
                        "last_epoch_loss": losses[-1] if losses else None,
                    },
                )
            loss.backward()
            optimizer.step()
            batch_losses.append(float(loss.detach()))
        losses.append(float(np.mean(batch_losses)))
        if progress_every and (epoch % progress_every == 0 or epoch == cfg.epochs):
            logger.info(f"epoch {epoch}/{cfg.epochs} loss {losses[-1]:.4f}")
    model.eval()
    return TrainResult(weights=model.weight_map(), losses=losses)


def write_loss_csv(result: TrainResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "loss"])
        writer.writerows((epoch, f"{loss:.8g}") for epoch, loss in result.loss_curve())


class TrainRunConfig(BaseModel):
    """What ``pulsebench train`` fits: a model, its data source and the optimiser settings"""

    model: str = "seq_rppg"
    corpus: Optional[CorpusConfig] = None
    clips_dir: Optional[str] = None
    training: TrainConfig = Field(default_factory=TrainConfig)
    window_stride: int = Field(WINDOW_FRAMES, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.model not in MODEL_BUILDERS:
            raise ValueError(f"unknown model {self.model!r}; choose from {sorted(MODEL_BUILDERS)}")
        if (self.clips_dir is None) == (self.corpus is None):
            raise ValueError("give exactly one clip source: clips_dir or corpus")
        return self


def training_windows(run: TrainRunConfig) -> List[WindowTensor]:
    if run.corpus is not None:
        clips, _ = gen_corpus(run.corpus)
    else:
        clips = [read_clip(p) for p in sorted(Path(run.clips_dir).glob("*.pbvc"))]
    windows = [w for clip in clips for w in clip_windows(clip, stride=run.window_stride)]
    logger.info(f"{len(windows)} training windows from {len(clips)} clip(s)")
    return windows
