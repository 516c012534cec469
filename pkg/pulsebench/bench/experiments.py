"""Degradation experiments on synthetic corpora: label offsets and compression"""
import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, field_validator

from pulsebench.bench.evaluation import DEFAULT_STRIDE_S, DEFAULT_WINDOW_S, WindowedEstimate, metrics_from_windows, windowed_hr
from pulsebench.bench.pipeline import NEURAL_ALGORITHMS, check_algorithm, estimate_clip
from pulsebench.clipio import ClipContainer, inject_offset
from pulsebench.neural.models import MODEL_BUILDERS, ModelGraph, build_model
from pulsebench.neural.training import TrainConfig, train
from pulsebench.preprocess import clip_windows
from pulsebench.synth import CorpusConfig, gen_corpus

logger = logging.getLogger(__name__)

DEFAULT_SMOOTH_KS = (1, 3, 5, 9)


class OffsetExperimentConfig(BaseModel):
    train_corpus: CorpusConfig
    test_corpus: CorpusConfig
    training: TrainConfig = Field(default_factory=TrainConfig)
    model: str = "seq_rppg"
    max_offset: float = Field(0.2, ge=0)
    window: float = Field(DEFAULT_WINDOW_S, gt=0)
    stride: float = Field(DEFAULT_STRIDE_S, gt=0)

    @field_validator("model")
    @classmethod
    def _known_model(cls, name):
        if name not in MODEL_BUILDERS:
            raise ValueError(f"unknown model {name!r}; choose from {sorted(MODEL_BUILDERS)}")
        return name


class CompressionExperimentConfig(BaseModel):
    corpus: CorpusConfig
    smooth_ks: List[int] = Field(default_factory=lambda: list(DEFAULT_SMOOTH_KS))
    algorithm: str = "pos"
    window: float = Field(DEFAULT_WINDOW_S, gt=0)
    stride: float = Field(DEFAULT_STRIDE_S, gt=0)

    @field_validator("algorithm")
    @classmethod
    def _unsupervised_only(cls, name):
        check_algorithm(name)
        if name in NEURAL_ALGORITHMS:
            raise ValueError("the compression sweep runs unsupervised algorithms")
        return name

    @field_validator("smooth_ks")
    @classmethod
    def _positive(cls, ks):
        if not ks or any(k < 1 for k in ks):
            raise ValueError("smooth_ks must be a non-empty list of integers >= 1")
        return ks


def corpus_mae(algorithm: str, clips: Sequence[ClipContainer], model: Optional[ModelGraph] = None,
               window: float = DEFAULT_WINDOW_S, stride: float = DEFAULT_STRIDE_S) -> Dict[str, Any]:
    windows: List[WindowedEstimate] = []
    for clip in clips:
        est = estimate_clip(algorithm, clip, model)
        windows.extend(windowed_hr(est.pred, est.gt, window, stride, clip_id=est.clip_id, clip_flags=est.flags))
    metrics = metrics_from_windows(windows)
    return {"mae": metrics.mae, "rmse": metrics.rmse, "pearson": metrics.pearson, "n_windows": len(windows)}


def offset_clips(clips: Sequence[ClipContainer], max_offset: float, seed: int) -> List[ClipContainer]:
    """Each clip's labels shifted by an independent U(0, max_offset) delay"""
    rng = np.random.default_rng(seed)
    return [inject_offset(clip, float(rng.uniform(0.0, max_offset))) for clip in clips]


def _train_and_score(cfg: OffsetExperimentConfig, train_clips, test_clips) -> Dict[str, Any]:
    windows = [w for clip in train_clips for w in clip_windows(clip)]
    model = build_model(cfg.model, seed=cfg.training.seed)
    result = train(model, windows, cfg.training)
    scores = corpus_mae(cfg.model, test_clips, model, cfg.window, cfg.stride)
    return {**scores, "final_loss": result.losses[-1]}


def offset_sensitivity(cfg: OffsetExperimentConfig) -> Dict[str, Any]:
    """Held-out error of the same training run with and without label offsets.

    Both runs share the seed, so they differ only in the labels' alignment.
    """
    train_clips, _ = gen_corpus(cfg.train_corpus)
    test_clips, _ = gen_corpus(cfg.test_corpus)
    logger.info(f"Training {cfg.model} on {len(train_clips)} aligned clips")
    aligned = _train_and_score(cfg, train_clips, test_clips)
    logger.info(f"Training {cfg.model} on {len(train_clips)} clips with offsets up to {cfg.max_offset} s")
    shifted = _train_and_score(cfg, offset_clips(train_clips, cfg.max_offset, cfg.training.seed), test_clips)
    return {"model": cfg.model, "max_offset": cfg.max_offset, "aligned": aligned, "offset": shifted}


def compression_sweep(cfg: CompressionExperimentConfig) -> Dict[str, Any]:
    """Error of one algorithm on the same corpus at each compression-proxy strength"""
    levels = []
    for k in cfg.smooth_ks:
        corpus = cfg.corpus.model_copy(update={"overrides": {**cfg.corpus.overrides, "smooth_k": k}})
        clips, _ = gen_corpus(corpus)
        scores = corpus_mae(cfg.algorithm, clips, window=cfg.window, stride=cfg.stride)
        logger.info(f"smooth_k={k}: MAE {scores['mae']:.3f} bpm")
        levels.append({"smooth_k": k, **scores})
    return {"algorithm": cfg.algorithm, "levels": levels}
