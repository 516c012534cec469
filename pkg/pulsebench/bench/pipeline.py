"""Clip-level pulse recovery shared by the CLI, the harness and the HTTP service"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from pulsebench.bench.evaluation import DEFAULT_STRIDE_S, DEFAULT_WINDOW_S, ICA_NOT_CONVERGED, windowed_hr
from pulsebench.clipio import ClipContainer, align_bvp_to_frames
from pulsebench.exceptions import ConfigError, InsufficientPeaksError
from pulsebench.neural.models import MODEL_BUILDERS, ModelGraph, build_model, predict_frames
from pulsebench.neural.weights import apply_weights, load_weights
from pulsebench.postprocess import PulseSignal, condition, detect_peaks, sdnn, welch_hr
from pulsebench.preprocess import BoxTrack, extract_face_frames
from pulsebench.unsupervised import ALGORITHMS, RgbTrace, ica_components

logger = logging.getLogger(__name__)

NEURAL_ALGORITHMS = tuple(sorted(MODEL_BUILDERS))
ALL_ALGORITHMS = tuple(sorted(ALGORITHMS)) + NEURAL_ALGORITHMS


@dataclass(frozen=True)
class ClipEstimate:
    clip_id: str
    pred: PulseSignal
    gt: PulseSignal
    flags: Tuple[str, ...] = ()


def check_algorithm(name: str) -> str:
    if name not in ALL_ALGORITHMS:
        raise ConfigError(f"unknown algorithm {name!r}; valid names: {', '.join(ALL_ALGORITHMS)}")
    return name


def load_model(name: str, weights_path: Optional[Union[str, Path]]) -> ModelGraph:
    """Build ``name`` and load its trained weights; weights are mandatory"""
    check_algorithm(name)
    if name not in NEURAL_ALGORITHMS:
        raise ConfigError(f"{name} is not a neural algorithm")
    if weights_path is None:
        raise ConfigError(f"{name} needs trained weights (--weights)")
    path = Path(weights_path)
    if not path.is_file():
        raise ConfigError(f"weights file not found: {path}")
    model = apply_weights(build_model(name), load_weights(path))
    model.eval()
    return model


def raw_pulse(algorithm: str, clip: ClipContainer, model: Optional[ModelGraph] = None,
              boxes: Optional[BoxTrack] = None) -> Tuple[PulseSignal, Tuple[str, ...]]:
    """Unconditioned pulse and clip-level flags; frame rate comes from the timestamps"""
    check_algorithm(algorithm)
    fs = clip.fps
    if algorithm in ALGORITHMS:
        frames = clip.frames if boxes is None else extract_face_frames(clip, boxes)
        trace = RgbTrace.from_frames(frames, fs)
        if algorithm == "ica":
            result = ica_components(trace)
            return PulseSignal(result.pulse, fs), () if result.converged else (ICA_NOT_CONVERGED,)
        return PulseSignal(ALGORITHMS[algorithm](trace), fs), ()
    if model is None:
        raise ConfigError(f"{algorithm} needs a model with loaded weights")
    return PulseSignal(predict_frames(model, extract_face_frames(clip, boxes)), fs), ()


def estimate_clip(algorithm: str, clip: ClipContainer, model: Optional[ModelGraph] = None,
                  boxes: Optional[BoxTrack] = None) -> ClipEstimate:
    """Conditioned prediction and frame-aligned ground truth for one clip"""
    raw, flags = raw_pulse(algorithm, clip, model, boxes)
    pred = condition(raw)
    gt = condition(PulseSignal(align_bvp_to_frames(clip), pred.fs))
    return ClipEstimate(clip_id=clip.clip_id, pred=pred, gt=gt, flags=flags)


def clip_summary(algorithm: str, clip: ClipContainer, model: Optional[ModelGraph] = None,
                 boxes: Optional[BoxTrack] = None, window: float = DEFAULT_WINDOW_S,
                 stride: float = DEFAULT_STRIDE_S) -> Dict[str, Any]:
    """Whole-clip HR and SDNN plus the moving-window estimates, as JSON data"""
    est = estimate_clip(algorithm, clip, model, boxes)
    hr = welch_hr(est.pred)
    try:
        pred_sdnn = sdnn(detect_peaks(est.pred), est.pred.fs)
    except InsufficientPeaksError:
        logger.warning(f"{est.clip_id}: too few peaks for SDNN")
        pred_sdnn = None
    return {
        "algorithm": algorithm,
        "clip": est.clip_id,
        "fs": est.pred.fs,
        "hr": hr.bpm,
        "hr_gt": welch_hr(est.gt).bpm,
        "low_confidence": hr.low_confidence,
        "sdnn": pred_sdnn,
        "flags": list(est.flags),
        "windows": [
            w.to_dict() for w in windowed_hr(est.pred, est.gt, window, stride, clip_id=est.clip_id, clip_flags=est.flags)
        ],
    }
