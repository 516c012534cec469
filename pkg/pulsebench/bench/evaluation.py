"""Moving-window heart-rate evaluation and aggregate metrics"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from pulsebench.exceptions import DegenerateVarianceError, InsufficientPeaksError, ShapeError
from pulsebench.numerics import pearson
from pulsebench.postprocess import PulseSignal, detect_peaks, sdnn, welch_hr

logger = logging.getLogger(__name__)

HR_LIMITS = (40.0, 180.0)
DEFAULT_WINDOW_S = 30.0
DEFAULT_STRIDE_S = 10.0

# window flags
SHORT_WINDOW = "short_window"
PRED_CLAMPED = "hr_pred_clamped"
GT_CLAMPED = "hr_gt_clamped"
PRED_LOW_CONFIDENCE = "hr_pred_low_confidence"
ICA_NOT_CONVERGED = "ica_not_converged"


@dataclass
class WindowedEstimate:
    clip: str
    start: float
    end: float
    hr_pred: float
    hr_gt: float
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class HrMetrics:
    mae: Optional[float]
    rmse: Optional[float]
    pearson: Optional[float]  # None when undefined


def _clamp(bpm: float, flag: str, flags: List[str]) -> float:
    lo, hi = HR_LIMITS
    if lo <= bpm <= hi:
        return bpm
    flags.append(flag)
    return float(min(max(bpm, lo), hi))


def windowed_hr(pred: PulseSignal, gt: PulseSignal, window: float = DEFAULT_WINDOW_S,
                stride: float = DEFAULT_STRIDE_S, clip_id: str = "",
                clip_flags: Sequence[str] = ()) -> List[WindowedEstimate]:
    """Welch HR of prediction and ground truth over each window position.

    A signal shorter than ``window`` yields one flagged window spanning the
    whole signal. Out-of-range HRs are clamped to [40, 180] bpm and flagged.
    ``clip_flags`` (recovery conditions of the whole clip) lead every window's flags.
    """
    if not math.isclose(pred.fs, gt.fs, rel_tol=1e-9):
        raise ShapeError(f"sampling rates differ: {pred.fs} vs {gt.fs}")
    if len(pred) != len(gt):
        raise ShapeError(f"signal lengths differ: {len(pred)} vs {len(gt)}")
    if window <= 0 or stride <= 0:
        raise ValueError("window and stride must be positive")
    fs = pred.fs
    n = len(pred)
    win_n = int(round(window * fs))
    stride_n = max(1, int(round(stride * fs)))

    if n < win_n:
        logger.warning(f"{clip_id or 'clip'}: {n / fs:.1f} s is shorter than the {window:.0f} s window")
        spans = [(0, n, [SHORT_WINDOW])]
    else:
        spans = [(s, s + win_n, []) for s in range(0, n - win_n + 1, stride_n)]

    estimates = []
    for a, b, flags in spans:
        flags = list(clip_flags) + flags
        p = welch_hr(PulseSignal(pred.samples[a:b], fs))
        g = welch_hr(PulseSignal(gt.samples[a:b], fs))
        if p.low_confidence:
            flags.append(PRED_LOW_CONFIDENCE)
        hr_pred = _clamp(p.bpm, PRED_CLAMPED, flags)
        hr_gt = _clamp(g.bpm, GT_CLAMPED, flags)
        if PRED_CLAMPED in flags or GT_CLAMPED in flags:
            logger.warning(f"{clip_id or 'clip'} [{a / fs:.1f}, {b / fs:.1f}] s: HR clamped to {HR_LIMITS}")
        estimates.append(WindowedEstimate(clip_id, a / fs, b / fs, hr_pred, hr_gt, flags))
    return estimates


def hr_metrics(pred: Sequence[float], gt: Sequence[float]) -> HrMetrics:
    """MAE, RMSE and Pearson correlation over paired HR lists"""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"{pred.size} predictions for {gt.size} references")
    if pred.size == 0:
        return HrMetrics(mae=None, rmse=None, pearson=None)
    delta = pred - gt
    rho = None
    if pred.size >= 2:
        try:
            rho = pearson(pred, gt)
        except DegenerateVarianceError:
            rho = None
    return HrMetrics(mae=float(np.mean(np.abs(delta))), rmse=float(np.sqrt(np.mean(delta ** 2))), pearson=rho)


def metrics_from_windows(windows: Sequence[WindowedEstimate]) -> HrMetrics:
    return hr_metrics([w.hr_pred for w in windows], [w.hr_gt for w in windows])


def sdnn_error(pred: PulseSignal, gt: PulseSignal) -> Optional[float]:
    """Absolute SDNN difference in ms, or None when either side lacks peaks"""
    try:
        pred_sdnn = sdnn(detect_peaks(pred), pred.fs)
        gt_sdnn = sdnn(detect_peaks(gt), gt.fs)
    except InsufficientPeaksError:
        return None
    return abs(pred_sdnn - gt_sdnn)
