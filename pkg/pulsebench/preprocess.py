"""Unified preprocessing shared by every algorithm.

Bounding boxes are smoothed with an exponential moving average before
cropping, crops are downsampled with area averaging, and the resulting
T x 8 x 8 x 3 stream is cut into fixed-length model windows.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np

from pulsebench.clipio import ClipContainer, align_bvp_to_frames
from pulsebench.exceptions import (
    DegenerateLabelError,
    EmptyInputError,
    ShapeError,
    TooShortError,
    UnsupportedDirectionError,
)

logger = logging.getLogger(__name__)

WINDOW_FRAMES = 450
INPUT_SIZE = 8
DEFAULT_BOX_ALPHA = 0.3


@dataclass(frozen=True)
class BoxTrack:
    """Per-frame face boxes as an (T, 4) array of x, y, w, h"""

    boxes: np.ndarray

    def __post_init__(self):
        boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 4)
        if np.any(boxes[:, 2:] <= 0):
            raise ShapeError("box widths and heights must be positive")
        object.__setattr__(self, "boxes", boxes)

    def __len__(self) -> int:
        return self.boxes.shape[0]

    def clamped(self, frame_height: int, frame_width: int) -> "BoxTrack":
        """Boxes shrunk and shifted so each lies inside the frame"""
        b = self.boxes.copy()
        b[:, 2] = np.minimum(b[:, 2], frame_width)
        b[:, 3] = np.minimum(b[:, 3], frame_height)
        b[:, 0] = np.clip(b[:, 0], 0, frame_width - b[:, 2])
        b[:, 1] = np.clip(b[:, 1], 0, frame_height - b[:, 3])
        return BoxTrack(b)


@dataclass(frozen=True)
class WindowTensor:
    x: np.ndarray  # (450, 8, 8, 3) float32
    y: np.ndarray  # (450,) float32
    t0: int


def load_box_sidecar(path: Union[str, Path]) -> BoxTrack:
    """Read a JSON array of [x, y, w, h] per frame"""
    with open(path, "r", encoding="utf-8") as f:
        return BoxTrack(np.asarray(json.load(f), dtype=np.float64))


def smooth_boxes(raw: BoxTrack, alpha: float = DEFAULT_BOX_ALPHA, frame_shape: Optional[Tuple[int, int]] = None) -> BoxTrack:
    """EMA over every coordinate: s[i] = alpha*raw[i] + (1-alpha)*s[i-1]"""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if len(raw) == 0:
        raise EmptyInputError("cannot smooth an empty box track")
    smoothed = np.empty_like(raw.boxes)
    smoothed[0] = raw.boxes[0]
    for i in range(1, len(raw)):
        smoothed[i] = alpha * raw.boxes[i] + (1 - alpha) * smoothed[i - 1]
    track = BoxTrack(smoothed)
    if frame_shape is not None:
        track = track.clamped(*frame_shape)
    return track


def area_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-average downsampling of an H x W x C image"""
    img = np.ascontiguousarray(img, dtype=np.float32)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, channels = img.shape
    if out_h > h or out_w > w:
        raise UnsupportedDirectionError(f"area resize only downsamples ({h}x{w} -> {out_h}x{out_w})")
    if (out_h, out_w) == (h, w):
        return img.copy()
    out = cv2.resize(img, (out_w, out_h), interpolation=cv2.INTER_AREA)
    return out.reshape(out_h, out_w, channels)


def crop(frame: np.ndarray, box: Sequence[float]) -> np.ndarray:
    x, y, w, h = (int(round(v)) for v in box)
    return frame[y:y + max(h, 1), x:x + max(w, 1)]


def extract_face_frames(clip: ClipContainer, boxes: Optional[BoxTrack] = None, size: int = INPUT_SIZE,
                        alpha: float = DEFAULT_BOX_ALPHA) -> np.ndarray:
    """Crop every frame to its (smoothed) box and area-resize to size x size"""
    frames = clip.frames
    if boxes is None:
        return np.stack([area_resize(f, size, size) for f in frames]).astype(np.float32)
    if len(boxes) != clip.frame_count:
        raise ShapeError(f"{len(boxes)} boxes for {clip.frame_count} frames")
    track = smooth_boxes(boxes, alpha, frame_shape=(clip.height, clip.width))
    return np.stack([area_resize(crop(f, b), size, size) for f, b in zip(frames, track.boxes)]).astype(np.float32)


def normalize_frames(raw_x: np.ndarray) -> np.ndarray:
    """Scale pixels to [0, 1] and remove each pixel-channel's temporal mean"""
    x = np.asarray(raw_x, dtype=np.float32) / 255.0
    return (x - x.mean(axis=0, keepdims=True)).astype(np.float32)


def normalize_window(raw_x: np.ndarray, raw_y: np.ndarray) -> WindowTensor:
    """Normalized frames plus the label standardized to zero mean, unit population std"""
    raw_x = np.asarray(raw_x, dtype=np.float32)
    raw_y = np.asarray(raw_y, dtype=np.float64)
    if raw_x.ndim != 4 or raw_x.shape[1:] != (INPUT_SIZE, INPUT_SIZE, 3) or raw_y.shape != raw_x.shape[:1]:
        raise ShapeError(f"expected (L, 8, 8, 3) frames with L labels, got {raw_x.shape} / {raw_y.shape}")
    std = raw_y.std()
    if std == 0:
        raise DegenerateLabelError("label window has zero variance")
    y = (raw_y - raw_y.mean()) / std
    return WindowTensor(x=normalize_frames(raw_x), y=y.astype(np.float32), t0=0)


def window_starts(total: int, win: int = WINDOW_FRAMES, stride: int = WINDOW_FRAMES) -> List[int]:
    if stride < 1:
        raise ValueError("stride must be at least 1")
    if total < win:
        raise TooShortError(f"{total} frames cannot fill a {win}-frame window")
    return list(range(0, total - win + 1, stride))


def make_windows(frames: np.ndarray, labels: np.ndarray, win: int = WINDOW_FRAMES,
                 stride: int = WINDOW_FRAMES) -> List[WindowTensor]:
    """Cut a T x 8 x 8 x 3 stream and its labels into normalized windows"""
    labels = np.asarray(labels)
    if frames.shape[0] != labels.shape[0]:
        raise ShapeError(f"{frames.shape[0]} frames but {labels.shape[0]} labels")
    windows = []
    for t0 in window_starts(frames.shape[0], win, stride):
        try:
            w = normalize_window(frames[t0:t0 + win], labels[t0:t0 + win])
        except DegenerateLabelError:
            logger.warning(f"Skipping window at frame {t0}: constant label")
            continue
        windows.append(WindowTensor(x=w.x, y=w.y, t0=t0))
    return windows


def clip_windows(clip: ClipContainer, boxes: Optional[BoxTrack] = None, win: int = WINDOW_FRAMES,
                 stride: int = WINDOW_FRAMES) -> List[WindowTensor]:
    """Training windows of one clip with frame-aligned BVP labels"""
    return make_windows(extract_face_frames(clip, boxes), align_bvp_to_frames(clip), win, stride)
