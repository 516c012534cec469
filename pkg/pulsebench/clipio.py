"""PBVC clip container: timestamped RGB frames plus timestamped BVP.

Layout, all little-endian::

    magic "PBVC" | version u16 | width u16 | height u16 | frame_count u32
    nominal_fps f32 | bvp_count u32 | meta_len u32 | meta (UTF-8 JSON)
    frame_ts f64[frame_count] | frames u8[frame_count*h*w*3]
    bvp_ts f64[bvp_count] | bvp_vals f32[bvp_count]

Timestamps are authoritative; ``nominal_fps`` is advisory.
"""
import json
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from pulsebench.exceptions import ClipFormatError, EmptySignalError, OrderingError, ShapeError, TruncatedFileError
from pulsebench.numerics import linear_interp

logger = logging.getLogger(__name__)

MAGIC = b"PBVC"
VERSION = 1
_HEADER = struct.Struct("<4sHHHIfII")


@dataclass(frozen=True, eq=False)
class ClipContainer:
    width: int
    height: int
    nominal_fps: float
    frames: np.ndarray  # (T, H, W, 3) uint8
    frame_ts: np.ndarray  # (T,) float64
    bvp_vals: np.ndarray  # (M,) float32
    bvp_ts: np.ndarray  # (M,) float64
    meta: str = field(default="{}")

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.uint8)
        if frames.ndim != 4 or frames.shape[1:] != (self.height, self.width, 3):
            raise ShapeError(f"frames must be (T, {self.height}, {self.width}, 3), got {frames.shape}")
        frame_ts = np.ascontiguousarray(self.frame_ts, dtype=np.float64)
        bvp_ts = np.ascontiguousarray(self.bvp_ts, dtype=np.float64)
        bvp_vals = np.ascontiguousarray(self.bvp_vals, dtype=np.float32)
        if frame_ts.shape != (frames.shape[0],):
            raise ShapeError(f"{frame_ts.size} frame timestamps for {frames.shape[0]} frames")
        if bvp_ts.shape != bvp_vals.shape:
            raise ShapeError(f"{bvp_ts.size} BVP timestamps for {bvp_vals.size} samples")
        for name, ts in (("frame_ts", frame_ts), ("bvp_ts", bvp_ts)):
            if ts.size > 1 and not np.all(np.diff(ts) > 0):
                raise OrderingError(f"{name} must be strictly increasing")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_ts", frame_ts)
        object.__setattr__(self, "bvp_ts", bvp_ts)
        object.__setattr__(self, "bvp_vals", bvp_vals)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def duration(self) -> float:
        if self.frame_count < 2:
            return 0.0
        return float(self.frame_ts[-1] - self.frame_ts[0])

    @property
    def fps(self) -> float:
        """Frame rate measured from the timestamps"""
        if self.frame_count < 2:
            return float(self.nominal_fps)
        return (self.frame_count - 1) / self.duration

    @property
    def meta_dict(self) -> Dict[str, Any]:
        return json.loads(self.meta) if self.meta else {}

    @property
    def clip_id(self) -> str:
        return str(self.meta_dict.get("clip_id", ""))

    def header(self) -> Dict[str, Any]:
        return {
            "version": VERSION,
            "width": self.width,
            "height": self.height,
            "frame_count": self.frame_count,
            "nominal_fps": float(np.float32(self.nominal_fps)),
            "measured_fps": self.fps,
            "bvp_count": int(self.bvp_vals.size),
            "duration_s": self.duration,
            "meta": self.meta_dict,
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClipContainer):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.float32(self.nominal_fps) == np.float32(other.nominal_fps)
            and self.meta == other.meta
            and np.array_equal(self.frames, other.frames)
            and np.array_equal(self.frame_ts, other.frame_ts)
            and np.array_equal(self.bvp_ts, other.bvp_ts)
            and np.array_equal(self.bvp_vals, other.bvp_vals)
        )


def clip_to_bytes(clip: ClipContainer) -> bytes:
    meta = clip.meta.encode("utf-8")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        clip.width,
        clip.height,
        clip.frame_count,
        clip.nominal_fps,
        clip.bvp_vals.size,
        len(meta),
    )
    return b"".join(
        [
            header,
            meta,
            clip.frame_ts.astype("<f8").tobytes(),
            clip.frames.tobytes(),
            clip.bvp_ts.astype("<f8").tobytes(),
            clip.bvp_vals.astype("<f4").tobytes(),
        ]
    )


def clip_from_bytes(buf: bytes) -> ClipContainer:
    if len(buf) < _HEADER.size:
        if len(buf) >= 4 and buf[:4] != MAGIC:
            raise ClipFormatError(f"bad magic {buf[:4]!r}")
        raise TruncatedFileError(f"header needs {_HEADER.size} bytes, file has {len(buf)}")
    magic, version, width, height, frame_count, fps, bvp_count, meta_len = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ClipFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ClipFormatError(f"unsupported container version {version}")

    offset = _HEADER.size

    def take(nbytes: int, what: str) -> memoryview:
        nonlocal offset
        end = offset + nbytes
        if end > len(buf):
            raise TruncatedFileError(f"file truncated while reading {what}")
        chunk = memoryview(buf)[offset:end]
        offset = end
        return chunk

    meta = bytes(take(meta_len, "meta")).decode("utf-8")
    frame_ts = np.frombuffer(take(8 * frame_count, "frame timestamps"), dtype="<f8").astype(np.float64)
    pixels = np.frombuffer(take(frame_count * height * width * 3, "frames"), dtype=np.uint8)
    bvp_ts = np.frombuffer(take(8 * bvp_count, "BVP timestamps"), dtype="<f8").astype(np.float64)
    bvp_vals = np.frombuffer(take(4 * bvp_count, "BVP values"), dtype="<f4").astype(np.float32)
    if offset != len(buf):
        logger.warning(f"Ignoring {len(buf) - offset} trailing bytes after clip payload")
    return ClipContainer(
        width=width,
        height=height,
        nominal_fps=float(fps),
        frames=pixels.reshape(frame_count, height, width, 3).copy(),
        frame_ts=frame_ts,
        bvp_vals=bvp_vals,
        bvp_ts=bvp_ts,
        meta=meta,
    )


def write_clip(clip: ClipContainer, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(clip_to_bytes(clip))
    logger.debug(f"Wrote clip {path} ({clip.frame_count} frames, {clip.bvp_vals.size} BVP samples)")
    return path


def read_clip(path: Union[str, Path]) -> ClipContainer:
    return clip_from_bytes(Path(path).read_bytes())


def align_bvp_to_frames(clip: ClipContainer) -> np.ndarray:
    """BVP resampled at every frame timestamp"""
    if clip.bvp_vals.size == 0:
        raise EmptySignalError("clip carries no BVP samples")
    return linear_interp(clip.bvp_ts, clip.bvp_vals, clip.frame_ts)


def inject_offset(clip: ClipContainer, dt: float) -> ClipContainer:
    """Copy of ``clip`` whose BVP timestamps are shifted by ``dt`` seconds"""
    if dt == 0:
        return clip
    return replace(clip, bvp_ts=clip.bvp_ts + dt)
