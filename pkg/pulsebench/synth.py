"""Synthetic ground-truth clips from a two-component skin reflection model.

Each pixel is base colour + diffuse pulsatile term (scaled per channel by the
skin vector) + achromatic illumination drift and specular random walk + sensor
noise. The BVP is known exactly, so every downstream stage can be scored
against it. Degradations (noise, drift, motion, compression proxy, label
offset) are controlled independently.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import uniform_filter1d

from pulsebench.clipio import ClipContainer, write_clip
from pulsebench.postprocess import PulseSignal

logger = logging.getLogger(__name__)

DEFAULT_SKIN_VECTOR = (0.33, 0.77, 0.53)
EPOCH_T0 = 1_700_000_000.0
DRIFT_HZ = 0.05
MOTION_HZ = 0.2


class SynthConfig(BaseModel):
    duration: float = Field(30.0, gt=0)
    fps: float = Field(30.0, gt=0)
    resolution: Tuple[int, int] = (8, 8)
    hr_trace: List[Tuple[float, float]] = Field(default_factory=lambda: [(0.0, 72.0)])
    diffuse_gain: float = 2.0
    skin_vector: Tuple[float, float, float] = DEFAULT_SKIN_VECTOR
    base_color: Tuple[float, float, float] = (170.0, 120.0, 100.0)
    texture_amp: float = Field(4.0, ge=0)
    noise_std: float = Field(0.0, ge=0)
    drift_amp: float = Field(0.0, ge=0)
    motion_amp: float = Field(0.0, ge=0)
    specular_amp: float = Field(0.0, ge=0)
    smooth_k: int = Field(1, ge=1)
    bvp_fs: float = Field(60.0, gt=0)
    offset_s: float = 0.0
    t0: float = EPOCH_T0
    seed: int = 42
    clip_id: str = "clip_0000"

    @field_validator("hr_trace")
    @classmethod
    def _check_trace(cls, knots):
        if not knots:
            raise ValueError("hr_trace needs at least one knot")
        times = [t for t, _ in knots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("hr_trace knot times must be strictly increasing")
        if any(not 40 <= bpm <= 180 for _, bpm in knots):
            raise ValueError("hr_trace values must lie in [40, 180] bpm")
        return knots

    @model_validator(mode="after")
    def _check_resolution(self):
        if min(self.resolution) < 1:
            raise ValueError("resolution must be positive")
        return self

    @property
    def unit_skin_vector(self) -> np.ndarray:
        v = np.asarray(self.skin_vector, dtype=np.float64)
        return v / np.linalg.norm(v)


def hr_at(hr_trace: Sequence[Tuple[float, float]], t: np.ndarray) -> np.ndarray:
    """Piecewise-linear heart rate in bpm, held constant past the end knots"""
    times = np.array([k[0] for k in hr_trace], dtype=np.float64)
    bpm = np.array([k[1] for k in hr_trace], dtype=np.float64)
    return np.interp(t, times, bpm)


def bvp_phase(hr_trace, t: np.ndarray) -> np.ndarray:
    """2*pi times the integral of the instantaneous frequency from 0 to t"""
    t = np.asarray(t, dtype=np.float64)
    # integrate on a grid that contains every knot so the trapezoid rule is exact
    knots = [k[0] for k in hr_trace if 0 < k[0] < t.max()]
    grid = np.union1d(np.union1d([0.0], t[t > 0]), knots)
    cycles = cumulative_trapezoid(hr_at(hr_trace, grid) / 60.0, grid, initial=0.0)
    return 2 * np.pi * np.interp(t, grid, cycles)


def bvp_waveform(phase: np.ndarray) -> np.ndarray:
    return np.sin(phase) + 0.5 * np.sin(2 * phase)


def gen_bvp(hr_trace, bvp_fs: float, duration: float) -> PulseSignal:
    t = np.arange(int(round(duration * bvp_fs))) / bvp_fs
    return PulseSignal(samples=bvp_waveform(bvp_phase(hr_trace, t)), fs=bvp_fs)


def _texture(rng: np.random.Generator, h: int, w: int, amp: float) -> np.ndarray:
    tex = rng.standard_normal((h, w))
    tex -= tex.mean()
    peak = np.abs(tex).max()
    return tex * (amp / peak) if peak > 0 else tex


def render_clip(cfg: SynthConfig) -> ClipContainer:
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.resolution
    n_frames = int(round(cfg.duration * cfg.fps))
    t = np.arange(n_frames) / cfg.fps

    pulse = bvp_waveform(bvp_phase(cfg.hr_trace, t))
    drift = cfg.drift_amp * np.sin(2 * np.pi * DRIFT_HZ * t)
    # achromatic slow random walk, zero-mean and unit-peak before scaling
    walk = uniform_filter1d(np.cumsum(rng.standard_normal(n_frames)), size=max(1, int(cfg.fps)), mode="nearest")
    walk -= walk.mean()
    if np.abs(walk).max() > 0:
        walk /= np.abs(walk).max()
    achromatic = drift + cfg.specular_amp * walk

    texture = _texture(rng, h, w, cfg.texture_amp)
    if cfg.motion_amp > 0:
        dy = np.rint(cfg.motion_amp * np.sin(2 * np.pi * MOTION_HZ * t)).astype(int)
        dx = np.rint(cfg.motion_amp * np.cos(2 * np.pi * MOTION_HZ * t + 0.7)).astype(int)
        textures = np.stack([np.roll(texture, (a, b), axis=(0, 1)) for a, b in zip(dy, dx)])
    else:
        textures = np.broadcast_to(texture, (n_frames, h, w))

    base = np.asarray(cfg.base_color, dtype=np.float64)
    diffuse = cfg.diffuse_gain * np.outer(pulse, cfg.unit_skin_vector)  # (T, 3)
    scene = (base + diffuse + achromatic[:, None])[:, None, None, :] + textures[..., None]
    if cfg.smooth_k > 1:
        # compression proxy: temporal box filter on the scene before sensor noise
        scene = uniform_filter1d(scene, size=cfg.smooth_k, axis=0, mode="nearest")
    if cfg.noise_std > 0:
        scene = scene + rng.normal(0.0, cfg.noise_std, size=scene.shape)
    frames = np.clip(np.rint(scene), 0, 255).astype(np.uint8)

    bvp = gen_bvp(cfg.hr_trace, cfg.bvp_fs, cfg.duration)
    bvp_ts = cfg.t0 + np.arange(len(bvp)) / cfg.bvp_fs + cfg.offset_s
    meta = json.dumps({"clip_id": cfg.clip_id, "synth": cfg.model_dump(mode="json")}, sort_keys=True)
    return ClipContainer(
        width=w,
        height=h,
        nominal_fps=cfg.fps,
        frames=frames,
        frame_ts=cfg.t0 + t,
        bvp_vals=bvp.samples.astype(np.float32),
        bvp_ts=bvp_ts,
        meta=meta,
    )


DEGRADATION_PROFILES: Dict[str, Dict[str, float]] = {
    "clean": {},
    "moderate": {"noise_std": 2.0, "drift_amp": 3.0, "specular_amp": 2.0},
    "noisy": {"noise_std": 5.0, "drift_amp": 5.0, "specular_amp": 4.0, "motion_amp": 1.0},
    "compressed": {"noise_std": 1.0, "smooth_k": 5},
}


class CorpusConfig(BaseModel):
    seed: int = 42
    n: int = Field(20, ge=1)
    hr_range: Tuple[float, float] = (45.0, 150.0)
    profiles: List[str] = Field(default_factory=lambda: ["clean"])
    clip: SynthConfig = Field(default_factory=SynthConfig)
    overrides: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("profiles")
    @classmethod
    def _known_profiles(cls, profiles):
        unknown = sorted(set(profiles) - set(DEGRADATION_PROFILES))
        if unknown or not profiles:
            raise ValueError(f"unknown degradation profiles {unknown}; choose from {sorted(DEGRADATION_PROFILES)}")
        return profiles

    @field_validator("hr_range")
    @classmethod
    def _check_range(cls, hr_range):
        lo, hi = hr_range
        if not 40 <= lo <= hi <= 180:
            raise ValueError("hr_range must satisfy 40 <= lo <= hi <= 180")
        return hr_range


def clip_config(corpus: CorpusConfig, index: int) -> SynthConfig:
    """Config of clip ``index``; a pure function of (seed, index)"""
    rng = np.random.default_rng(np.random.SeedSequence([corpus.seed, index]))
    hr = float(np.round(rng.uniform(*corpus.hr_range), 2))
    profile = corpus.profiles[index % len(corpus.profiles)]
    fields = {
        **DEGRADATION_PROFILES[profile],
        **corpus.overrides,
        "hr_trace": [(0.0, hr)],
        "seed": int(rng.integers(0, 2**31 - 1)),
        "clip_id": f"clip_{index:04d}",
    }
    return SynthConfig.model_validate({**corpus.clip.model_dump(), **fields})


def gen_corpus(corpus: CorpusConfig, out_dir: Optional[Union[str, Path]] = None):
    """Render ``corpus.n`` clips; writes PBVC files and manifest.json when ``out_dir`` is given"""
    configs = [clip_config(corpus, i) for i in range(corpus.n)]
    clips = [render_clip(c) for c in configs]
    manifest = {
        "seed": corpus.seed,
        "n": corpus.n,
        "clips": [
            {"clip_id": c.clip_id, "file": f"{c.clip_id}.pbvc", "hr_bpm": c.hr_trace[0][1], "config": c.model_dump(mode="json")}
            for c in configs
        ],
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for cfg, clip in zip(configs, clips):
            write_clip(clip, out_dir / f"{cfg.clip_id}.pbvc")
        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
        logger.info(f"Wrote {corpus.n} clips and {manifest_path}")
    return clips, manifest
