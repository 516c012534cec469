import json
import os

# keep the registry off disk before any pulsebench module reads settings
os.environ.setdefault("PULSEBENCH_DATABASE_URL", "sqlite://")
os.environ.pop("PULSEBENCH_BROKER_URL", None)

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from pulsebench.clipio import ClipContainer  # noqa: E402
from pulsebench.synth import SynthConfig, render_clip  # noqa: E402

T0 = 1_700_000_000.0


def make_clip(frames, fps=30.0, bvp_vals=None, bvp_fs=60.0, meta=None):
    """Hand-built clip; BVP defaults to a ramp covering the frame span"""
    frames = np.asarray(frames, dtype=np.uint8)
    n = frames.shape[0]
    frame_ts = T0 + np.arange(n) / fps
    if bvp_vals is None:
        m = max(2, int(round(n / fps * bvp_fs)))
        bvp_vals = np.linspace(0.0, 1.0, m)
    bvp_vals = np.asarray(bvp_vals, dtype=np.float32)
    bvp_ts = T0 + np.arange(bvp_vals.size) / bvp_fs
    return ClipContainer(
        width=frames.shape[2],
        height=frames.shape[1],
        nominal_fps=fps,
        frames=frames,
        frame_ts=frame_ts,
        bvp_vals=bvp_vals,
        bvp_ts=bvp_ts,
        meta=json.dumps(meta or {"clip_id": "hand"}),
    )


@pytest.fixture
def tiny_clip():
    frames = np.arange(2 * 2 * 2 * 3, dtype=np.uint8).reshape(2, 2, 2, 3)
    return make_clip(frames, bvp_vals=[0.5, 1.5, 2.5, 3.5])


@pytest.fixture(scope="session")
def clean_clip():
    """30 s, 30 fps, 8x8 clip at a constant 72 bpm with no degradations"""
    return render_clip(SynthConfig(hr_trace=[(0.0, 72.0)], seed=3, clip_id="clean72"))


@pytest.fixture(scope="session")
def moderate_clip():
    return render_clip(
        SynthConfig(hr_trace=[(0.0, 72.0)], drift_amp=3.0, noise_std=1.0, seed=5, clip_id="drift72")
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def shrunken_seq_rppg():
    """Seq-rPPG topology on 48 x 8 float64 inputs (16 frames, 8 channels), eval mode"""
    from pulsebench.neural.models import build_seq_rppg

    model = build_seq_rppg(in_channels=8, width=8, head=4, seed=11).double()
    model.eval()
    return model
