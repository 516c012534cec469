import json

import numpy as np
import pytest

from pulsebench.clipio import (
    ClipContainer,
    align_bvp_to_frames,
    clip_from_bytes,
    clip_to_bytes,
    inject_offset,
    read_clip,
    write_clip,
)
from pulsebench.exceptions import ClipFormatError, EmptySignalError, OrderingError, TruncatedFileError
from pulsebench.numerics import linear_interp
from pulsebench.synth import SynthConfig, render_clip

from conftest import T0, make_clip


def test_tiny_round_trip_is_byte_identical(tiny_clip, tmp_path):
    path = write_clip(tiny_clip, tmp_path / "tiny.pbvc")
    loaded = read_clip(path)
    assert loaded == tiny_clip
    assert clip_to_bytes(loaded) == path.read_bytes()


def test_serialization_is_deterministic(tiny_clip):
    assert clip_to_bytes(tiny_clip) == clip_to_bytes(tiny_clip)


def test_header_layout(tiny_clip):
    buf = clip_to_bytes(tiny_clip)
    assert buf[:4] == b"PBVC"
    assert int.from_bytes(buf[4:6], "little") == 1
    assert int.from_bytes(buf[6:8], "little") == 2  # width
    assert int.from_bytes(buf[10:14], "little") == 2  # frame_count


def test_bad_magic(tiny_clip):
    buf = bytearray(clip_to_bytes(tiny_clip))
    buf[:4] = b"XXXX"
    with pytest.raises(ClipFormatError):
        clip_from_bytes(bytes(buf))


def test_bad_version(tiny_clip):
    buf = bytearray(clip_to_bytes(tiny_clip))
    buf[4:6] = (2).to_bytes(2, "little")
    with pytest.raises(ClipFormatError):
        clip_from_bytes(bytes(buf))


def test_truncated_file(tiny_clip, tmp_path):
    path = tmp_path / "cut.pbvc"
    path.write_bytes(clip_to_bytes(tiny_clip)[:-3])
    with pytest.raises(TruncatedFileError):
        read_clip(path)
    with pytest.raises(OSError):
        read_clip(path)


def test_synthetic_clip_round_trip_keeps_every_bvp_sample(tmp_path):
    clip = render_clip(SynthConfig(duration=30.0, bvp_fs=180.0, seed=11))
    assert clip.bvp_vals.size == 5400
    loaded = read_clip(write_clip(clip, tmp_path / "synth.pbvc"))
    assert np.array_equal(loaded.bvp_vals, clip.bvp_vals)
    assert np.array_equal(loaded.bvp_ts, clip.bvp_ts)
    assert np.array_equal(loaded.frames, clip.frames)
    assert loaded.meta == clip.meta


def test_timestamps_must_increase():
    with pytest.raises(OrderingError):
        ClipContainer(
            width=1, height=1, nominal_fps=30.0,
            frames=np.zeros((2, 1, 1, 3), dtype=np.uint8),
            frame_ts=np.array([1.0, 1.0]),
            bvp_vals=np.zeros(2), bvp_ts=np.array([0.0, 1.0]),
        )


def test_measured_fps_comes_from_timestamps():
    clip = make_clip(np.zeros((31, 1, 1, 3)), fps=25.0)
    assert clip.fps == pytest.approx(25.0)
    assert clip.header()["frame_count"] == 31


def test_align_constant_bvp():
    clip = make_clip(np.zeros((30, 1, 1, 3)), bvp_vals=np.full(60, 5.0))
    np.testing.assert_allclose(align_bvp_to_frames(clip), 5.0)


def test_align_ramp_midpoint():
    frames = np.zeros((3, 1, 1, 3))
    clip = ClipContainer(
        width=1, height=1, nominal_fps=1.0, frames=frames,
        frame_ts=T0 + np.array([0.0, 5.0, 10.0]),
        bvp_vals=np.array([0.0, 10.0]), bvp_ts=T0 + np.array([0.0, 10.0]),
    )
    assert align_bvp_to_frames(clip)[1] == pytest.approx(5.0)


def test_align_sinusoid_matches_analytic():
    f = 1.2
    t_bvp = np.arange(600) / 60.0
    clip = make_clip(np.zeros((300, 1, 1, 3)), bvp_vals=np.sin(2 * np.pi * f * t_bvp))
    expected = np.sin(2 * np.pi * f * np.arange(300) / 30.0)
    assert np.max(np.abs(align_bvp_to_frames(clip) - expected)) < 1e-4


def test_align_empty_bvp():
    clip = make_clip(np.zeros((2, 1, 1, 3)), bvp_vals=np.zeros(0))
    with pytest.raises(EmptySignalError):
        align_bvp_to_frames(clip)


def test_inject_offset_zero_is_identity(clean_clip):
    assert inject_offset(clean_clip, 0.0) is clean_clip


def test_inject_offset_round_trip(clean_clip):
    original = clean_clip.bvp_ts.copy()
    back = inject_offset(inject_offset(clean_clip, 0.2), -0.2)
    np.testing.assert_allclose(back.bvp_ts, original, rtol=0, atol=1e-6)
    assert np.array_equal(clean_clip.bvp_ts, original)
    assert back.frames is clean_clip.frames


def test_offset_shifts_labels_by_three_frames(clean_clip):
    before = align_bvp_to_frames(clean_clip)
    after = align_bvp_to_frames(inject_offset(clean_clip, 0.1))
    np.testing.assert_allclose(after[3:], before[:-3], atol=1e-4)


def test_align_commutes_with_offset(clean_clip):
    dt = 0.07
    shifted = align_bvp_to_frames(inject_offset(clean_clip, dt))
    expected = linear_interp(clean_clip.bvp_ts, clean_clip.bvp_vals, clean_clip.frame_ts - dt)
    np.testing.assert_allclose(shifted, expected, atol=1e-4)


def test_clip_id_from_meta(tiny_clip):
    assert tiny_clip.clip_id == "hand"
    assert json.loads(tiny_clip.meta)["clip_id"] == "hand"
