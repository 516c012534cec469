import json

import numpy as np
import pytest
from pydantic import ValidationError

from pulsebench.clipio import read_clip
from pulsebench.postprocess import HR_BAND, detect_peaks, sdnn, welch_hr
from pulsebench.synth import (
    CorpusConfig,
    SynthConfig,
    bvp_phase,
    bvp_waveform,
    clip_config,
    gen_bvp,
    gen_corpus,
    hr_at,
    render_clip,
)


def test_constant_60_bpm_is_one_hertz():
    bvp = gen_bvp([(0.0, 60.0)], bvp_fs=30.0, duration=30.0)
    assert len(bvp) == 900
    assert welch_hr(bvp).bpm == pytest.approx(60.0, abs=0.2)


def test_constant_trace_has_zero_sdnn():
    bvp = gen_bvp([(0.0, 60.0)], bvp_fs=60.0, duration=30.0)
    peaks = detect_peaks(bvp)
    assert np.all(np.diff(peaks) == 60)
    assert sdnn(peaks, bvp.fs) == pytest.approx(0.0, abs=1e-9)


def _zero_crossings(x):
    return int(np.count_nonzero(np.diff(np.signbit(x))))


def test_linear_sweep_integrates_frequency():
    steady = gen_bvp([(0.0, 60.0)], 60.0, 30.0).samples
    sweep = gen_bvp([(0.0, 60.0), (30.0, 120.0)], 60.0, 30.0).samples
    assert _zero_crossings(sweep) / _zero_crossings(steady) == pytest.approx(1.5, abs=0.05)


def test_phase_is_exact_integral_across_knots():
    trace = [(0.0, 60.0), (10.0, 60.0), (10.5, 120.0)]
    # 10 s at 1 Hz, then a 0.5 s ramp averaging 1.5 Hz, then 2 Hz
    phase = bvp_phase(trace, np.array([10.0, 10.5, 11.5]))
    np.testing.assert_allclose(phase / (2 * np.pi), [10.0, 10.75, 12.75], atol=1e-9)


def test_hr_at_holds_end_values():
    trace = [(5.0, 60.0), (10.0, 90.0)]
    np.testing.assert_allclose(hr_at(trace, np.array([0.0, 7.5, 20.0])), [60.0, 75.0, 90.0])


def test_waveform_has_two_harmonics():
    phase = np.linspace(0, 2 * np.pi, 9)
    np.testing.assert_allclose(bvp_waveform(phase), np.sin(phase) + 0.5 * np.sin(2 * phase))


def test_no_degradation_and_no_pulse_gives_identical_frames():
    clip = render_clip(SynthConfig(duration=2.0, diffuse_gain=0.0))
    assert np.all(clip.frames == clip.frames[0])


def test_same_seed_is_bit_identical():
    cfg = SynthConfig(duration=4.0, noise_std=3.0, specular_amp=2.0, motion_amp=1.0, seed=9)
    assert render_clip(cfg) == render_clip(cfg)


def test_clean_green_trace_follows_the_model(clean_clip):
    cfg = SynthConfig.model_validate(clean_clip.meta_dict["synth"])
    t = np.arange(clean_clip.frame_count) / cfg.fps
    s = bvp_waveform(bvp_phase(cfg.hr_trace, t))
    expected = cfg.base_color[1] + cfg.diffuse_gain * cfg.unit_skin_vector[1] * s
    green = clean_clip.frames[..., 1].astype(np.float64).mean(axis=(1, 2))
    assert np.max(np.abs(green - expected)) <= 0.5


def test_frame_and_bvp_timestamps(clean_clip):
    cfg = SynthConfig.model_validate(clean_clip.meta_dict["synth"])
    assert clean_clip.frame_ts[0] == cfg.t0
    assert clean_clip.frame_ts[1] - clean_clip.frame_ts[0] == pytest.approx(1 / 30.0, rel=1e-6)
    offset = render_clip(cfg.model_copy(update={"offset_s": 0.1, "duration": 2.0}))
    assert offset.bvp_ts[0] == pytest.approx(cfg.t0 + 0.1, abs=1e-6)


def _inband_power(green, fs):
    spectrum = np.abs(np.fft.rfft(green - green.mean())) ** 2
    freqs = np.fft.rfftfreq(green.size, 1 / fs)
    return spectrum[(freqs >= HR_BAND[0]) & (freqs <= HR_BAND[1])].sum()


def test_compression_proxy_reduces_pulsatile_power():
    powers = []
    for k in (1, 3, 5, 9):
        clip = render_clip(SynthConfig(duration=20.0, smooth_k=k, seed=4))
        powers.append(_inband_power(clip.frames[..., 1].astype(np.float64).mean(axis=(1, 2)), 30.0))
    assert all(a > b for a, b in zip(powers, powers[1:]))


@pytest.mark.parametrize(
    "fields",
    [{"smooth_k": 0}, {"fps": 0}, {"hr_trace": [(0.0, 200.0)]}, {"hr_trace": [(1.0, 60.0), (0.5, 70.0)]}],
)
def test_invalid_configs(fields):
    with pytest.raises(ValidationError):
        SynthConfig(**fields)


def test_single_clip_corpus_matches_manifest(tmp_path):
    corpus = CorpusConfig(seed=1, n=1, clip=SynthConfig(duration=3.0))
    clips, manifest = gen_corpus(corpus, tmp_path)
    entry = manifest["clips"][0]
    assert len(list(tmp_path.glob("*.pbvc"))) == 1
    on_disk = read_clip(tmp_path / entry["file"])
    assert on_disk == clips[0]
    assert on_disk.clip_id == entry["clip_id"]
    assert json.loads((tmp_path / "manifest.json").read_text())["clips"][0]["hr_bpm"] == entry["hr_bpm"]
    assert 45.0 <= entry["hr_bpm"] <= 150.0


def test_clip_config_is_a_function_of_seed_and_index():
    corpus = CorpusConfig(seed=7, n=3)
    assert clip_config(corpus, 2) == clip_config(corpus, 2)
    assert clip_config(corpus, 1).seed != clip_config(corpus, 2).seed


def test_disjoint_seeds_draw_different_rates():
    a = [clip_config(CorpusConfig(seed=1, n=5), i).hr_trace[0][1] for i in range(5)]
    b = [clip_config(CorpusConfig(seed=2, n=5), i).hr_trace[0][1] for i in range(5)]
    assert set(a).isdisjoint(b)


def test_profiles_and_overrides_apply():
    corpus = CorpusConfig(n=2, profiles=["clean", "compressed"], overrides={"texture_amp": 1.0})
    first, second = clip_config(corpus, 0), clip_config(corpus, 1)
    assert first.smooth_k == 1 and second.smooth_k == 5
    assert first.texture_amp == second.texture_amp == 1.0


def test_unknown_profile_rejected():
    with pytest.raises(ValidationError):
        CorpusConfig(profiles=["vhs"])
