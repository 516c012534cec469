import pytest
from pydantic import ValidationError

from pulsebench.bench.experiments import (
    CompressionExperimentConfig,
    OffsetExperimentConfig,
    compression_sweep,
    corpus_mae,
    offset_clips,
    offset_sensitivity,
)
from pulsebench.neural.training import TrainConfig
from pulsebench.synth import CorpusConfig, SynthConfig, gen_corpus


def test_offsets_are_drawn_per_clip_within_range():
    clips, _ = gen_corpus(CorpusConfig(seed=3, n=4, clip=SynthConfig(duration=2.0)))
    shifted = offset_clips(clips, 0.2, seed=1)
    delays = [s.bvp_ts[0] - c.bvp_ts[0] for c, s in zip(clips, shifted)]
    assert all(0.0 <= d <= 0.2 for d in delays)
    assert len({round(d, 9) for d in delays}) == 4
    assert delays == [s.bvp_ts[0] - c.bvp_ts[0] for c, s in zip(clips, offset_clips(clips, 0.2, seed=1))]


def test_corpus_mae_counts_windows():
    clips, _ = gen_corpus(CorpusConfig(seed=3, n=2, clip=SynthConfig(duration=40.0)))
    scores = corpus_mae("pos", clips)
    assert scores["n_windows"] == 4
    assert scores["mae"] < 2.0


def test_compression_sweep_reports_each_level():
    cfg = CompressionExperimentConfig(corpus=CorpusConfig(seed=2, n=1), smooth_ks=[1, 5])
    result = compression_sweep(cfg)
    assert result["algorithm"] == "pos"
    assert [level["smooth_k"] for level in result["levels"]] == [1, 5]
    assert all(level["n_windows"] == 1 for level in result["levels"])


@pytest.mark.parametrize("fields", [{"algorithm": "seq_rppg"}, {"smooth_ks": []}, {"smooth_ks": [0]}])
def test_compression_config_validation(fields):
    with pytest.raises(ValidationError):
        CompressionExperimentConfig(corpus=CorpusConfig(n=1), **fields)


def test_offset_config_rejects_unknown_model():
    with pytest.raises(ValidationError):
        OffsetExperimentConfig(train_corpus=CorpusConfig(n=1), test_corpus=CorpusConfig(n=1), model="vit")


@pytest.mark.slow
def test_compression_damage_is_monotone():
    corpus = CorpusConfig(seed=8, n=10, profiles=["moderate"])
    result = compression_sweep(CompressionExperimentConfig(corpus=corpus, smooth_ks=[1, 3, 5, 9]))
    maes = [level["mae"] for level in result["levels"]]
    assert all(a <= b for a, b in zip(maes, maes[1:]))


@pytest.mark.slow
def test_label_offsets_hurt_held_out_error():
    cfg = OffsetExperimentConfig(
        train_corpus=CorpusConfig(seed=100, n=100, profiles=["moderate"]),
        test_corpus=CorpusConfig(seed=200, n=20, profiles=["moderate"]),
        training=TrainConfig(epochs=30, seed=7),
    )
    result = offset_sensitivity(cfg)
    assert result["aligned"]["mae"] < 3.0
    assert result["offset"]["mae"] > result["aligned"]["mae"]
