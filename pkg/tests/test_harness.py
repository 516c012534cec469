import json

import pytest
from pydantic import ValidationError

from pulsebench.bench.evaluation import ICA_NOT_CONVERGED
from pulsebench.bench.harness import (
    BenchConfig,
    clip_refs,
    evaluate_clip,
    library_versions,
    report_to_json,
    run_benchmark,
    verify_report,
    write_report,
)
from pulsebench.exceptions import ConfigError
from pulsebench.synth import CorpusConfig, SynthConfig, gen_corpus
from pulsebench.tasks.bench_tasks import evaluate_clip_sync
from pulsebench.unsupervised import ica_components


def small_corpus(n=2, duration=30.0, **kwargs):
    return CorpusConfig(seed=5, n=n, clip=SynthConfig(duration=duration, noise_std=1.0), **kwargs)


def without_timestamp(report):
    return {k: v for k, v in report.items() if k != "timestamp"}


@pytest.fixture(scope="module")
def pos_report():
    return run_benchmark(BenchConfig(algorithms=["pos", "green"], corpus=small_corpus()))


def test_report_layout(pos_report):
    assert set(pos_report) == {"config", "algorithms", "errors", "versions", "timestamp"}
    assert [a["name"] for a in pos_report["algorithms"]] == ["pos", "green"]
    entry = pos_report["algorithms"][0]
    assert {"name", "windows", "mae", "rmse", "pearson", "sdnn_mae"} <= set(entry)
    assert len(entry["windows"]) == 2
    assert [w["clip"] for w in entry["windows"]] == ["clip_0000", "clip_0001"]
    assert pos_report["errors"] == []
    assert pos_report["versions"] == library_versions()


def test_pos_is_accurate_on_clean_clips(pos_report):
    assert pos_report["algorithms"][0]["mae"] < 2.0


def test_report_is_self_consistent(pos_report):
    assert verify_report(pos_report) == []


def test_tampered_report_is_caught(pos_report):
    tampered = json.loads(report_to_json(pos_report))
    tampered["algorithms"][0]["mae"] += 1.0
    problems = verify_report(tampered)
    assert len(problems) == 1
    assert problems[0].startswith("pos.mae")


def test_identical_runs_match_except_timestamp(pos_report):
    again = run_benchmark(BenchConfig(algorithms=["pos", "green"], corpus=small_corpus()), threads=1)
    assert report_to_json(without_timestamp(again)) == report_to_json(without_timestamp(pos_report))


def test_clip_processing_order_does_not_change_the_report(monkeypatch):
    cfg = BenchConfig(algorithms=["pos"], corpus=small_corpus(n=3, duration=12.0), window=10.0, stride=10.0)
    in_order = run_benchmark(cfg, threads=1)
    monkeypatch.setattr("pulsebench.bench.harness.clip_refs", lambda _cfg: [2, 0, 1])
    shuffled = run_benchmark(cfg, threads=3)
    assert report_to_json(without_timestamp(shuffled)) == report_to_json(without_timestamp(in_order))


def test_empty_algorithm_list():
    report = run_benchmark(BenchConfig(corpus=small_corpus()))
    assert report["algorithms"] == []
    assert report["errors"] == []
    assert verify_report(report) == []


def test_missing_weights_fail_before_any_clip(monkeypatch):
    def explode(*_args, **_kwargs):
        raise AssertionError("clips must not be loaded")

    monkeypatch.setattr("pulsebench.bench.harness.resolve_clip", explode)
    with pytest.raises(ConfigError):
        run_benchmark(BenchConfig(algorithms=["pos", "seq_rppg"], corpus=small_corpus()))


def test_clip_directory_source(tmp_path):
    gen_corpus(small_corpus(duration=12.0), tmp_path)
    (tmp_path / "zz_broken.pbvc").write_bytes(b"PBVC\x01")
    cfg = BenchConfig(algorithms=["green"], clips_dir=str(tmp_path), window=10.0, stride=10.0)
    assert len(clip_refs(cfg)) == 3
    report = run_benchmark(cfg)
    rows = report["algorithms"][0]["windows"]
    assert [r["clip"] for r in rows] == ["clip_0000", "clip_0001"]
    assert len(report["errors"]) == 1
    assert report["errors"][0]["clip"].endswith("zz_broken.pbvc")


def test_missing_clip_directory(tmp_path):
    with pytest.raises(ConfigError):
        clip_refs(BenchConfig(clips_dir=str(tmp_path / "nowhere")))


def test_write_report_is_strict_json(pos_report, tmp_path):
    path = write_report(pos_report, tmp_path / "out" / "report.json")
    assert json.loads(path.read_text()) == json.loads(report_to_json(pos_report))


@pytest.mark.parametrize(
    "fields",
    [
        {},
        {"clips_dir": "x", "corpus": {"n": 1}},
        {"corpus": {"n": 1}, "algorithms": ["nope"]},
        {"corpus": {"n": 1}, "algorithms": ["pos", "pos"]},
        {"corpus": {"n": 1}, "window": 0},
    ],
)
def test_invalid_bench_configs(fields):
    with pytest.raises(ValidationError):
        BenchConfig.model_validate(fields)


def test_evaluate_clip_collects_per_algorithm_results():
    cfg = BenchConfig(algorithms=["chrom"], corpus=small_corpus(n=1))
    result = evaluate_clip(cfg, 0)
    assert result["clip"] == "clip_0000"
    assert set(result["results"]) == {"chrom"}
    assert result["results"]["chrom"]["sdnn_error"] is not None


def test_ica_non_convergence_reaches_report_windows(monkeypatch):
    monkeypatch.setattr("pulsebench.bench.pipeline.ica_components", lambda trace: ica_components(trace, max_iter=1))
    result = evaluate_clip(BenchConfig(algorithms=["ica"], corpus=small_corpus(n=1)), 0)
    windows = result["results"]["ica"]["windows"]
    assert windows
    assert all(ICA_NOT_CONVERGED in w["flags"] for w in windows)


def test_worker_task_body_matches_local_evaluation():
    cfg = BenchConfig(algorithms=["green"], corpus=small_corpus(n=1))
    assert evaluate_clip_sync(cfg.model_dump(mode="json"), 0) == evaluate_clip(cfg, 0)


@pytest.mark.slow
@pytest.mark.parametrize("algorithm", ["chrom", "pos"])
def test_twenty_clip_corpus_projection_methods(algorithm):
    report = run_benchmark(BenchConfig(algorithms=[algorithm], corpus=CorpusConfig(seed=42, n=20)))
    entry = report["algorithms"][0]
    assert len(entry["windows"]) == 20
    assert entry["mae"] < 1.0
    assert entry["pearson"] > 0.99
    assert verify_report(report) == []


@pytest.mark.slow
def test_twenty_clip_corpus_ica():
    report = run_benchmark(BenchConfig(algorithms=["ica"], corpus=CorpusConfig(seed=42, n=20)))
    assert report["algorithms"][0]["mae"] < 2.0
    assert verify_report(report) == []
