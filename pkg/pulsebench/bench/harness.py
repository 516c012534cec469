"""Benchmark runs: clip fan-out, deterministic merge and the JSON report"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import scipy
import sklearn
import torch
from pydantic import BaseModel, Field, field_validator, model_validator

import pulsebench
from pulsebench.bench.evaluation import (
    DEFAULT_STRIDE_S,
    DEFAULT_WINDOW_S,
    WindowedEstimate,
    metrics_from_windows,
    sdnn_error,
    windowed_hr,
)
from pulsebench.bench.pipeline import NEURAL_ALGORITHMS, check_algorithm, estimate_clip, load_model
from pulsebench.clipio import ClipContainer, read_clip
from pulsebench.config import get_settings
from pulsebench.exceptions import ConfigError, PulseBenchError
from pulsebench.neural.models import ModelGraph
from pulsebench.synth import CorpusConfig, clip_config, render_clip

logger = logging.getLogger(__name__)

ClipRef = Union[str, int]  # PBVC path, or index into the synthetic corpus


class BenchConfig(BaseModel):
    algorithms: List[str] = Field(default_factory=list)
    clips_dir: Optional[str] = None
    corpus: Optional[CorpusConfig] = None
    window: float = Field(DEFAULT_WINDOW_S, gt=0)
    stride: float = Field(DEFAULT_STRIDE_S, gt=0)
    weights: Dict[str, str] = Field(default_factory=dict)
    threads: Optional[int] = Field(None, ge=1)
    sdnn: bool = True

    @field_validator("algorithms")
    @classmethod
    def _known_algorithms(cls, algorithms):
        for name in algorithms:
            check_algorithm(name)
        if len(set(algorithms)) != len(algorithms):
            raise ValueError("algorithms must not repeat")
        return algorithms

    @model_validator(mode="after")
    def _one_source(self):
        if (self.clips_dir is None) == (self.corpus is None):
            raise ValueError("give exactly one clip source: clips_dir or corpus")
        return self


def clip_refs(cfg: BenchConfig) -> List[ClipRef]:
    if cfg.corpus is not None:
        return list(range(cfg.corpus.n))
    clips_dir = Path(cfg.clips_dir)
    if not clips_dir.is_dir():
        raise ConfigError(f"clip directory not found: {clips_dir}")
    return [str(p) for p in sorted(clips_dir.glob("*.pbvc"))]


def resolve_clip(cfg: BenchConfig, ref: ClipRef) -> ClipContainer:
    if isinstance(ref, int):
        return render_clip(clip_config(cfg.corpus, ref))
    return read_clip(ref)


def load_models(cfg: BenchConfig) -> Dict[str, ModelGraph]:
    """Every neural model the config names; fails before any clip is touched"""
    return {name: load_model(name, cfg.weights.get(name)) for name in cfg.algorithms if name in NEURAL_ALGORITHMS}


def evaluate_clip(cfg: BenchConfig, ref: ClipRef, models: Optional[Dict[str, ModelGraph]] = None) -> Dict[str, Any]:
    """Windowed estimates of every configured algorithm on one clip, as plain JSON data"""
    models = load_models(cfg) if models is None else models
    try:
        clip = resolve_clip(cfg, ref)
    except (PulseBenchError, OSError) as e:
        logger.warning(f"Could not load clip {ref}: {e}")
        return {"clip": str(ref), "results": {}, "errors": [{"clip": str(ref), "algorithm": None, "error": str(e)}]}
    clip_id = clip.clip_id or (Path(ref).stem if isinstance(ref, str) else f"clip_{ref:04d}")

    results: Dict[str, Any] = {}
    errors = []
    for name in cfg.algorithms:
        try:
            est = estimate_clip(name, clip, models.get(name))
            windows = windowed_hr(est.pred, est.gt, cfg.window, cfg.stride, clip_id=clip_id, clip_flags=est.flags)
            results[name] = {
                "windows": [w.to_dict() for w in windows],
                "sdnn_error": sdnn_error(est.pred, est.gt) if cfg.sdnn else None,
            }
        except (PulseBenchError, ValueError) as e:
            logger.warning(f"{name} failed on {clip_id}: {e}")
            errors.append({"clip": clip_id, "algorithm": name, "error": str(e)})
    return {"clip": clip_id, "results": results, "errors": errors}


def _evaluate_local(cfg: BenchConfig, refs: List[ClipRef], models: Dict[str, ModelGraph], threads: int):
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ref: evaluate_clip(cfg, ref, models), refs))


def _evaluate_queued(cfg: BenchConfig, refs: List[ClipRef]):
    from pulsebench.tasks.bench_tasks import evaluate_clip_task
    from pulsebench.worker import celery_app  # noqa: F401  (binds the configured broker)

    payload = cfg.model_dump(mode="json")
    pending = [evaluate_clip_task.delay(payload, ref) for ref in refs]
    return [p.get() for p in pending]


def library_versions() -> Dict[str, str]:
    return {
        "pulsebench": pulsebench.__version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "torch": torch.__version__,
        "scikit-learn": sklearn.__version__,
    }


def _mean_or_none(values: List[Optional[float]]) -> Optional[float]:
    kept = [v for v in values if v is not None]
    return float(np.mean(kept)) if kept else None


def _algorithm_entry(name: str, clip_results: List[Dict[str, Any]]) -> Dict[str, Any]:
    rows = [row for r in clip_results if name in r["results"] for row in r["results"][name]["windows"]]
    rows.sort(key=lambda row: (row["clip"], row["start"]))
    metrics = metrics_from_windows([WindowedEstimate(**row) for row in rows])
    return {
        "name": name,
        "windows": rows,
        "mae": metrics.mae,
        "rmse": metrics.rmse,
        "pearson": metrics.pearson,
        "sdnn_mae": _mean_or_none([r["results"][name]["sdnn_error"] for r in clip_results if name in r["results"]]),
    }


def run_benchmark(cfg: BenchConfig, threads: Optional[int] = None) -> Dict[str, Any]:
    """Evaluate every algorithm on every clip and assemble the report.

    Clips go to the Celery queue when a broker is configured, else (or when
    dispatch fails) to a local thread pool. Either way results are merged in
    clip-id order so the report does not depend on completion order.
    """
    settings = get_settings()
    threads = threads or cfg.threads or settings.threads
    models = load_models(cfg)
    refs = clip_refs(cfg) if cfg.algorithms else []
    logger.info(f"Benchmarking {len(cfg.algorithms)} algorithm(s) on {len(refs)} clip(s)")

    clip_results = None
    if refs and settings.broker_url:
        try:
            clip_results = _evaluate_queued(cfg, refs)
        except Exception as e:
            logger.warning(f"Queued evaluation failed, processing locally: {e}")
    if clip_results is None:
        clip_results = _evaluate_local(cfg, refs, models, threads)
    clip_results.sort(key=lambda r: r["clip"])

    return {
        "config": cfg.model_dump(mode="json"),
        "algorithms": [_algorithm_entry(name, clip_results) for name in cfg.algorithms],
        "errors": [err for r in clip_results for err in r["errors"]],
        "versions": library_versions(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def report_to_json(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False)


def write_report(report: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_to_json(report) + "\n", encoding="utf-8")
    return path


def verify_report(report: Dict[str, Any], tol: float = 1e-9) -> List[str]:
    """Aggregates that disagree with the report's own window rows; empty when consistent"""
    problems = []
    for entry in report.get("algorithms", []):
        recomputed = metrics_from_windows([WindowedEstimate(**row) for row in entry["windows"]])
        for key in ("mae", "rmse", "pearson"):
            stored, fresh = entry.get(key), getattr(recomputed, key)
            if stored is None or fresh is None:
                if stored is not fresh:
                    problems.append(f"{entry['name']}.{key}: stored {stored}, recomputed {fresh}")
            elif not math.isclose(stored, fresh, rel_tol=tol, abs_tol=tol):
                problems.append(f"{entry['name']}.{key}: stored {stored}, recomputed {fresh}")
    return problems
