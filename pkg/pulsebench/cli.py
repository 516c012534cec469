"""pulsebench command line: synth, run, train, bench, flops, inspect, plot, experiment, serve.

Machine-readable results go to stdout as JSON; logs go to stderr.
Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pulsebench import __version__
from pulsebench.config import DEFAULT_SEED, configure_logging, get_settings, load_config
from pulsebench.exceptions import ConfigError, PulseBenchError

logger = logging.getLogger("pulsebench.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _emit(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    sys.stdout.flush()


def _read_json(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e


def _model_for(algorithm: str, weights: Optional[str]):
    from pulsebench.bench.pipeline import NEURAL_ALGORITHMS, load_model

    return load_model(algorithm, weights) if algorithm in NEURAL_ALGORITHMS else None


def _boxes(path: Optional[str]):
    from pulsebench.preprocess import load_box_sidecar

    return load_box_sidecar(path) if path else None


def cmd_synth(args) -> int:
    from pulsebench.synth import CorpusConfig, gen_corpus

    corpus = load_config(CorpusConfig, _read_json(args.config), seed=args.seed, n=args.n)
    try:
        _, manifest = gen_corpus(corpus, args.out)
    except OSError as e:
        raise ConfigError(f"cannot write corpus to {args.out}: {e}") from e
    _emit({"manifest": str(Path(args.out) / "manifest.json"), "clips": len(manifest["clips"])})
    return EXIT_OK


def cmd_run(args) -> int:
    from pulsebench.bench.pipeline import clip_summary, estimate_clip
    from pulsebench.clipio import read_clip

    clip = read_clip(args.clip)
    model = _model_for(args.algorithm, args.weights)
    boxes = _boxes(args.boxes)
    summary = clip_summary(args.algorithm, clip, model, boxes, window=args.window, stride=args.stride)
    if args.plot:
        from pulsebench.bench.plotting import plot_estimate

        summary["plot"] = str(plot_estimate(estimate_clip(args.algorithm, clip, model, boxes), args.plot))
    _emit(summary)
    return EXIT_OK


def cmd_train(args) -> int:
    from pulsebench.neural.models import build_model
    from pulsebench.neural.training import TrainRunConfig, train, training_windows, write_loss_csv
    from pulsebench.neural.weights import save_weights

    data = _read_json(args.config)
    training = data.setdefault("training", {})
    if args.epochs is not None:
        training["epochs"] = args.epochs
    if args.seed is not None:
        training["seed"] = args.seed
    run = load_config(TrainRunConfig, data)

    windows = training_windows(run)
    if not windows:
        raise ConfigError("no training windows; clips must hold at least 450 frames")
    model = build_model(run.model, seed=run.training.seed)
    result = train(model, windows, run.training)

    weights_path = save_weights(result.weights, args.out)
    loss_csv = Path(args.loss_csv) if args.loss_csv else weights_path.with_suffix(".loss.csv")
    write_loss_csv(result, loss_csv)
    _emit({
        "model": run.model,
        "weights": str(weights_path),
        "loss_csv": str(loss_csv),
        "epochs": run.training.epochs,
        "windows": len(windows),
        "final_loss": result.losses[-1],
    })
    return EXIT_OK


def cmd_bench(args) -> int:
    from pulsebench.bench.harness import BenchConfig, run_benchmark, verify_report, write_report

    data = _read_json(args.config)
    if args.seed is not None and isinstance(data.get("corpus"), dict):
        data["corpus"]["seed"] = args.seed
    cfg = load_config(BenchConfig, data, threads=args.threads)
    report = run_benchmark(cfg)
    out = write_report(report, args.out)
    logger.info(f"Report written to {out}")

    problems = verify_report(report)
    for problem in problems:
        logger.error(f"Report inconsistency: {problem}")

    if args.record:
        from pulsebench.database import SessionLocal, init_db
        from pulsebench.records.registry import record_report

        init_db()
        db = SessionLocal()
        try:
            run = record_report(report, out, db)
        finally:
            db.close()
        logger.info(f"Recorded as run {run.id}")

    _emit({
        "report": str(out),
        "algorithms": {a["name"]: {k: a[k] for k in ("mae", "rmse", "pearson", "sdnn_mae")} for a in report["algorithms"]},
        "errors": len(report["errors"]),
    })
    if report["errors"]:
        logger.error(f"{len(report['errors'])} clip evaluation(s) failed")
    return EXIT_FAILURE if report["errors"] or problems else EXIT_OK


def cmd_flops(args) -> int:
    from pulsebench.neural.counters import flops_table
    from pulsebench.neural.models import build_model

    _emit(flops_table(build_model(args.model), timed=args.time))
    return EXIT_OK


def cmd_inspect(args) -> int:
    from pulsebench.clipio import read_clip

    _emit(read_clip(args.clip).header())
    return EXIT_OK


def cmd_plot(args) -> int:
    from pulsebench.bench.pipeline import estimate_clip
    from pulsebench.bench.plotting import plot_estimate
    from pulsebench.clipio import read_clip

    est = estimate_clip(args.algorithm, read_clip(args.clip), _model_for(args.algorithm, args.weights), _boxes(args.boxes))
    _emit({"plot": str(plot_estimate(est, args.out, title=f"{args.algorithm} on {est.clip_id}"))})
    return EXIT_OK


def cmd_experiment(args) -> int:
    from pulsebench.bench import experiments

    data = _read_json(args.config)
    if args.kind == "offset":
        result = experiments.offset_sensitivity(load_config(experiments.OffsetExperimentConfig, data))
    else:
        result = experiments.compression_sweep(load_config(experiments.CompressionExperimentConfig, data))
    _emit(result)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    port = args.port or get_settings().port
    logger.info(f"Serving on http://{args.host}:{port} (docs at /docs)")
    uvicorn.run("pulsebench.main:app", host=args.host, port=port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from pulsebench.bench.evaluation import DEFAULT_STRIDE_S, DEFAULT_WINDOW_S
    from pulsebench.bench.pipeline import ALL_ALGORITHMS
    from pulsebench.neural.models import MODEL_BUILDERS

    parser = argparse.ArgumentParser(prog="pulsebench", description="rPPG engine and benchmark harness")
    parser.add_argument("--version", action="version", version=f"pulsebench {__version__}")
    parser.add_argument("--log-level", default=None, help="overrides PULSEBENCH_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic clip corpus")
    p.add_argument("--config", help="CorpusConfig JSON (defaults when omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help=f"corpus seed (config default {DEFAULT_SEED})")
    p.add_argument("--n", type=int, default=None, help="number of clips")
    p.set_defaults(func=cmd_synth)

    def clip_args(p):
        p.add_argument("algorithm", choices=ALL_ALGORITHMS)
        p.add_argument("clip", help="PBVC clip file")
        p.add_argument("--weights", help="PBWT weights, required for neural algorithms")
        p.add_argument("--boxes", help="JSON face-box sidecar, one [x, y, w, h] per frame")

    p = sub.add_parser("run", help="estimate HR and SDNN on one clip")
    clip_args(p)
    p.add_argument("--window", type=float, default=DEFAULT_WINDOW_S, help="moving window in seconds")
    p.add_argument("--stride", type=float, default=DEFAULT_STRIDE_S, help="window stride in seconds")
    p.add_argument("--plot", help="also write an SVG figure here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="train a neural model")
    p.add_argument("--config", required=True, help="TrainRunConfig JSON")
    p.add_argument("--out", required=True, help="weights file to write")
    p.add_argument("--loss-csv", help="loss curve CSV (default: next to the weights)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="run a benchmark and write the JSON report")
    p.add_argument("--config", required=True, help="BenchConfig JSON")
    p.add_argument("--out", required=True, help="report file to write")
    p.add_argument("--threads", type=int, default=None, help="worker pool size (default PULSEBENCH_THREADS)")
    p.add_argument("--seed", type=int, default=None, help="overrides the synthetic corpus seed")
    p.add_argument("--record", action="store_true", help="store the run in the registry database")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("flops", help="parameter and FLOP counts of a model")
    p.add_argument("model", choices=sorted(MODEL_BUILDERS))
    p.add_argument("--time", action="store_true", help="also time inference on this host")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("inspect", help="print a clip header")
    p.add_argument("clip")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("plot", help="SVG of predicted vs ground-truth pulse and spectra")
    clip_args(p)
    p.add_argument("--out", required=True, help="SVG file to write")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("experiment", help="label-offset or compression experiment")
    p.add_argument("kind", choices=("offset", "compression"))
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (PulseBenchError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILURE
