"""Run registry: one row per benchmark run plus its per-algorithm aggregates"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from sqlalchemy.orm import Session

from pulsebench.records.models import AlgorithmResult, BenchRun

logger = logging.getLogger(__name__)


def record_report(report: Dict[str, Any], report_path: Optional[Union[str, Path]], db: Session) -> BenchRun:
    errors = report.get("errors", [])
    run = BenchRun(
        config_json=json.dumps(report.get("config", {}), sort_keys=True),
        report_path=str(report_path) if report_path is not None else None,
        status="errors" if errors else "ok",
        n_errors=len(errors),
    )
    for entry in report.get("algorithms", []):
        run.results.append(
            AlgorithmResult(
                name=entry["name"],
                mae=entry.get("mae"),
                rmse=entry.get("rmse"),
                pearson=entry.get("pearson"),
                sdnn_mae=entry.get("sdnn_mae"),
                n_windows=len(entry.get("windows", [])),
            )
        )
    db.add(run)
    db.commit()
    db.refresh(run)
    logger.info(f"Recorded benchmark run {run.id} ({len(run.results)} algorithm(s), {run.n_errors} error(s))")
    return run


def run_to_dict(run: BenchRun) -> Dict[str, Any]:
    return {
        "id": run.id,
        "created_at": run.created_at.isoformat() if run.created_at else None,
        "config": json.loads(run.config_json) if run.config_json else {},
        "report_path": run.report_path,
        "status": run.status,
        "n_errors": run.n_errors,
        "algorithms": [
            {
                "name": r.name,
                "mae": r.mae,
                "rmse": r.rmse,
                "pearson": r.pearson,
                "sdnn_mae": r.sdnn_mae,
                "n_windows": r.n_windows,
            }
            for r in run.results
        ],
    }


def list_runs(db: Session, limit: int = 50) -> List[BenchRun]:
    return db.query(BenchRun).order_by(BenchRun.id.desc()).limit(limit).all()


def get_run(db: Session, run_id: int) -> Optional[BenchRun]:
    return db.query(BenchRun).filter(BenchRun.id == run_id).first()
