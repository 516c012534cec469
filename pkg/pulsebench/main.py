import logging
from contextlib import asynccontextmanager

from fastapi import Depends, FastAPI, File, HTTPException, Query, UploadFile
from sqlalchemy.orm import Session

import pulsebench
from pulsebench.bench.pipeline import NEURAL_ALGORITHMS, check_algorithm, clip_summary
from pulsebench.clipio import clip_from_bytes
from pulsebench.config import configure_logging
from pulsebench.database import get_db, init_db
from pulsebench.exceptions import ConfigError, PulseBenchError
from pulsebench.neural.counters import flops_table
from pulsebench.neural.models import MODEL_BUILDERS, build_model
from pulsebench.records.registry import get_run, list_runs, run_to_dict

configure_logging()
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(_app: FastAPI):
    init_db()
    yield


app = FastAPI(title="PulseBench", version=pulsebench.__version__, lifespan=lifespan)


@app.get("/health")
def health():
    return {"status": "ok", "version": pulsebench.__version__}


@app.get("/models/{name}/flops")
def model_flops(name: str):
    if name not in MODEL_BUILDERS:
        raise HTTPException(status_code=404, detail=f"Unknown model {name!r}")
    return flops_table(build_model(name))


@app.post("/estimate")
async def estimate(
    file: UploadFile = File(...),
    algorithm: str = Query("pos"),
):
    """Heart rate of an uploaded PBVC clip with an unsupervised algorithm"""
    try:
        check_algorithm(algorithm)
        if algorithm in NEURAL_ALGORITHMS:
            raise ConfigError("neural algorithms need weights; use the CLI or a benchmark config")
        clip = clip_from_bytes(await file.read())
        summary = clip_summary(algorithm, clip)
    except PulseBenchError as e:
        logger.warning(f"Estimate failed for {file.filename}: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    return summary


@app.get("/runs")
def runs(limit: int = Query(50, ge=1, le=500), db: Session = Depends(get_db)):
    return [run_to_dict(run) for run in list_runs(db, limit)]


@app.get("/runs/{run_id}")
def run_detail(run_id: int, db: Session = Depends(get_db)):
    run = get_run(db, run_id)
    if run is None:
        raise HTTPException(status_code=404, detail="Run not found")
    return run_to_dict(run)
