from datetime import datetime

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from pulsebench.database import Base


class BenchRun(Base):
    __tablename__ = "bench_runs"

    id = Column(Integer, primary_key=True, index=True)
    created_at = Column(DateTime, default=datetime.utcnow)
    config_json = Column(Text)
    report_path = Column(String, nullable=True)
    status = Column(String, default="ok")
    n_errors = Column(Integer, default=0)

    results = relationship("AlgorithmResult", back_populates="run", cascade="all, delete-orphan",
                           order_by="AlgorithmResult.name")


class AlgorithmResult(Base):
    __tablename__ = "algorithm_results"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("bench_runs.id"), index=True)
    name = Column(String)
    mae = Column(Float, nullable=True)
    rmse = Column(Float, nullable=True)
    pearson = Column(Float, nullable=True)
    sdnn_mae = Column(Float, nullable=True)
    n_windows = Column(Integer, default=0)

    run = relationship("BenchRun", back_populates="results")
