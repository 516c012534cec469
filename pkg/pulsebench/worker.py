# pulsebench/worker.py
from celery import Celery

from pulsebench.config import get_settings

settings = get_settings()

# In-memory broker when none is configured; run_benchmark then stays local
celery_app = Celery(
    "pulsebench",
    broker=settings.broker_url or "memory://",
    backend=settings.result_backend or "rpc://",
)

celery_app.autodiscover_tasks(["pulsebench.tasks"], related_name="bench_tasks")

celery_app.conf.update(
    task_serializer="json",
    result_serializer="json",
    accept_content=["json"],
    task_eager_propagates=True,
    worker_prefetch_multiplier=1,
    task_acks_late=True,
    worker_disable_rate_limits=True,
)
