import logging
from typing import Any, Dict, Union

from celery import shared_task

from pulsebench.bench.harness import BenchConfig, evaluate_clip

logger = logging.getLogger(__name__)


@shared_task
def evaluate_clip_task(config: Dict[str, Any], clip_ref: Union[str, int]):
    """Celery task evaluating one clip of a benchmark run"""
    return evaluate_clip_sync(config, clip_ref)


def evaluate_clip_sync(config: Dict[str, Any], clip_ref: Union[str, int]) -> Dict[str, Any]:
    """Same work as the task, run in-process"""
    logger.info(f"Evaluating clip {clip_ref}")
    return evaluate_clip(BenchConfig.model_validate(config), clip_ref)
