"""Analytic parameter and FLOP counts.

FLOPs follow one convention: a multiply-accumulate is 2 FLOPs, only
convolutions are counted (batch norm, ReLU and FFTs are excluded), and the
total for one window is divided by the number of frames it covers.
"""
import logging
import time
from typing import Dict, List

import numpy as np
import torch
from torch import nn

from pulsebench.neural.models import ModelGraph
from pulsebench.preprocess import WINDOW_FRAMES

logger = logging.getLogger(__name__)


def count_params(model: nn.Module) -> int:
    """Weights, biases and batch-norm affine terms"""
    return sum(p.numel() for p in model.parameters())


def _conv_macs(module: nn.Module, output: torch.Tensor) -> int:
    per_output = module.in_channels // module.groups * int(np.prod(module.kernel_size))
    # output is B x Cout x spatial...; count one batch element
    return int(output[0].numel()) * per_output


@torch.no_grad()
def layer_macs(model: ModelGraph, frames: int = WINDOW_FRAMES) -> List[Dict[str, object]]:
    """Per-convolution MAC counts for one window of ``frames`` frames"""
    rows: List[Dict[str, object]] = []
    hooks = []
    for name, module in model.named_modules():
        if isinstance(module, (nn.Conv1d, nn.Conv3d)):
            def hook(mod, _inputs, output, name=name):
                rows.append({"layer": name, "output_shape": list(output.shape[1:]), "macs": _conv_macs(mod, output)})
            hooks.append(module.register_forward_hook(hook))
    was_training = model.training
    model.eval()
    try:
        model(torch.zeros((1, *model.input_shape(frames))))
    finally:
        for h in hooks:
            h.remove()
        model.train(was_training)
    return rows


def count_flops(model: ModelGraph, frames: int = WINDOW_FRAMES) -> float:
    """Convolution FLOPs per frame"""
    total_macs = sum(row["macs"] for row in layer_macs(model, frames))
    return 2.0 * total_macs / frames


@torch.no_grad()
def host_ms_per_frame(model: ModelGraph, frames: int = WINDOW_FRAMES, repeats: int = 5) -> float:
    """Median wall-clock milliseconds per frame on this host (eval mode, batch 1)"""
    was_training = model.training
    model.eval()
    x = torch.zeros((1, *model.input_shape(frames)))
    model(x)
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        model(x)
        timings.append(time.perf_counter() - start)
    model.train(was_training)
    return float(np.median(timings)) * 1000.0 / frames


def flops_table(model: ModelGraph, frames: int = WINDOW_FRAMES, timed: bool = False) -> Dict[str, object]:
    """Model name, input resolution, params and FLOPs/frame"""
    resolution = "x".join(str(d) for d in (model.frame_shape[:2] if model.layout == "video" else (8, 8)))
    row: Dict[str, object] = {
        "model": model.name,
        "input_resolution": resolution,
        "params": count_params(model),
        "flops_per_frame": count_flops(model, frames),
    }
    if timed:
        row["host_ms_per_frame"] = host_ms_per_frame(model, frames)
    return row
