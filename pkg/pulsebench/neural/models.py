"""Model assemblies: Seq-rPPG (1D CNN on the RGB sequence) and NoobHeart (tiny 3D CNN)"""
import logging
from collections import OrderedDict
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import torch
from torch import nn

from pulsebench.exceptions import ConfigError, ShapeError, StateError
from pulsebench.neural.layers import BN_EPS, BN_MOMENTUM, SpatialMean, SpectralBlock, reshape_video_to_sequence
from pulsebench.preprocess import WINDOW_FRAMES, normalize_frames, window_starts

logger = logging.getLogger(__name__)


class ModelGraph(nn.Module):
    """Ordered layer list with named weights.

    ``layout`` is ``"sequence"`` for L x C inputs (L = samples_per_frame x frames)
    or ``"video"`` for T x H x W x 3 inputs. Batched inputs carry one extra
    leading axis; outputs are B x frames (or frames when unbatched).
    """

    def __init__(self, name: str, layers: List[Tuple[str, nn.Module]], layout: str,
                 frame_shape: Tuple[int, ...], samples_per_frame: int = 1):
        super().__init__()
        if layout not in ("sequence", "video"):
            raise ValueError(f"unknown layout {layout!r}")
        self.name = name
        self.layout = layout
        self.frame_shape = tuple(frame_shape)
        self.samples_per_frame = samples_per_frame
        self.layers = nn.Sequential(OrderedDict(layers))
        self._cache: Optional[Tuple[torch.Tensor, torch.Tensor]] = None

    def input_shape(self, frames: int = WINDOW_FRAMES) -> Tuple[int, ...]:
        if self.layout == "sequence":
            return (frames * self.samples_per_frame, *self.frame_shape)
        return (frames, *self.frame_shape)

    def _to_channels_first(self, x: torch.Tensor) -> torch.Tensor:
        if self.layout == "sequence":
            return x.transpose(1, 2)
        return x.permute(0, 4, 1, 2, 3)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        unbatched = x.dim() == len(self.frame_shape) + 1
        if unbatched:
            x = x.unsqueeze(0)
        if tuple(x.shape[2:]) != self.frame_shape:
            raise ShapeError(f"{self.name} expects (..., {self.frame_shape}) inputs, got {tuple(x.shape)}")
        out = self.layers(self._to_channels_first(x))
        return out[0] if unbatched else out

    def run(self, x: torch.Tensor, cache: bool = True) -> torch.Tensor:
        """Forward pass that keeps what :func:`backward` needs"""
        if not cache:
            self._cache = None
            return self(x)
        x = x.detach().requires_grad_(True)
        out = self(x)
        self._cache = (x, out)
        return out

    def weight_map(self) -> "OrderedDict[str, np.ndarray]":
        """Learned parameters and normalization statistics by name"""
        return OrderedDict(
            (name, tensor.detach().cpu().numpy().copy())
            for name, tensor in self.state_dict().items()
            if not name.endswith("num_batches_tracked")
        )

    def prepare(self, video: np.ndarray) -> torch.Tensor:
        """(B, T, 8, 8, 3) normalized video to this model's input layout"""
        x = torch.as_tensor(np.asarray(video, dtype=np.float32))
        if self.layout == "sequence":
            return reshape_video_to_sequence(x).contiguous()
        return x


def backward(model: ModelGraph, x: torch.Tensor, grad_out: torch.Tensor) -> Dict[str, torch.Tensor]:
    """Gradients of <output, grad_out> for every parameter and for the input"""
    if model._cache is None:
        raise StateError("backward called without a cached forward pass; call model.run(x) first")
    cached_x, out = model._cache
    if cached_x.shape != x.shape or not torch.equal(cached_x.detach(), x.detach()):
        raise StateError("backward input differs from the cached forward input")
    names = [name for name, p in model.named_parameters() if p.requires_grad]
    params = [p for p in model.parameters() if p.requires_grad]
    grads = torch.autograd.grad(out, [cached_x, *params], grad_outputs=grad_out, allow_unused=True)
    model._cache = None
    result = {"input": grads[0]}
    for name, param, grad in zip(names, params, grads[1:]):
        result[name] = torch.zeros_like(param) if grad is None else grad
    return result


def build_seq_rppg(in_channels: int = 64, width: int = 64, head: int = 32, seed: int = 0) -> ModelGraph:
    """Seq-rPPG: strided RGB-triplet conv, two spectral blocks, conv head.

    With the default sizes it maps a 1350 x 64 sequence to 450 samples and holds
    195,713 parameters. Smaller sizes keep the same topology for gradient checks.
    """
    bn = dict(eps=BN_EPS, momentum=BN_MOMENTUM)
    layers = [
        ("conv_in", nn.Conv1d(in_channels, width, kernel_size=3, stride=3)),
        ("spectral1", SpectralBlock(width, kernel_size=5)),
        ("conv2", nn.Conv1d(width, width, kernel_size=10, padding="same")),
        ("bn2", nn.BatchNorm1d(width, **bn)),
        ("relu2", nn.ReLU()),
        ("spectral2", SpectralBlock(width, kernel_size=3)),
        ("conv3", nn.Conv1d(width, head, kernel_size=5, padding="same")),
        ("bn3", nn.BatchNorm1d(head, **bn)),
        ("relu3", nn.ReLU()),
        ("conv_out", nn.Conv1d(head, 1, kernel_size=1)),
        ("flatten", nn.Flatten(start_dim=1)),
    ]
    model = ModelGraph("seq_rppg", layers, layout="sequence", frame_shape=(in_channels,), samples_per_frame=3)
    init_weights(model, seed)
    return model


def build_noobheart(seed: int = 0) -> ModelGraph:
    """Reference reconstruction of the tutorial 3D CNN (not the published weights or layout).

    Two strided 3D convs pool 8x8 down to 2x2 while keeping every frame, a
    spatial mean leaves a 4-channel trace, and a 1x1 conv reads out the pulse.
    """
    layers = [
        ("conv3d1", nn.Conv3d(3, 4, kernel_size=(3, 2, 2), stride=(1, 2, 2), padding=(1, 0, 0))),
        ("relu1", nn.ReLU()),
        ("conv3d2", nn.Conv3d(4, 4, kernel_size=(3, 2, 2), stride=(1, 2, 2), padding=(1, 0, 0))),
        ("relu2", nn.ReLU()),
        ("spatial_mean", SpatialMean()),
        ("conv_out", nn.Conv1d(4, 1, kernel_size=1)),
        ("flatten", nn.Flatten(start_dim=1)),
    ]
    model = ModelGraph("noobheart", layers, layout="video", frame_shape=(8, 8, 3))
    init_weights(model, seed)
    return model


MODEL_BUILDERS: Dict[str, Callable[..., ModelGraph]] = {
    "seq_rppg": build_seq_rppg,
    "noobheart": build_noobheart,
}


def build_model(name: str, seed: int = 0) -> ModelGraph:
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_BUILDERS)}") from None
    return builder(seed=seed)


def init_weights(model: nn.Module, seed: int) -> None:
    """Seeded He-uniform conv weights, zero biases, identity batch norm"""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for module in model.modules():
            if isinstance(module, (nn.Conv1d, nn.Conv3d)):
                fan_in = module.weight[0].numel()
                bound = (6.0 / fan_in) ** 0.5
                module.weight.copy_(torch.rand(module.weight.shape, generator=generator) * 2 * bound - bound)
                if module.bias is not None:
                    module.bias.zero_()
            elif isinstance(module, nn.BatchNorm1d):
                module.reset_running_stats()
                module.weight.fill_(1.0)
                module.bias.zero_()


@torch.no_grad()
def predict_frames(model: ModelGraph, frames: np.ndarray, win: int = WINDOW_FRAMES) -> np.ndarray:
    """Pulse prediction for a whole T x 8 x 8 x 3 stream.

    Non-overlapping windows cover the stream; a last window aligned to the end
    fills any remainder, contributing only the frames not already covered.
    """
    model.eval()
    total = frames.shape[0]
    starts = window_starts(total, win, win)
    if starts[-1] + win < total:
        starts.append(total - win)
    batch = np.stack([normalize_frames(frames[s:s + win]) for s in starts])
    pred = model(model.prepare(batch)).numpy().astype(np.float64)
    out = np.zeros(total)
    covered = 0
    for s, p in zip(starts, pred):
        out[covered:s + win] = p[covered - s:]
        covered = s + win
    return out
