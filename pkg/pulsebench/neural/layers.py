"""Layer kernels and the spectral transformation block.

Kernels take the (length, channels) layout used throughout the pipeline and
run on torch so that reverse-mode gradients come for free, including through
the real FFT pair inside :class:`SpectralBlock`.
"""
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from pulsebench.exceptions import ShapeError, TooShortError

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def conv1d_forward(x: torch.Tensor, weight: torch.Tensor, bias: Optional[torch.Tensor] = None,
                   stride: int = 1, pad: str = "valid") -> torch.Tensor:
    """1D convolution of an L x Cin signal with Cout x Cin x K weights"""
    if pad not in ("valid", "same"):
        raise ValueError(f"pad must be 'valid' or 'same', got {pad!r}")
    if pad == "same" and stride != 1:
        raise ValueError("'same' padding requires stride 1")
    kernel = weight.shape[-1]
    if pad == "valid" and kernel > x.shape[0]:
        raise TooShortError(f"kernel {kernel} longer than signal {x.shape[0]}")
    # 'same' puts the extra zero on the right for even kernels
    out = F.conv1d(x.T.unsqueeze(0), weight, bias, stride=stride, padding=pad)
    return out[0].T


def batchnorm_forward(x: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor,
                      running_mean: torch.Tensor, running_var: torch.Tensor, training: bool,
                      momentum: float = BN_MOMENTUM, eps: float = BN_EPS) -> torch.Tensor:
    """Batch norm over (batch, length) for B x L x C or L x C inputs.

    Training mode normalizes with batch statistics and updates the running
    buffers in place as ``(1 - momentum) * old + momentum * batch``.
    """
    batched = x if x.dim() == 3 else x.unsqueeze(0)
    out = F.batch_norm(batched.transpose(1, 2), running_mean, running_var, gamma, beta,
                       training=training, momentum=momentum, eps=eps)
    out = out.transpose(1, 2)
    return out if x.dim() == 3 else out[0]


def reshape_video_to_sequence(x):
    """(..., T, 8, 8, 3) video to (..., 3T, 64) RGB sequence.

    Sequence row 3t + c holds colour c of frame t; channel 8*row + col holds
    one spatial position. Works on numpy arrays and torch tensors.
    """
    *lead, t, h, w, c = x.shape
    if (h, w, c) != (8, 8, 3):
        raise ShapeError(f"expected (..., T, 8, 8, 3), got {tuple(x.shape)}")
    return x.reshape(*lead, t, h * w, c).swapaxes(-1, -2).reshape(*lead, t * c, h * w)


def reshape_sequence_to_video(seq):
    *lead, length, channels = seq.shape
    if channels != 64 or length % 3:
        raise ShapeError(f"expected (..., 3T, 64), got {tuple(seq.shape)}")
    return seq.reshape(*lead, length // 3, 3, channels).swapaxes(-1, -2).reshape(*lead, length // 3, 8, 8, 3)


@dataclass
class SpectralActivation:
    """Intermediates of one spectral block pass, batch-first and length-major"""

    y_time: torch.Tensor  # N x C
    y_freq: torch.Tensor  # F x C complex, F = N // 2 + 1
    y_comb: torch.Tensor  # F x 2C, real parts then imaginary parts
    y_out: torch.Tensor  # N x C


class SpectralBlock(nn.Module):
    """RFFT per channel, Conv-BN-ReLU over the packed spectrum, IRFFT, residual add"""

    def __init__(self, channels: int, kernel_size: int):
        super().__init__()
        self.channels = channels
        self.kernel_size = kernel_size
        self.conv = nn.Conv1d(2 * channels, 2 * channels, kernel_size, padding="same")
        self.bn = nn.BatchNorm1d(2 * channels, eps=BN_EPS, momentum=BN_MOMENTUM)

    def pack(self, y: torch.Tensor) -> torch.Tensor:
        spectrum = torch.fft.rfft(y, dim=-1)
        return torch.cat([spectrum.real, spectrum.imag], dim=1)

    def unpack(self, comb: torch.Tensor, n: int) -> torch.Tensor:
        re, im = comb[:, :self.channels], comb[:, self.channels:]
        return torch.fft.irfft(torch.complex(re, im), n=n, dim=-1)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        # y: B x C x N
        if y.shape[1] != self.channels:
            raise ShapeError(f"spectral block expects {self.channels} channels, got {y.shape[1]}")
        n = y.shape[-1]
        if n < 4:
            raise TooShortError(f"spectral block needs at least 4 samples, got {n}")
        mixed = F.relu(self.bn(self.conv(self.pack(y))))
        return y + self.unpack(mixed, n)

    @torch.no_grad()
    def trace(self, y: torch.Tensor) -> SpectralActivation:
        """Run one unbatched N x C input and keep every intermediate"""
        batched = y.T.unsqueeze(0)
        comb = self.pack(batched)
        out = self.forward(batched)
        return SpectralActivation(
            y_time=y,
            y_freq=torch.fft.rfft(batched, dim=-1)[0].T,
            y_comb=comb[0].T,
            y_out=out[0].T,
        )


def spectral_block_forward(y: torch.Tensor, block: SpectralBlock) -> torch.Tensor:
    """Apply ``block`` to an unbatched N x C signal"""
    return block(y.T.unsqueeze(0))[0].T


class SpatialMean(nn.Module):
    """Average over the two trailing spatial axes"""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x.mean(dim=(-2, -1))
