"""Array primitives shared by every pipeline stage.

Tensors are plain ``numpy`` arrays (float32 payloads, float64 for timestamps).
The FFT pair is numpy's pocketfft, which handles any length with mixed-radix
kernels and a Bluestein fallback, so the 450-frame window needs no padding.

The frequency axis of an N-point real transform has N//2 + 1 bins (226 for
N=450), not the (N+1)//2 sometimes quoted for this architecture.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pulsebench.exceptions import DegenerateVarianceError, InvalidLengthError, OrderingError


@dataclass(frozen=True)
class ComplexSeq:
    """Half spectrum of a real signal, split into real and imaginary parts"""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        if self.re.shape != self.im.shape:
            raise InvalidLengthError(f"re/im length mismatch: {self.re.shape} vs {self.im.shape}")

    def __len__(self) -> int:
        return self.re.shape[-1]

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexSeq":
        return cls(re=np.ascontiguousarray(z.real), im=np.ascontiguousarray(z.imag))

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im


def rfft(x) -> ComplexSeq:
    """Real FFT along the last axis; returns N//2 + 1 bins"""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1] if x.ndim else 0
    if n < 2:
        raise InvalidLengthError(f"rfft needs at least 2 samples, got {n}")
    return ComplexSeq.from_complex(np.fft.rfft(x, axis=-1))


def irfft(spectrum: ComplexSeq, n: int) -> np.ndarray:
    """Inverse of :func:`rfft` for an output of exactly ``n`` samples"""
    if n < 2 or len(spectrum) != n // 2 + 1:
        raise InvalidLengthError(f"spectrum of {len(spectrum)} bins cannot produce {n} samples")
    return np.fft.irfft(spectrum.to_complex(), n=n, axis=-1)


def rfft_freqs(n: int, fs: float) -> np.ndarray:
    return np.fft.rfftfreq(n, d=1.0 / fs)


def stats(x) -> Tuple[float, float]:
    """Mean and population standard deviation"""
    x = np.asarray(x, dtype=np.float64)
    return float(x.mean()), float(x.std())


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.size < 2:
        raise InvalidLengthError("pearson needs two equal-length inputs of at least 2 samples")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0.0:
        raise DegenerateVarianceError("pearson undefined for a zero-variance input")
    return float(np.clip(np.sum(da * db) / denom, -1.0, 1.0))


def standardize(x) -> np.ndarray:
    """Zero mean, unit population std; raises on zero variance"""
    x = np.asarray(x, dtype=np.float64)
    mean, std = stats(x)
    if std == 0.0:
        raise DegenerateVarianceError("cannot standardize a constant signal")
    return (x - mean) / std


def linear_interp(ts_src, vals, ts_query) -> np.ndarray:
    """Linear interpolation that clamps outside the source range"""
    ts_src = np.asarray(ts_src, dtype=np.float64)
    vals = np.asarray(vals, dtype=np.float64)
    if ts_src.shape != vals.shape:
        raise InvalidLengthError("timestamps and values differ in length")
    if ts_src.size > 1 and not np.all(np.diff(ts_src) > 0):
        raise OrderingError("source timestamps must be strictly increasing")
    # np.interp holds the end values outside [ts_src[0], ts_src[-1]]
    return np.interp(np.asarray(ts_query, dtype=np.float64), ts_src, vals)
