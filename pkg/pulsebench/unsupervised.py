"""Handcrafted rPPG baselines operating on spatially averaged RGB traces.

GREEN uses the green channel alone. CHROM and POS project the temporally
normalized trace onto planes orthogonal to [1, 1, 1], so achromatic intensity
changes (illumination flicker, specular glints) cancel exactly. ICA separates
the three channels into independent sources and keeps the most periodic one.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal
from sklearn.decomposition import FastICA
from sklearn.exceptions import ConvergenceWarning

from pulsebench.exceptions import DegenerateInputError, ShapeError
from pulsebench.postprocess import HR_BAND

logger = logging.getLogger(__name__)

# non-convergence is reported through IcaResult.converged and the log
warnings.filterwarnings("ignore", category=ConvergenceWarning, module=r"sklearn\.decomposition")

DEFAULT_WIN_SECONDS = 1.6
ICA_MAX_ITER = 200
ICA_TOL = 1e-6
ICA_SEED = 42


@dataclass(frozen=True)
class RgbTrace:
    r: np.ndarray
    g: np.ndarray
    b: np.ndarray
    fs: float

    def __post_init__(self):
        channels = [np.asarray(c, dtype=np.float64).reshape(-1) for c in (self.r, self.g, self.b)]
        if len({c.size for c in channels}) != 1:
            raise ShapeError("r, g and b must have equal lengths")
        for name, c in zip("rgb", channels):
            object.__setattr__(self, name, c)

    def __len__(self) -> int:
        return self.r.size

    @classmethod
    def from_frames(cls, frames: np.ndarray, fs: float) -> "RgbTrace":
        """Spatial mean of every T x H x W x 3 frame"""
        means = np.asarray(frames, dtype=np.float64).mean(axis=(1, 2))
        return cls(r=means[:, 0], g=means[:, 1], b=means[:, 2], fs=fs)

    def as_array(self) -> np.ndarray:
        """(T, 3) array in R, G, B order"""
        return np.stack([self.r, self.g, self.b], axis=1)

    def scaled(self, k: float) -> "RgbTrace":
        return RgbTrace(self.r * k, self.g * k, self.b * k, self.fs)


def _window_length(fs: float, win_seconds: float) -> int:
    return max(2, int(math.ceil(win_seconds * fs)))


def green(trace: RgbTrace) -> np.ndarray:
    pulse = signal.detrend(trace.g, type="linear")
    return pulse - pulse.mean()


def chrom(trace: RgbTrace, win_seconds: float = DEFAULT_WIN_SECONDS) -> np.ndarray:
    """Chrominance projection with Hann-weighted 50% overlap-add"""
    rgb = trace.as_array()
    n = rgb.shape[0]
    win = _window_length(trace.fs, win_seconds)
    win += win % 2
    if n < win:
        win = n - n % 2
    hop = win // 2
    hann = signal.get_window("hann", win)
    pulse = np.zeros(n)
    starts = list(range(0, n - win + 1, hop))
    if starts and starts[-1] + win < n:
        starts.append(n - win)
    for start in starts:
        seg = rgb[start:start + win]
        norm = seg / seg.mean(axis=0)
        rn, gn, bn = norm[:, 0], norm[:, 1], norm[:, 2]
        x = 3 * rn - 2 * gn
        y = 1.5 * rn + gn - 1.5 * bn
        sy = y.std()
        if sy == 0:
            continue
        s = x - (x.std() / sy) * y
        pulse[start:start + win] += hann * (s - s.mean())
    return pulse - pulse.mean()


def pos(trace: RgbTrace, win_seconds: float = DEFAULT_WIN_SECONDS) -> np.ndarray:
    """Plane-orthogonal-to-skin projection with sliding-window overlap-add"""
    rgb = trace.as_array()
    n = rgb.shape[0]
    win = min(_window_length(trace.fs, win_seconds), n)
    # (n_windows, 3, win)
    segments = sliding_window_view(rgb, win, axis=0)
    norm = segments / segments.mean(axis=2, keepdims=True)
    rn, gn, bn = norm[:, 0], norm[:, 1], norm[:, 2]
    s1 = gn - bn
    s2 = gn + bn - 2 * rn
    std1 = s1.std(axis=1, keepdims=True)
    std2 = s2.std(axis=1, keepdims=True)
    alpha = np.divide(std1, std2, out=np.zeros_like(std1), where=std2 > 0)
    h = s1 + alpha * s2
    h = h - h.mean(axis=1, keepdims=True)
    pulse = np.zeros(n)
    for start, hn in enumerate(h):
        pulse[start:start + win] += hn
    return pulse - pulse.mean()


@dataclass(frozen=True)
class IcaResult:
    components: np.ndarray  # (T, 3)
    selected: int
    pulse: np.ndarray
    converged: bool


def _band_peak_ratio(x: np.ndarray, fs: float) -> float:
    spectrum = np.abs(np.fft.rfft(x - x.mean())) ** 2
    freqs = np.fft.rfftfreq(x.size, d=1.0 / fs)
    band = (freqs >= HR_BAND[0]) & (freqs <= HR_BAND[1])
    total = spectrum.sum()
    if total == 0 or not band.any():
        return 0.0
    return float(spectrum[band].max() / total)


def _seeded_orthonormal(seed: int, size: int = 3) -> np.ndarray:
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def ica_components(trace: RgbTrace, seed: int = ICA_SEED, max_iter: int = ICA_MAX_ITER) -> IcaResult:
    """Symmetric fixed-point ICA (tanh contrast) and in-band component selection.

    ``converged`` is False when the iteration limit was reached; the last
    iterate is used anyway.
    """
    x = trace.as_array()
    centered = x - x.mean(axis=0)
    eigvals = np.linalg.eigvalsh(np.cov(centered, rowvar=False))
    if eigvals.min() <= 1e-10 * max(eigvals.max(), 1e-300):
        raise DegenerateInputError("RGB covariance is rank deficient")
    ica = FastICA(
        n_components=3,
        algorithm="parallel",
        whiten="unit-variance",
        fun="logcosh",
        max_iter=max_iter,
        tol=ICA_TOL,
        w_init=_seeded_orthonormal(seed),
        random_state=seed,
    )
    sources = ica.fit_transform(centered)
    # a fit that meets tol on the final iteration also counts as not converged
    converged = ica.n_iter_ < max_iter
    if not converged:
        logger.warning(f"FastICA did not converge in {max_iter} iterations; using the last iterate")
    ratios = [_band_peak_ratio(sources[:, k], trace.fs) for k in range(sources.shape[1])]
    selected = int(np.argmax(ratios))
    pulse = sources[:, selected].copy()

    # ICA leaves the sign free; align the peak-bin phase with the green channel
    spec_pulse = np.fft.rfft(pulse - pulse.mean())
    spec_green = np.fft.rfft(trace.g - trace.g.mean())
    peak = int(np.argmax(np.abs(spec_pulse[1:]))) + 1
    if np.real(spec_pulse[peak] * np.conj(spec_green[peak])) < 0:
        pulse = -pulse
    return IcaResult(components=sources, selected=selected, pulse=pulse - pulse.mean(), converged=converged)


def ica_pulse(trace: RgbTrace) -> np.ndarray:
    return ica_components(trace).pulse


ALGORITHMS: Dict[str, Callable[[RgbTrace], np.ndarray]] = {
    "green": green,
    "chrom": chrom,
    "pos": pos,
    "ica": ica_pulse,
}
