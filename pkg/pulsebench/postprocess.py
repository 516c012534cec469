"""Signal conditioning and physiological readouts for recovered pulse waveforms"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from pulsebench.exceptions import BandError, DurationError, InsufficientPeaksError, InvalidLengthError
from pulsebench.numerics import ComplexSeq, irfft, rfft, rfft_freqs

logger = logging.getLogger(__name__)

HR_BAND = (0.66, 3.0)  # Hz, 40-180 bpm
WELCH_SEGMENT_S = 10.0
WELCH_NFFT_AT_30FPS = 16384
LOW_CONFIDENCE_RATIO = 3.0


@dataclass(frozen=True)
class PulseSignal:
    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.fs <= 0:
            raise ValueError(f"sampling rate must be positive, got {self.fs}")
        if samples.size < 2:
            raise InvalidLengthError("a pulse signal needs at least 2 samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


@dataclass(frozen=True)
class HrEstimate:
    bpm: float
    peak_ratio: float

    @property
    def low_confidence(self) -> bool:
        return self.peak_ratio < LOW_CONFIDENCE_RATIO


def _moving_average(x: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average; edges average over the truncated window"""
    kernel = np.ones(width)
    sums = np.convolve(x, kernel, mode="same")
    counts = np.convolve(np.ones_like(x), kernel, mode="same")
    return sums / counts


def detrend_window(fs: float, window_seconds: float) -> int:
    """Odd window length in samples so the average stays centered"""
    width = max(2, int(round(window_seconds * fs)))
    return width if width % 2 else width + 1


def detrend(sig: PulseSignal, window_seconds: float = 1.0) -> PulseSignal:
    """Subtract a centered moving average"""
    width = detrend_window(sig.fs, window_seconds)
    return replace(sig, samples=sig.samples - _moving_average(sig.samples, width))


def bandpass(sig: PulseSignal, lo: float = HR_BAND[0], hi: float = HR_BAND[1]) -> PulseSignal:
    """Zero-phase brick-wall band mask applied in the frequency domain"""
    if not lo < hi < sig.fs / 2:
        raise BandError(f"band [{lo}, {hi}] Hz invalid at fs={sig.fs}")
    n = len(sig)
    spectrum = rfft(sig.samples)
    freqs = rfft_freqs(n, sig.fs)
    keep = (freqs >= lo) & (freqs <= hi)
    if not keep.any():
        raise BandError(f"no frequency bin of a {n}-sample signal falls inside [{lo}, {hi}] Hz")
    masked = ComplexSeq(re=np.where(keep, spectrum.re, 0.0), im=np.where(keep, spectrum.im, 0.0))
    return replace(sig, samples=irfft(masked, n))


def condition(sig: PulseSignal) -> PulseSignal:
    """Detrend followed by the heart-rate bandpass"""
    return bandpass(detrend(sig))


def welch_nfft(fs: float) -> int:
    # keep the bin width at or below the 30 fps / 16384-point grid
    return 1 << math.ceil(math.log2(WELCH_NFFT_AT_30FPS * fs / 30.0))


def welch_psd(sig: PulseSignal):
    nperseg = int(round(WELCH_SEGMENT_S * sig.fs))
    if len(sig) < nperseg:
        raise DurationError(f"Welch HR needs {WELCH_SEGMENT_S:.0f} s, got {sig.duration:.2f} s")
    return signal.welch(
        sig.samples,
        fs=sig.fs,
        window="hann",
        nperseg=nperseg,
        noverlap=nperseg // 2,
        nfft=max(welch_nfft(sig.fs), nperseg),
        detrend="constant",
    )


def welch_hr(sig: PulseSignal, band=HR_BAND) -> HrEstimate:
    """Heart rate from the in-band peak of the Welch PSD"""
    freqs, psd = welch_psd(sig)
    in_band = (freqs >= band[0]) & (freqs <= band[1])
    band_freqs, band_psd = freqs[in_band], psd[in_band]
    peak = int(np.argmax(band_psd))
    median = float(np.median(band_psd))
    ratio = float(band_psd[peak] / median) if median > 0 else (math.inf if band_psd[peak] > 0 else 0.0)
    return HrEstimate(bpm=float(band_freqs[peak] * 60.0), peak_ratio=ratio)


def rolling_rms(x: np.ndarray, width: int) -> np.ndarray:
    return np.sqrt(_moving_average(x * x, width))


def detect_peaks(sig: PulseSignal, rms_window_seconds: float = 2.0) -> np.ndarray:
    """Local maxima above half the rolling RMS, at least 60/(1.1*HR) s apart"""
    x = sig.samples
    if np.ptp(x) == 0:
        return np.array([], dtype=int)
    try:
        hr = welch_hr(sig).bpm
    except DurationError:
        hr = HR_BAND[1] * 60.0
    distance = max(1, int(math.floor(60.0 / (1.1 * hr) * sig.fs)))
    threshold = 0.5 * rolling_rms(x, detrend_window(sig.fs, rms_window_seconds))
    peaks, _ = signal.find_peaks(x, height=threshold, distance=distance)
    return np.sort(peaks)


def sdnn(peaks, fs: float) -> float:
    """Population std of inter-beat intervals, in milliseconds"""
    peaks = np.asarray(peaks, dtype=np.float64)
    if peaks.size < 3:
        raise InsufficientPeaksError(f"SDNN needs at least 3 peaks, got {peaks.size}")
    intervals_ms = np.diff(peaks) / fs * 1000.0
    return float(intervals_ms.std())
