"""Static SVG figures of a clip estimate: waveforms and Welch spectra"""
import logging
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from pulsebench.bench.pipeline import ClipEstimate  # noqa: E402
from pulsebench.exceptions import DurationError  # noqa: E402
from pulsebench.numerics import standardize  # noqa: E402
from pulsebench.postprocess import HR_BAND, welch_psd  # noqa: E402

logger = logging.getLogger(__name__)


def plot_estimate(est: ClipEstimate, path: Union[str, Path], title: str = "") -> Path:
    """Predicted vs ground-truth pulse (standardized) above their Welch PSDs"""
    path = Path(path)
    t = np.arange(len(est.pred)) / est.pred.fs
    fig, axes = plt.subplots(2, 1, figsize=(10, 6))
    try:
        ax = axes[0]
        ax.plot(t, standardize(est.gt.samples), label="ground truth", linewidth=1.0)
        ax.plot(t, standardize(est.pred.samples), label="predicted", linewidth=1.0)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("pulse (z-score)")
        ax.set_title(title or est.clip_id or "pulse")
        ax.legend(loc="upper right")

        ax = axes[1]
        try:
            for sig, label in ((est.gt, "ground truth"), (est.pred, "predicted")):
                freqs, psd = welch_psd(sig)
                band = (freqs >= HR_BAND[0]) & (freqs <= HR_BAND[1])
                ax.plot(freqs[band] * 60.0, psd[band] / psd[band].max(), label=label, linewidth=1.0)
            ax.legend(loc="upper right")
        except DurationError:
            logger.warning(f"{est.clip_id}: clip too short for a Welch spectrum, leaving the panel empty")
        ax.set_xlabel("heart rate (bpm)")
        ax.set_ylabel("normalized PSD")

        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
    logger.info(f"Wrote {path}")
    return path
