"""Causal band-pass filtering, filter banks and per-window standardization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import kernels
from .core import Recording, WindowSet
from .errors import ParameterError


@dataclass(frozen=True)
class BandSpec:
    """Pass band ``[low_hz, high_hz]`` of a Butterworth design of the given order."""

    low_hz: float
    high_hz: float
    order: int = 4

    def __post_init__(self):
        if not (0 < self.low_hz < self.high_hz):
            raise ParameterError(f"band edges must satisfy 0 < low < high, got {self.low_hz}, {self.high_hz}")
        if int(self.order) != self.order or self.order < 1:
            raise ParameterError(f"filter order must be a positive integer, got {self.order}")

    def check(self, sample_rate_hz: float) -> None:
        if self.high_hz >= sample_rate_hz / 2:
            raise ParameterError(
                f"band edge {self.high_hz} Hz is not below Nyquist ({sample_rate_hz / 2} Hz)")

    def sos(self, sample_rate_hz: float) -> np.ndarray:
        """Second-order sections of the band-pass design at ``sample_rate_hz``."""
        self.check(sample_rate_hz)
        return signal.butter(self.order, [self.low_hz, self.high_hz], btype="bandpass",
                             fs=sample_rate_hz, output="sos")


MI_BAND = BandSpec(8.0, 30.0)
DEFAULT_BANK = (
    BandSpec(8.0, 12.0),
    BandSpec(12.0, 16.0),
    BandSpec(16.0, 20.0),
    BandSpec(20.0, 24.0),
    BandSpec(24.0, 28.0),
    BandSpec(28.0, 35.0),
)


def bandpass(rec: Recording, band: BandSpec = MI_BAND) -> Recording:
    """Filter every channel forward-only, so output sample t depends on inputs <= t."""
    sos = band.sos(rec.sample_rate_hz)
    return rec.replace(samples=kernels.sosfilt(sos, rec.samples))


def filter_bank(rec: Recording, bands=DEFAULT_BANK) -> list[Recording]:
    bands = list(bands)
    if not bands:
        raise ParameterError("filter bank needs at least one band")
    for b in bands:
        b.check(rec.sample_rate_hz)
    return [bandpass(rec, b) for b in bands]


def stack_bands(recs: list[Recording]) -> Recording:
    """Concatenate band-filtered copies of one recording along the channel axis.

    Channel ``c`` of band ``b`` lands at row ``b * C + c``.
    """
    first = recs[0]
    names = [f"{ch}@b{b}" for b in range(len(recs)) for ch in first.channel_names]
    return first.replace(samples=np.concatenate([r.samples for r in recs]), channel_names=names)


def standardize_channels(win: WindowSet) -> WindowSet:
    """Zero mean, unit population std for every channel of every window.

    Constant channels become all-zero.
    """
    x = win.windows
    if x.shape[2] < 2:
        raise ParameterError("standardization needs at least 2 samples per window")
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    std = np.sqrt((centered ** 2).mean(axis=-1, keepdims=True))
    flat = std <= 8 * np.finfo(float).eps * np.maximum(np.abs(mean), 1.0)
    out = np.where(flat, 0.0, centered / np.where(flat, 1.0, std))
    return WindowSet(windows=out, labels=win.labels, onsets=win.onsets, session_ids=win.session_ids,
                     class_names=win.class_names, window_len_samples=win.window_len_samples,
                     step_samples=win.step_samples, sample_rate_hz=win.sample_rate_hz,
                     n_skipped=win.n_skipped)
