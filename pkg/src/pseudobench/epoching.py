"""Idle-state injection, sliding-window extraction and cue-locked epoching.

A pseudo-online dataset is built in two steps: :func:`inject_idle` fills every
uncued span with a ``"nothing"`` event so that the events tile the recording,
then :func:`slide_windows` cuts fixed-length overlapping windows and labels each
one from the (at most two) events it covers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import NOTHING, EventSpan, Recording, WindowSet
from .errors import ParameterError, ValidationError

log = logging.getLogger(__name__)

RULES = {0: "single", 1: "first_majority", 2: "tie_later", 3: "later_majority"}


@dataclass(frozen=True)
class WindowConfig:
    window_seconds: float = 2.0
    overlap_fraction: float = 0.5

    def __post_init__(self):
        if not self.window_seconds > 0:
            raise ParameterError(f"window_seconds must be positive, got {self.window_seconds}")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ParameterError(f"overlap_fraction must lie in [0, 1), got {self.overlap_fraction}")

    def window_samples(self, sample_rate_hz: float) -> int:
        w = int(round(self.window_seconds * sample_rate_hz))
        if w < 1:
            raise ParameterError("window shorter than one sample")
        return w

    def step_samples(self, sample_rate_hz: float) -> int:
        w = self.window_samples(sample_rate_hz)
        return max(1, int(round(w * (1.0 - self.overlap_fraction))))


def inject_idle(rec: Recording) -> Recording:
    """Add ``"nothing"`` events over the complement of the cue events in ``[0, L)``."""
    if any(e.label == NOTHING for e in rec.events):
        raise ValidationError(f"recording already contains {NOTHING!r} events (double injection?)")
    out = []
    cursor = 0
    for ev in rec.events:
        if ev.onset_sample > cursor:
            out.append(EventSpan(cursor, ev.onset_sample - cursor, NOTHING))
        out.append(ev)
        cursor = ev.end_sample
    if cursor < rec.n_samples:
        out.append(EventSpan(cursor, rec.n_samples - cursor, NOTHING))
    return rec.replace(events=out)


def _tiling_starts(events, n_samples) -> np.ndarray:
    cursor = 0
    for ev in events:
        if ev.onset_sample != cursor:
            raise ValidationError(
                f"events do not tile the recording: gap or overlap at sample {cursor}")
        cursor = ev.end_sample
    if cursor != n_samples or not events:
        raise ValidationError("events do not tile the recording up to its last sample")
    return np.array([e.onset_sample for e in events], dtype=np.int64)


def label_mixed_window(onset: int, w: int, events) -> str:
    """Label of the window ``[onset, onset + w)`` over tiled events.

    When the window straddles two events, the first one wins only if it covers
    strictly more samples; a tie goes to the later event.
    """
    events = list(events)
    starts = np.array([e.onset_sample for e in events], dtype=np.int64)
    n_samples = events[-1].end_sample
    if onset < 0 or onset + w > n_samples:
        raise ParameterError("window lies outside the tiled event axis")
    idx, _ = kernels.window_events(np.array([onset]), w, starts, n_samples)
    if idx[0] < 0:
        raise ValidationError("window too long for task granularity: it spans three or more events")
    return events[idx[0]].label


def _window_onsets(n_samples: int, w: int, s: int) -> np.ndarray:
    if w > n_samples:
        raise ParameterError(f"window of {w} samples exceeds recording length {n_samples}")
    n = (n_samples - w) // s + 1
    return np.arange(n, dtype=np.int64) * s


def resolve_windows(rec: Recording, cfg: WindowConfig):
    """Onsets, event indices and rule codes for all sliding windows of a tiled recording."""
    w = cfg.window_samples(rec.sample_rate_hz)
    s = cfg.step_samples(rec.sample_rate_hz)
    onsets = _window_onsets(rec.n_samples, w, s)
    starts = _tiling_starts(rec.events, rec.n_samples)
    idx, rule = kernels.window_events(onsets, w, starts, rec.n_samples)
    if np.any(idx < 0):
        bad = int(onsets[np.argmax(idx < 0)])
        raise ValidationError(
            f"window too long for task granularity: window at sample {bad} spans three or more events")
    return onsets, idx, rule


def slide_windows(rec: Recording, cfg: WindowConfig = WindowConfig()) -> WindowSet:
    """Cut overlapping windows from an idle-injected recording.

    Windows start at 0, s, 2s, ... and are dropped once they would run past
    the end of the recording. The window tensor is a read-only strided view of
    the recording samples.
    """
    w = cfg.window_samples(rec.sample_rate_hz)
    s = cfg.step_samples(rec.sample_rate_hz)
    onsets, idx, _ = resolve_windows(rec, cfg)
    labels = np.array([rec.events[i].label for i in idx], dtype=object)
    view = np.lib.stride_tricks.sliding_window_view(rec.samples, w, axis=1)[:, ::s, :]
    windows = view[:, : len(onsets), :].transpose(1, 0, 2)
    return WindowSet(windows=windows, labels=labels, onsets=onsets,
                     session_ids=np.full(len(onsets), rec.session_id, dtype=object),
                     class_names=tuple(sorted(set(labels.tolist()))), window_len_samples=w,
                     step_samples=s, sample_rate_hz=rec.sample_rate_hz)


def epoch_offline(rec: Recording, cfg: WindowConfig = WindowConfig()) -> WindowSet:
    """One window per cue, starting at the cue onset; cues shorter than the window are skipped."""
    w = cfg.window_samples(rec.sample_rate_hz)
    cues = [e for e in rec.events if e.label != NOTHING]
    usable = [e for e in cues if e.duration_samples >= w]
    skipped = len(cues) - len(usable)
    if skipped:
        log.warning("skipped %d cue(s) shorter than the %d-sample window", skipped, w)
    if not usable:
        raise ValidationError("no cue is long enough for offline epoching")
    onsets = np.array([e.onset_sample for e in usable], dtype=np.int64)
    windows = np.stack([rec.samples[:, o:o + w] for o in onsets])
    labels = np.array([e.label for e in usable], dtype=object)
    return WindowSet(windows=windows, labels=labels, onsets=onsets,
                     session_ids=np.full(len(onsets), rec.session_id, dtype=object),
                     class_names=tuple(sorted(set(labels.tolist()))), window_len_samples=w,
                     step_samples=w, sample_rate_hz=rec.sample_rate_hz, n_skipped=skipped)
