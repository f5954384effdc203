"""Domain types: recordings, event spans, window sets, confusion matrices and
evaluation records.

All containers are frozen dataclasses holding read-only arrays, so they can be
shared between parallel evaluation tasks without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Literal, Sequence

import numpy as np

from .errors import ValidationError

NOTHING = "nothing"

Mode = Literal["pseudo_online", "offline"]
Protocol = Literal["within_session", "cross_session_nested", "cross_session_flat"]
MODES = ("pseudo_online", "offline")
PROTOCOLS = ("within_session", "cross_session_nested", "cross_session_flat")


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EventSpan:
    """Labeled interval ``[onset_sample, onset_sample + duration_samples)``."""

    onset_sample: int
    duration_samples: int
    label: str

    def __post_init__(self):
        if int(self.onset_sample) != self.onset_sample or self.onset_sample < 0:
            raise ValidationError(f"onset_sample must be a non-negative integer, got {self.onset_sample!r}")
        if int(self.duration_samples) != self.duration_samples or self.duration_samples < 1:
            raise ValidationError(f"duration_samples must be a positive integer, got {self.duration_samples!r}")
        if not isinstance(self.label, str) or not self.label:
            raise ValidationError("event label must be a non-empty string")
        object.__setattr__(self, "onset_sample", int(self.onset_sample))
        object.__setattr__(self, "duration_samples", int(self.duration_samples))

    @property
    def end_sample(self) -> int:
        return self.onset_sample + self.duration_samples


@dataclass(frozen=True)
class Recording:
    """Continuous multichannel signal of one subject-session.

    ``samples`` has shape ``(n_channels, n_samples)`` and is stored as a
    read-only float64 array.
    """

    subject_id: str
    session_id: str
    sample_rate_hz: float
    channel_names: tuple[str, ...]
    samples: np.ndarray
    events: tuple[EventSpan, ...] = ()

    def __post_init__(self):
        samples = _frozen(self.samples)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "subject_id", str(self.subject_id))
        object.__setattr__(self, "session_id", str(self.session_id))

        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ValidationError(f"samples must be a non-empty C x L matrix, got shape {samples.shape}")
        if len(self.channel_names) != samples.shape[0]:
            raise ValidationError(
                f"{len(self.channel_names)} channel names for {samples.shape[0]} channels")
        if not (math.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValidationError(f"sample_rate_hz must be positive and finite, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain non-finite values")
        validate_events(self.events, samples.shape[1])

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def replace(self, **changes) -> "Recording":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return Recording(**kw)


def validate_events(events: Sequence[EventSpan], n_samples: int) -> None:
    """Check bounds, ordering and non-overlap of an event list."""
    prev_end = 0
    prev_onset = -1
    for ev in events:
        if ev.end_sample > n_samples:
            raise ValidationError(
                f"event {ev} ends at {ev.end_sample}, beyond recording length {n_samples}")
        if ev.onset_sample < prev_onset:
            raise ValidationError("events are not sorted by onset")
        if ev.onset_sample < prev_end:
            raise ValidationError(f"event {ev} overlaps the previous event (ends at {prev_end})")
        prev_onset = ev.onset_sample
        prev_end = ev.end_sample


@dataclass(frozen=True)
class WindowSet:
    """Windowed dataset.

    ``windows`` has shape ``(n, n_channels, window_len_samples)``. Labels,
    onsets and session ids are parallel arrays of length ``n``.
    ``n_skipped`` counts cues dropped by offline epoching.
    """

    windows: np.ndarray
    labels: np.ndarray
    onsets: np.ndarray
    session_ids: np.ndarray
    class_names: tuple[str, ...]
    window_len_samples: int
    step_samples: int
    sample_rate_hz: float
    n_skipped: int = 0

    def __post_init__(self):
        windows = np.asarray(self.windows, dtype=np.float64)
        if windows.flags.writeable:
            windows = windows.view()
            windows.setflags(write=False)
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "labels", _frozen(self.labels, dtype=object))
        object.__setattr__(self, "onsets", _frozen(self.onsets, dtype=np.int64))
        object.__setattr__(self, "session_ids", _frozen(self.session_ids, dtype=object))
        object.__setattr__(self, "class_names", tuple(self.class_names))

        n = windows.shape[0]
        if windows.ndim != 3:
            raise ValidationError(f"windows must be n x C x w, got shape {windows.shape}")
        if not (len(self.labels) == len(self.onsets) == len(self.session_ids) == n):
            raise ValidationError("labels, onsets and session_ids must match the window count")
        if windows.shape[2] != self.window_len_samples:
            raise ValidationError("window tensor length disagrees with window_len_samples")
        if not 1 <= self.step_samples <= max(self.window_len_samples, 1):
            raise ValidationError(f"step must satisfy 1 <= s <= w, got s={self.step_samples}")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValidationError("class_names must be distinct")
        unknown = set(self.labels.tolist()) - set(self.class_names)
        if unknown:
            raise ValidationError(f"labels {sorted(unknown)} missing from class_names")
        for sid in set(self.session_ids.tolist()):
            on = self.onsets[self.session_ids == sid]
            if np.any(np.diff(on) <= 0):
                raise ValidationError(f"onsets do not strictly increase within session {sid!r}")

    def __len__(self) -> int:
        return self.windows.shape[0]

    @property
    def n_channels(self) -> int:
        return self.windows.shape[1]

    def subset(self, idx) -> "WindowSet":
        """Windows selected by an index array or boolean mask, same class list."""
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return WindowSet(
            windows=self.windows[idx],
            labels=self.labels[idx],
            onsets=self.onsets[idx],
            session_ids=self.session_ids[idx],
            class_names=self.class_names,
            window_len_samples=self.window_len_samples,
            step_samples=self.step_samples,
            sample_rate_hz=self.sample_rate_hz,
        )

    @staticmethod
    def concat(parts: Sequence["WindowSet"]) -> "WindowSet":
        """Stack window sets in order; class lists are merged and sorted."""
        if not parts:
            raise ValidationError("cannot concatenate zero window sets")
        first = parts[0]
        for p in parts[1:]:
            if (p.window_len_samples, p.step_samples, p.sample_rate_hz) != (
                    first.window_len_samples, first.step_samples, first.sample_rate_hz):
                raise ValidationError("window sets differ in geometry or sample rate")
        classes = sorted(set().union(*(p.class_names for p in parts)))
        return WindowSet(
            windows=np.concatenate([p.windows for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            onsets=np.concatenate([p.onsets for p in parts]),
            session_ids=np.concatenate([p.session_ids for p in parts]),
            class_names=tuple(classes),
            window_len_samples=first.window_len_samples,
            step_samples=first.step_samples,
            sample_rate_hz=first.sample_rate_hz,
            n_skipped=sum(p.n_skipped for p in parts),
        )


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; rows are true classes, columns predicted classes."""

    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        counts = _frozen(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        k = len(self.class_names)
        if counts.shape != (k, k):
            raise ValidationError(f"counts shape {counts.shape} does not match {k} classes")
        if np.any(counts < 0):
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvalRecord:
    """One scored (dataset, subject, session, pipeline, mode) evaluation."""

    dataset_id: str
    subject_id: str
    session_id: str
    pipeline_id: str
    mode: Mode
    protocol: Protocol
    nmcc: float
    accuracy: float
    kappa: float
    itr_bits_per_min: float
    n_train: int
    n_test: int
    fit_seconds: float = 0.0
    score_seconds: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.protocol not in PROTOCOLS:
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        if not 0.0 <= self.nmcc <= 1.0:
            raise ValidationError(f"nmcc {self.nmcc} outside [0, 1]")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy {self.accuracy} outside [0, 1]")
        if not -1.0 <= self.kappa <= 1.0:
            raise ValidationError(f"kappa {self.kappa} outside [-1, 1]")
        if not self.itr_bits_per_min >= 0.0:
            raise ValidationError(f"itr {self.itr_bits_per_min} is negative")
        if self.n_test < 1 or self.n_train < 1:
            raise ValidationError("n_train and n_test must be positive")
        if self.fit_seconds < 0 or self.score_seconds < 0:
            raise ValidationError("timings must be non-negative")

    def scores(self) -> dict:
        """The deterministic part of the record (everything except timings)."""
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.pop("fit_seconds")
        d.pop("score_seconds")
        return d


@dataclass(frozen=True)
class SkipRecord:
    """An evaluation task that produced no score, with the reason."""

    dataset_id: str
    subject_id: str
    session_id: str
    pipeline_id: str
    mode: str
    protocol: str
    reason: str = field(default="")
