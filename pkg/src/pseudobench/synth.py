"""Seeded synthetic motor-imagery-like recordings with planted class covariances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from . import kernels
from .core import NOTHING, EventSpan, Recording
from .errors import ParameterError
from .spd import spd_sqrtm


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int = 1
    n_sessions: int = 1
    n_channels: int = 8
    n_trials_per_class: int = 40
    classes: tuple = ("left_hand", "right_hand")
    sample_rate_hz: float = 250.0
    trial_seconds: float = 4.0
    gap_seconds: float = 3.0
    separability: float = 5.0
    drift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        for name in ("n_subjects", "n_sessions", "n_channels", "n_trials_per_class"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")
        if not self.classes:
            raise ParameterError("classes must not be empty")
        if len(set(self.classes)) != len(self.classes) or not all(
                isinstance(c, str) and c for c in self.classes):
            raise ParameterError("classes must be distinct non-empty strings")
        if NOTHING in self.classes:
            raise ParameterError(f"{NOTHING!r} is reserved for idle spans")
        if len(self.classes) > self.n_channels:
            raise ParameterError("need at least as many channels as classes for orthogonal directions")
        if not self.sample_rate_hz > 2 * 30.0:
            raise ParameterError("sample rate must exceed 60 Hz for the 8-30 Hz source band")
        for name in ("trial_seconds", "gap_seconds"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.separability < 0 or self.drift < 0:
            raise ParameterError("separability and drift must be non-negative")


SOURCE_BAND = (8.0, 30.0)


def class_directions(spec: SynthSpec, subject: int) -> np.ndarray:
    """Orthonormal columns ``u_k``, one per class, fixed by (seed, subject)."""
    rng = np.random.default_rng([spec.seed, subject, 0])
    q, _ = np.linalg.qr(rng.standard_normal((spec.n_channels, spec.n_channels)))
    return q[:, : len(spec.classes)]


def class_covariances(spec: SynthSpec, subject: int) -> dict:
    """Planted ``I + separability * u_k u_k^T`` per class (before session drift)."""
    u = class_directions(spec, subject)
    eye = np.eye(spec.n_channels)
    return {c: eye + spec.separability * np.outer(u[:, k], u[:, k]) for k, c in enumerate(spec.classes)}


def session_rotation(spec: SynthSpec, subject: int, session: int) -> np.ndarray:
    """``exp(drift * A)`` for a seeded skew-symmetric ``A``; identity at zero drift."""
    rng = np.random.default_rng([spec.seed, subject, session + 1, 1])
    g = rng.standard_normal((spec.n_channels, spec.n_channels))
    a = (g - g.T) / np.sqrt(2.0 * spec.n_channels)
    return linalg.expm(spec.drift * a)


def _band_noise(rng, n_channels, n_samples, rate):
    sos = signal.butter(4, SOURCE_BAND, btype="bandpass", fs=rate, output="sos")
    # unit output variance: scale by the energy of the impulse response
    impulse = np.zeros((1, int(rate * 20)))
    impulse[0, 0] = 1.0
    gain = np.sqrt((kernels.sosfilt(sos, impulse) ** 2).sum())
    return kernels.sosfilt(sos, rng.standard_normal((n_channels, n_samples))) / gain


def _session(spec: SynthSpec, subject: int, session: int, covs: dict) -> Recording:
    rate = spec.sample_rate_hz
    trial = int(round(spec.trial_seconds * rate))
    gap = int(round(spec.gap_seconds * rate))
    rng = np.random.default_rng([spec.seed, subject, session + 1, 2])
    order = np.repeat(np.arange(len(spec.classes)), spec.n_trials_per_class)
    rng.shuffle(order)
    n_samples = gap + len(order) * (trial + gap)

    rot = session_rotation(spec, subject, session)
    mixers = [spd_sqrtm(rot @ covs[c] @ rot.T) for c in spec.classes]
    z = _band_noise(rng, spec.n_channels, n_samples, rate)
    x = z.copy()  # gaps keep the identity covariance
    events = []
    onset = gap
    for k in order:
        x[:, onset:onset + trial] = mixers[k] @ z[:, onset:onset + trial]
        events.append(EventSpan(onset, trial, spec.classes[k]))
        onset += trial + gap
    return Recording(subject_id=f"{subject + 1:02d}", session_id=f"{session + 1}",
                     sample_rate_hz=rate, channel_names=[f"ch{c:02d}" for c in range(spec.n_channels)],
                     samples=x, events=events)


def generate(spec: SynthSpec) -> list[Recording]:
    """All recordings, subject-major then session, fully determined by ``spec``.

    Each session opens with a gap and alternates shuffled, class-balanced
    trials with gaps of identity covariance.
    """
    out = []
    for s in range(spec.n_subjects):
        covs = class_covariances(spec, s)
        for k in range(spec.n_sessions):
            out.append(_session(spec, s, k, covs))
    return out
