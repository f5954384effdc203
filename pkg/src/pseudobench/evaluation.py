"""Within-session and cross-session evaluation in pseudo-online and offline modes."""

from __future__ import annotations

import logging
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classify import Pipeline, grid_search
from .core import EvalRecord, Recording, SkipRecord, WindowSet
from .epoching import WindowConfig, epoch_offline, inject_idle, slide_windows
from .errors import DegenerateSplitError, ParameterError, ProtocolError, ValidationError
from .metrics import confusion, score_all
from .preprocess import DEFAULT_BANK, MI_BAND, BandSpec, bandpass, filter_bank, stack_bands

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation settings.

    ``t_symbol_seconds`` defaults to the window step in pseudo-online mode
    (one decision per step) and to the window length in offline mode.
    """

    mode: str = "pseudo_online"
    protocol: str = "within_session"
    cv_style: str = "nested"
    train_fraction: float = 0.8
    inner_folds: int = 5
    window: WindowConfig = field(default_factory=WindowConfig)
    band: BandSpec = MI_BAND
    bank: tuple = DEFAULT_BANK
    t_symbol_seconds: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("pseudo_online", "offline"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.protocol not in ("within_session", "cross_session"):
            raise ParameterError(f"unknown protocol {self.protocol!r}")
        if self.cv_style not in ("nested", "flat"):
            raise ParameterError(f"unknown cv_style {self.cv_style!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ParameterError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.inner_folds < 2:
            raise ParameterError("inner_folds must be >= 2")
        if self.t_symbol_seconds is not None and not self.t_symbol_seconds > 0:
            raise ParameterError("t_symbol_seconds must be positive")

    def symbol_seconds(self, sample_rate_hz: float) -> float:
        if self.t_symbol_seconds is not None:
            return self.t_symbol_seconds
        if self.mode == "pseudo_online":
            return self.window.step_samples(sample_rate_hz) / sample_rate_hz
        return self.window.window_samples(sample_rate_hz) / sample_rate_hz

    @property
    def protocol_tag(self) -> str:
        if self.protocol == "within_session":
            return "within_session"
        return f"cross_session_{self.cv_style}"


def recording_windows(rec: Recording, input_kind: str, cfg: EvalConfig) -> WindowSet:
    """Filter the continuous recording, then window it according to ``cfg.mode``."""
    if input_kind == "band":
        filtered = bandpass(rec, cfg.band)
    elif input_kind == "filterbank":
        filtered = stack_bands(filter_bank(rec, cfg.bank))
    else:
        raise ParameterError(f"unknown pipeline input {input_kind!r}")
    if cfg.mode == "pseudo_online":
        return slide_windows(inject_idle(filtered), cfg.window)
    return epoch_offline(filtered, cfg.window)


def session_windows(recs, input_kind: str, cfg: EvalConfig) -> WindowSet:
    """Windows of all runs of one session, onsets offset so they stay increasing."""
    recs = list(recs)
    if not recs:
        raise ValidationError("no recordings for session")
    if len({r.session_id for r in recs}) != 1:
        raise ValidationError("recordings belong to different sessions")
    parts = []
    offset = 0
    for r in recs:
        ws = recording_windows(r, input_kind, cfg)
        if offset:
            ws = WindowSet(windows=ws.windows, labels=ws.labels, onsets=ws.onsets + offset,
                           session_ids=ws.session_ids, class_names=ws.class_names,
                           window_len_samples=ws.window_len_samples, step_samples=ws.step_samples,
                           sample_rate_hz=ws.sample_rate_hz, n_skipped=ws.n_skipped)
        parts.append(ws)
        offset += r.n_samples
    return parts[0] if len(parts) == 1 else WindowSet.concat(parts)


def causal_split(ws: WindowSet, train_fraction: float = 0.8) -> tuple[WindowSet, WindowSet]:
    """First ``ceil(train_fraction * n)`` windows by onset for training, the rest for testing."""
    order = np.argsort(ws.onsets, kind="stable")
    n = len(order)
    n_train = math.ceil(train_fraction * n - 1e-9)
    return ws.subset(order[:n_train]), ws.subset(order[n_train:])


def _check_split(train: WindowSet, test: WindowSet) -> None:
    if len(test) == 0:
        raise DegenerateSplitError("empty test set")
    if len(set(test.labels.tolist())) < 2:
        raise DegenerateSplitError(f"test set has a single class ({test.labels[0]!r})")
    if len(set(train.labels.tolist())) < 2:
        raise DegenerateSplitError("training set has a single class")


def _fit_score(pipeline: Pipeline, params: dict, train: WindowSet, test: WindowSet,
               class_names, cfg: EvalConfig, ids: dict) -> EvalRecord:
    t0 = time.perf_counter()
    chain = pipeline.build(params).fit(train.windows, train.labels)
    t1 = time.perf_counter()
    pred = chain.predict(test.windows)
    t2 = time.perf_counter()
    scores = score_all(confusion(test.labels, pred, class_names), cfg.symbol_seconds(test.sample_rate_hz))
    return EvalRecord(pipeline_id=pipeline.id, mode=cfg.mode, protocol=cfg.protocol_tag,
                      nmcc=scores.nmcc, accuracy=scores.accuracy, kappa=scores.kappa,
                      itr_bits_per_min=scores.itr_bits_per_min, n_train=len(train), n_test=len(test),
                      fit_seconds=t1 - t0, score_seconds=t2 - t1, **ids)


def within_session(recs, pipeline: Pipeline, cfg: EvalConfig, dataset_id: str = "",
                   windows: WindowSet | None = None) -> EvalRecord:
    """Train on the causal head of one session, test on its tail.

    ``recs`` is a recording or the list of runs of one subject-session.
    Hyperparameters are tuned on the training part only.
    """
    if isinstance(recs, Recording):
        recs = [recs]
    ws = windows if windows is not None else session_windows(recs, pipeline.input, cfg)
    train, test = causal_split(ws, cfg.train_fraction)
    _check_split(train, test)
    params = grid_search(pipeline, train, cfg.inner_folds)
    ids = dict(dataset_id=dataset_id, subject_id=recs[0].subject_id, session_id=recs[0].session_id)
    return _fit_score(pipeline, params, train, test, ws.class_names, cfg, ids)


def _group_sessions(recs) -> dict:
    groups = defaultdict(list)
    for r in recs:
        groups[r.session_id].append(r)
    return dict(sorted(groups.items()))


def cross_session(recs, pipeline: Pipeline, cfg: EvalConfig, dataset_id: str = "",
                  windows: dict | None = None, skips: list | None = None) -> list[EvalRecord]:
    """Leave-one-session-out over all recordings of one subject.

    Nested style tunes inside every training fold; flat style tunes once on
    the concatenation of all sessions and reuses that choice. When ``skips``
    is a list, failing folds are appended to it as :class:`SkipRecord` rather
    than raised.
    """
    sessions = _group_sessions(recs)
    if len({r.subject_id for r in recs}) > 1:
        raise ProtocolError("cross-session evaluation takes recordings of a single subject")
    if len(sessions) < 2:
        raise ProtocolError(f"cross-session evaluation needs >= 2 sessions, got {len(sessions)}")
    subject = next(iter(sessions.values()))[0].subject_id
    if windows is None:
        windows = {s: session_windows(rs, pipeline.input, cfg) for s, rs in sessions.items()}
    flat_params = None
    if cfg.cv_style == "flat":
        flat_params = grid_search(pipeline, WindowSet.concat([windows[s] for s in sessions]),
                                  cfg.inner_folds)
    out = []
    for held in sessions:
        ids = dict(dataset_id=dataset_id, subject_id=subject, session_id=held)
        try:
            train = WindowSet.concat([windows[s] for s in sessions if s != held])
            test = windows[held]
            _check_split(train, test)
            params = flat_params if flat_params is not None else grid_search(
                pipeline, train, cfg.inner_folds)
            class_names = sorted(set(train.class_names) | set(test.class_names))
            out.append(_fit_score(pipeline, params, train, test, class_names, cfg, ids))
        except Exception as exc:
            if skips is None:
                raise
            skips.append(SkipRecord(mode=cfg.mode, protocol=cfg.protocol_tag, pipeline_id=pipeline.id,
                                    reason=f"{type(exc).__name__}: {exc}", **ids))
    return out


@dataclass
class BenchmarkResult:
    records: list = field(default_factory=list)
    skips: list = field(default_factory=list)


def _subject_task(args):
    dataset_id, recs, pipelines, cfg = args
    res = BenchmarkResult()
    sessions = _group_sessions(recs)
    subject = recs[0].subject_id
    cache = {}

    def windows_for(session, kind):
        if (session, kind) not in cache:
            cache[session, kind] = session_windows(sessions[session], kind, cfg)
        return cache[session, kind]

    def skip(session, pipe, exc):
        reason = f"{type(exc).__name__}: {exc}"
        log.warning("skip %s/%s/%s/%s: %s", dataset_id, subject, session, pipe.id, reason)
        res.skips.append(SkipRecord(dataset_id, subject, session, pipe.id, cfg.mode,
                                    cfg.protocol_tag, reason))

    if cfg.protocol == "within_session":
        for session in sessions:
            for pipe in pipelines:
                try:
                    res.records.append(within_session(sessions[session], pipe, cfg, dataset_id,
                                                      windows=windows_for(session, pipe.input)))
                except Exception as exc:
                    skip(session, pipe, exc)
    else:
        for pipe in pipelines:
            try:
                ws = {s: windows_for(s, pipe.input) for s in sessions}
                res.records.extend(cross_session(recs, pipe, cfg, dataset_id, windows=ws,
                                                 skips=res.skips))
            except Exception as exc:
                skip("*", pipe, exc)
        rank = {p.id: i for i, p in enumerate(pipelines)}
        res.records.sort(key=lambda r: (r.session_id, rank[r.pipeline_id]))
        res.skips.sort(key=lambda r: (r.session_id, rank[r.pipeline_id]))
    return res


def run_benchmark(datasets: dict, pipelines, cfg: EvalConfig, jobs: int = 1) -> BenchmarkResult:
    """Evaluate every (dataset, subject, session, pipeline) combination.

    ``datasets`` maps a dataset id to its list of recordings. Subjects run as
    independent tasks (in parallel when ``jobs > 1``); the merged output order
    is dataset, subject, session, pipeline regardless of ``jobs``. Failing
    tasks become skip entries instead of aborting the sweep.
    """
    pipelines = list(pipelines)
    if not datasets or not pipelines:
        raise ParameterError("run_benchmark needs at least one dataset and one pipeline")
    tasks = []
    for dataset_id, recs in datasets.items():
        by_subject = defaultdict(list)
        for r in recs:
            by_subject[r.subject_id].append(r)
        for subject in sorted(by_subject):
            tasks.append((dataset_id, by_subject[subject], pipelines, cfg))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_subject_task, tasks))
    else:
        parts = [_subject_task(t) for t in tasks]
    out = BenchmarkResult()
    for p in parts:
        out.records.extend(p.records)
        out.skips.extend(p.skips)
    return out
