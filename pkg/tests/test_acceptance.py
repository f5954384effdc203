"""End-to-end acceptance checks, one test per criterion.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import json
import math
import time
from collections import defaultdict

import numpy as np

from pseudobench import evaluation, io
from pseudobench.classify import get_pipelines, registry
from pseudobench.cli import main
from pseudobench.core import NOTHING, ConfusionMatrix, EvalRecord, EventSpan, Recording
from pseudobench.epoching import WindowConfig, epoch_offline, inject_idle, label_mixed_window, slide_windows
from pseudobench.evaluation import EvalConfig, cross_session, run_benchmark, within_session
from pseudobench.metrics import accuracy, binary_mcc, itr, mcc, mutual_information, nmcc
from pseudobench.spd import csp_fit, riemannian_distance, riemannian_mean, spd_expm, spd_logm
from pseudobench.stats import comparison_matrix, meta_combine, wilcoxon_exact, wilcoxon_normal, wilcoxon_one_tailed
from pseudobench.synth import SynthSpec, generate

from conftest import planted_csp_windows, random_cues, random_spd


def cm(counts):
    counts = np.asarray(counts)
    return ConfusionMatrix(counts, tuple(f"k{i}" for i in range(len(counts))))


def blank(n_samples, events=(), rate=100.0):
    return Recording("01", "1", rate, ["c0"], np.zeros((1, n_samples)), events)


def per_sample_labels(onsets, w, events):
    """Window labels from a per-sample ownership array; ties go to the later span."""
    owner = np.concatenate([np.full(e.duration_samples, i) for i, e in enumerate(events)])
    out = []
    for o in onsets:
        ids, counts = np.unique(owner[o:o + w], return_counts=True)
        if len(ids) == 1:
            out.append(events[ids[0]].label)
        else:
            out.append(events[ids[0]].label if counts[0] > counts[1] else events[ids[1]].label)
    return out


def test_criterion_01_metric_exactness():
    t0 = time.perf_counter()
    assert abs(mcc(cm([[4, 1], [2, 3]])) - 10 / math.sqrt(600)) < 1e-12
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        tp, fn, fp, tn = (int(v) for v in rng.integers(0, 100, size=4))
        if tp + fn + fp + tn == 0:
            continue
        assert abs(mcc(cm([[tp, fn], [fp, tn]])) - binary_mcc(tp, tn, fp, fn)) < 1e-12
    assert nmcc(cm([[5, 5], [5, 5]])) == 0.5
    assert time.perf_counter() - t0 < 1.0


def test_criterion_02_imbalance_majority_predictor():
    c = cm([[80, 0], [20, 0]])
    assert accuracy(c) == 0.8
    assert nmcc(c) == 0.5


def test_criterion_03_itr_anchors():
    c = cm(np.eye(4, dtype=int) * 50)
    assert abs(mutual_information(c) - 2.0) < 1e-12
    assert abs(itr(c, 1.0) - 120.0) < 1e-9
    assert abs(itr(c, 2.0) - 60.0) < 1e-9


def test_criterion_04_windowing_arithmetic():
    ws = slide_windows(inject_idle(blank(2500)), WindowConfig(5.0, 0.5))
    assert (ws.window_len_samples, ws.step_samples, len(ws)) == (500, 250, 9)

    rng = np.random.default_rng(4)
    mismatches = n_tilings = n_windows = 0
    while n_tilings < 1000:
        n = int(rng.integers(100, 500))
        w = int(rng.integers(10, 60))
        step = int(rng.integers(1, w + 1))
        rec = inject_idle(blank(n, random_cues(rng, n, max_cues=4)))
        if min(e.duration_samples for e in rec.events) < w:
            continue  # a window would touch three spans
        out = slide_windows(rec, WindowConfig(w / 100.0, 1 - step / w))
        oracle = per_sample_labels(out.onsets, w, rec.events)
        mismatches += sum(a != b for a, b in zip(out.labels.tolist(), oracle))
        n_tilings += 1
        n_windows += len(out)
    assert mismatches == 0 and n_windows > 10_000

    tie = [EventSpan(0, 50, NOTHING), EventSpan(50, 50, "left_hand")]
    assert label_mixed_window(0, 100, tie) == "left_hand"


def test_criterion_05_idle_injection_tiles():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(2, 2000))
        rec = inject_idle(blank(n, random_cues(rng, n, max_cues=10)))
        cover = np.zeros(n, dtype=int)
        for e in rec.events:
            cover[e.onset_sample:e.end_sample] += 1
        assert np.all(cover == 1)


def test_criterion_06_spd_suite():
    rng = np.random.default_rng(6)
    for _ in range(100):
        s = random_spd(rng, int(rng.integers(2, 9)), cond=1e3)
        assert np.linalg.norm(spd_expm(spd_logm(s)) - s) / np.linalg.norm(s) < 1e-9
    for _ in range(100):
        a, b = random_spd(rng, 6, 50), random_spd(rng, 6, 50)
        g = rng.standard_normal((6, 6)) + 3 * np.eye(6)
        assert abs(riemannian_distance(g @ a @ g.T, g @ b @ g.T) - riemannian_distance(a, b)) < 1e-8
    d1, d2 = np.diag([1.0, 4.0, 2.0]), np.diag([9.0, 1.0, 8.0])
    assert np.abs(riemannian_mean(np.stack([d1, d2])) - np.sqrt(d1 @ d2)).max() < 1e-9
    mats = np.stack([random_spd(rng, 5, 20) for _ in range(8)])
    g0 = riemannian_mean(mats)
    for _ in range(10):
        gp = riemannian_mean(mats[rng.permutation(8)])
        assert np.linalg.norm(gp - g0) / np.linalg.norm(g0) < 1e-8


def test_criterion_07_csp_recovery():
    for seed in range(10):
        windows, labels, u = planted_csp_windows(np.random.default_rng(seed), n_channels=8, ratio=10.0)
        lead = csp_fit(windows, labels, n_filters=4).patterns[:, 0]
        assert abs(np.corrcoef(lead, u)[0, 1]) >= 0.95
        assert abs(lead @ u) / np.linalg.norm(lead) >= 0.95


def test_criterion_08_end_to_end_pseudo_online():
    spec = dict(n_channels=8, n_trials_per_class=40, classes=("left_hand", "right_hand"))
    t0 = time.perf_counter()
    res = run_benchmark({"sep5": generate(SynthSpec(n_subjects=2, separability=5.0, seed=11, **spec))},
                        registry(), EvalConfig())
    elapsed = time.perf_counter() - t0
    assert not res.skips and len(res.records) == 12
    for r in res.records:
        if r.pipeline_id in ("mdm", "csp_lda"):
            assert r.nmcc >= 0.85, (r.subject_id, r.pipeline_id, r.nmcc)
    assert elapsed < 300.0

    null = run_benchmark({"sep0": generate(SynthSpec(n_subjects=4, separability=0.0, seed=12, **spec))},
                         get_pipelines(["mdm", "csp_lda"]), EvalConfig())
    by_pipe = defaultdict(list)
    for r in null.records:
        by_pipe[r.pipeline_id].append((r.nmcc, r.n_test))
    for rows in by_pipe.values():
        assert sum(n for _, n in rows) >= 200
        assert abs(np.mean([v for v, _ in rows]) - 0.5) <= 0.07


def test_criterion_09_protocol_audits(monkeypatch):
    fitted = []
    real = evaluation._fit_score

    def spy(pipeline, params, train, test, *a, **kw):
        fitted.append((train, test))
        return real(pipeline, params, train, test, *a, **kw)

    monkeypatch.setattr(evaluation, "_fit_score", spy)
    small = dict(n_trials_per_class=8, trial_seconds=3.0, gap_seconds=2.0, n_channels=6)
    one = generate(SynthSpec(seed=21, **small))
    for mode in ("pseudo_online", "offline"):
        for pipe in get_pipelines(["mdm", "csp_lda", "tang_lda"]):
            within_session(one, pipe, EvalConfig(mode=mode))
    assert len(fitted) == 6
    assert all(tr.onsets.max() < te.onsets.min() for tr, te in fitted)

    fitted.clear()
    multi = generate(SynthSpec(seed=22, n_sessions=3, **small))
    for style in ("nested", "flat"):
        cross_session(multi, get_pipelines(["csp_lda"])[0], EvalConfig(protocol="cross_session", cv_style=style))
    assert len(fitted) == 6
    assert all(not set(tr.session_ids.tolist()) & set(te.session_ids.tolist()) for tr, te in fitted)
    monkeypatch.undo()

    runs = [run_benchmark({"d": generate(SynthSpec(n_subjects=2, seed=23, **small))},
                          get_pipelines(["mdm", "csp_lda", "ar_lda"]), EvalConfig(seed=23))
            for _ in range(2)]
    a, b = ([r.scores() for r in run.records] for run in runs)
    assert a == b and len(a) == 6


def test_criterion_10_statistics():
    assert wilcoxon_one_tailed([0.1, 0.2, 0.3, 0.4, 0.5]) == 0.03125
    records = []
    for s in range(9):
        for pipe, v in (("better", 0.8 + 0.01 * s), ("worse", 0.6 + 0.005 * s)):
            records.append(EvalRecord("d", f"{s:02d}", "1", pipe, "pseudo_online", "within_session",
                                      v, v, 2 * v - 1, 0.0, 10, 5))
    names, grid = comparison_matrix(records)
    assert grid[names.index("better")][names.index("worse")].p_one_tailed == 2.0 ** -9
    rng = np.random.default_rng(10)
    for _ in range(100):
        d = rng.standard_normal(12) + rng.uniform(-1, 1)
        assert abs(wilcoxon_exact(d) - wilcoxon_normal(d)) < 0.02
    for p in np.linspace(0.001, 0.999, 50):
        assert abs(meta_combine([p], [9])[1] - p) < 1e-9


def test_criterion_11_offline_vs_pseudo_online(tmp_path):
    rec = generate(SynthSpec(seed=31, n_trials_per_class=6, trial_seconds=3.0, gap_seconds=2.0))[0]
    online = slide_windows(inject_idle(rec), WindowConfig())
    offline = epoch_offline(rec, WindowConfig())
    assert set(offline.class_names) < set(online.class_names)
    assert set(online.class_names) - set(offline.class_names) == {NOTHING}

    synth = {"n_subjects": 2, "n_trials_per_class": 6, "trial_seconds": 3.0, "gap_seconds": 2.0,
             "n_channels": 6}
    paths = []
    for mode in ("offline", "pseudo_online"):
        cfg = tmp_path / f"{mode}.json"
        cfg.write_text(json.dumps({"datasets": [{"id": "toy", "synth": synth}], "pipelines": ["mdm", "csp_lda"],
                                   "mode": mode}))
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / mode)]) == 0
        paths.append(str(tmp_path / mode / "results.csv"))
    assert main(["report", *paths, "--out", str(tmp_path / "rep"), "--format", "json"]) == 0
    rows = json.loads((tmp_path / "rep" / "summary.json").read_text())
    assert len(rows) == 2
    for row in rows:
        assert row["offline_n"] == 2 and row["pseudo_online_n"] == 2
        assert row["offline_mean"] is not None and row["pseudo_online_mean"] is not None


def test_criterion_12_container_format(tmp_path):
    rng = np.random.default_rng(12)
    for i in range(100):
        c, n = int(rng.integers(1, 6)), int(rng.integers(1, 500))
        samples = rng.standard_normal((c, n)).astype(np.float32).astype(np.float64)
        rec = Recording(f"{i:02d}", "1", 250.0, [f"c{k}" for k in range(c)], samples, random_cues(rng, n))
        io.write_recording(rec, tmp_path / f"r{i}.json")
        back = io.read_recording(tmp_path / f"r{i}.json")
        assert back.samples.tobytes() == rec.samples.tobytes() and back.events == rec.events
    one = Recording("01", "1", 1.0, ["c0"], np.ones((1, 1)), ())
    io.write_recording(one, tmp_path / "one.json")
    assert (tmp_path / "one.bin").read_bytes() == bytes([0x00, 0x00, 0x80, 0x3F])
