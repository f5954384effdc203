import numpy as np
import pytest

from pseudobench import kernels
from pseudobench.core import EventSpan, Recording

BACKENDS = [kernels.numpy_backend] + ([kernels.numba_backend] if kernels.numba_backend else [])


@pytest.fixture(params=BACKENDS, ids=lambda b: b.__name__.rsplit("_", 1)[-1])
def backend(request):
    return request.param


def random_cues(rng, n_samples, max_cues=6, min_len=1, labels=("left", "right", "feet")):
    """Sorted, non-overlapping cue spans at random positions."""
    n = rng.integers(0, max_cues + 1)
    cuts = np.sort(rng.choice(np.arange(1, n_samples), size=min(2 * n, n_samples - 1), replace=False))
    events = []
    for a, b in zip(cuts[::2], cuts[1::2]):
        if b - a >= min_len:
            events.append(EventSpan(int(a), int(b - a), str(rng.choice(labels))))
    return events


def make_recording(rng, n_channels=3, n_samples=1000, rate=250.0, events=None, session="1", subject="01"):
    if events is None:
        events = random_cues(rng, n_samples)
    return Recording(subject_id=subject, session_id=session, sample_rate_hz=rate,
                     channel_names=[f"c{i}" for i in range(n_channels)],
                     samples=rng.standard_normal((n_channels, n_samples)), events=events)


def random_spd(rng, d, cond=10.0):
    """Random SPD matrix with eigenvalues log-uniform in [1, cond]."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    vals = np.exp(rng.uniform(0.0, np.log(cond), d))
    return (q * vals) @ q.T


def planted_csp_windows(rng, n_channels=8, ratio=10.0, n_per_class=40, w=250):
    """Two-class windows: class "a" has variance ``ratio`` along a random unit direction."""
    u = rng.standard_normal(n_channels)
    u /= np.linalg.norm(u)
    mix_a = np.eye(n_channels) + (np.sqrt(ratio) - 1.0) * np.outer(u, u)
    za = rng.standard_normal((n_per_class, n_channels, w))
    zb = rng.standard_normal((n_per_class, n_channels, w))
    windows = np.concatenate([np.einsum("ij,njt->nit", mix_a, za), zb])
    labels = np.array(["a"] * n_per_class + ["b"] * n_per_class)
    return windows, labels, u


# ------------------------------------------------ acceptance summary lines

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" in report.nodeid and name.startswith("test_criterion_"):
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[2])):
        number, title = name.split("_")[2], " ".join(name.split("_")[3:])
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {int(number):2d} {verdict}  {title}")
