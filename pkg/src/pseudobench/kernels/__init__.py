"""Hot loops with a numba path and a numpy path.

The numba path is used when numba imports and ``PSEUDOBENCH_DISABLE_NUMBA`` is
unset (or ``0``). Both paths are importable directly as ``numba_backend`` and
``numpy_backend`` for cross-checking and benchmarking.
"""

import os

import numpy as np

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # numba missing
    numba_backend = None

NUMBA_DISABLED = os.environ.get("PSEUDOBENCH_DISABLE_NUMBA", "0") not in ("", "0")
USE_NUMBA = numba_backend is not None and not NUMBA_DISABLED
backend = numba_backend if USE_NUMBA else numpy_backend

__all__ = ["USE_NUMBA", "autocorr", "backend", "numba_backend", "numpy_backend",
           "scatter", "sosfilt", "wilcoxon_count_ge", "window_events"]


def sosfilt(sos, x):
    """Causal cascade of second-order sections along the last axis of a 2-D array."""
    return backend.sosfilt(np.ascontiguousarray(sos, dtype=np.float64),
                           np.ascontiguousarray(x, dtype=np.float64))


def window_events(onsets, w, starts, n_samples):
    """Event index and resolution rule for each window over a tiled event axis.

    Rule codes: 0 single event, 1 first event wins, 2 tie goes to the later
    event, 3 later event wins, -1 window touches three or more events.
    """
    return backend.window_events(np.asarray(onsets, dtype=np.int64), int(w),
                                 np.asarray(starts, dtype=np.int64), int(n_samples))


def wilcoxon_count_ge(ranks2, target):
    """Number of sign assignments whose positive doubled-rank sum is >= target."""
    return int(backend.wilcoxon_count_ge(np.asarray(ranks2, dtype=np.int64), int(target)))


def scatter(x):
    """Mean-centered scatter ``Xc Xc^T / (w - 1)`` of each window in an (n, C, w) stack."""
    return backend.scatter(np.asarray(x, dtype=np.float64))


def autocorr(x, max_lag):
    """Biased autocorrelation ``sum_t x_t x_{t+k} / w`` for lags 0..max_lag, per row."""
    return backend.autocorr(np.ascontiguousarray(x, dtype=np.float64), int(max_lag))
