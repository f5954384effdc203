"""Vectorized fallbacks for the numba kernels."""

import numpy as np
from scipy import signal


def sosfilt(sos, x):
    # an IIR recursion cannot be vectorized over time; scipy's compiled loop stands in
    return signal.sosfilt(sos, x, axis=-1)


def window_events(onsets, w, starts, n_samples):
    i = np.searchsorted(starts, onsets, side="right") - 1
    j = np.searchsorted(starts, onsets + w - 1, side="right") - 1
    nxt = starts[np.minimum(i + 1, len(starts) - 1)]
    a = nxt - onsets
    b = onsets + w - nxt
    event = np.where(j == i, i, np.where(a > b, i, j)).astype(np.int64)
    rule = np.select([j == i, a > b, a == b], [0, 1, 2], default=3).astype(np.int64)
    bad = j - i >= 2
    event[bad] = -1
    rule[bad] = -1
    return event, rule


def _subset_sums(values):
    sums = np.zeros(1, dtype=np.int64)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


def wilcoxon_count_ge(ranks2, target):
    # meet in the middle: every lower-half subset sum against every upper-half one
    h = len(ranks2) // 2
    lo = np.sort(_subset_sums(ranks2[:h]))
    hi = _subset_sums(ranks2[h:])
    return int((len(lo) - np.searchsorted(lo, target - hi, side="left")).sum())


def scatter(x):
    xc = x - x.mean(axis=-1, keepdims=True)
    return (xc @ xc.transpose(0, 2, 1)) / (x.shape[-1] - 1)


def autocorr(x, max_lag):
    w = x.shape[-1]
    out = np.empty((x.shape[0], max_lag + 1))
    for k in range(max_lag + 1):
        out[:, k] = np.einsum("rt,rt->r", x[:, : w - k], x[:, k:]) / w
    return out
