"""Loop kernels compiled with numba.

Each function mirrors the one of the same name in ``_numpy``; the two are
cross-checked in the test suite.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def sosfilt(sos, x):
    # direct form II transposed, zero initial state, one cascade per row
    n_rows, n_samples = x.shape
    n_sections = sos.shape[0]
    y = np.empty((n_rows, n_samples))
    z = np.zeros((n_sections, 2))
    for c in range(n_rows):
        z[:, :] = 0.0
        for t in range(n_samples):
            v = x[c, t]
            for s in range(n_sections):
                out = sos[s, 0] * v + z[s, 0]
                z[s, 0] = sos[s, 1] * v - sos[s, 4] * out + z[s, 1]
                z[s, 1] = sos[s, 2] * v - sos[s, 5] * out
                v = out
            y[c, t] = v
    return y


@njit(cache=True)
def window_events(onsets, w, starts, n_samples):
    n = onsets.shape[0]
    n_events = starts.shape[0]
    event = np.empty(n, np.int64)
    rule = np.empty(n, np.int64)
    i = 0
    for k in range(n):
        o = onsets[k]
        while i + 1 < n_events and starts[i + 1] <= o:
            i += 1
        last = o + w - 1
        j = i
        while j + 1 < n_events and starts[j + 1] <= last:
            j += 1
        if j == i:
            event[k] = i
            rule[k] = 0
        elif j == i + 1:
            a = starts[j] - o
            b = o + w - starts[j]
            if a > b:
                event[k] = i
                rule[k] = 1
            elif a == b:
                event[k] = j
                rule[k] = 2
            else:
                event[k] = j
                rule[k] = 3
        else:
            event[k] = -1
            rule[k] = -1
    return event, rule


@njit(cache=True)
def wilcoxon_count_ge(ranks2, target):
    # distribution of subset sums built one rank at a time
    total = 0
    for r in ranks2:
        total += r
    ways = np.zeros(total + 1, np.int64)
    ways[0] = 1
    top = 0
    for r in ranks2:
        for s in range(top, -1, -1):
            if ways[s]:
                ways[s + r] += ways[s]
        top += r
    count = 0
    for s in range(max(target, 0), total + 1):
        count += ways[s]
    return count


@njit(cache=True)
def scatter(x):
    n, c, w = x.shape
    out = np.empty((n, c, c))
    buf = np.empty((c, w))
    for i in range(n):
        for r in range(c):
            m = 0.0
            for t in range(w):
                m += x[i, r, t]
            m /= w
            for t in range(w):
                buf[r, t] = x[i, r, t] - m
        out[i] = np.dot(buf, buf.T) / (w - 1)
    return out


@njit(cache=True)
def autocorr(x, max_lag):
    m, w = x.shape
    out = np.zeros((m, max_lag + 1))
    for r in range(m):
        row = x[r]
        for k in range(max_lag + 1):
            out[r, k] = np.dot(row[: w - k], row[k:]) / w
    return out
