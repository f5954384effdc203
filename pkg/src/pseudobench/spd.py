"""Covariance features and affine-invariant geometry on SPD matrices.

Functions accept a single matrix ``(d, d)`` or a stack ``(..., d, d)`` unless
noted otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import kernels
from .errors import ConvergenceError, NumericError, ParameterError

COV_EPS = 1e-10
KARCHER_TOL = 1e-8
KARCHER_MAX_ITER = 50


# ---------------------------------------------------------------- estimators

def _condition(s):
    d = s.shape[-1]
    s = 0.5 * (s + np.swapaxes(s, -1, -2))
    tr = np.trace(s, axis1=-2, axis2=-1)
    load = COV_EPS * np.where(tr > 0, tr / d, 1.0)
    return s + load[..., None, None] * np.eye(d)


def covariances(windows) -> np.ndarray:
    """Conditioned sample covariances of an ``(n, C, w)`` window stack."""
    x = np.asarray(windows, dtype=np.float64)
    if x.ndim != 3:
        raise ParameterError(f"expected an (n, C, w) stack, got shape {x.shape}")
    if x.shape[2] < 2:
        raise ParameterError("sample covariance needs w >= 2")
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite values in window")
    return _condition(kernels.scatter(x))


def sample_covariance(window) -> np.ndarray:
    """``Xc Xc^T / (w - 1)`` on the row-centered window, plus a tiny ridge
    ``eps * trace / d`` that keeps rank-deficient windows positive definite."""
    return covariances(np.asarray(window, dtype=np.float64)[None])[0]


@dataclass(frozen=True)
class AugConfig:
    order: int = 1
    lag: int = 1

    def __post_init__(self):
        if self.order < 1 or self.lag < 1:
            raise ParameterError(f"order and lag must be >= 1, got {self.order}, {self.lag}")

    def check(self, w: int) -> None:
        if (self.order - 1) * self.lag >= w:
            raise ParameterError(
                f"embedding span (order-1)*lag = {(self.order - 1) * self.lag} must be below w = {w}")


def delay_embed(windows, cfg: AugConfig) -> np.ndarray:
    """Stack ``order`` delayed copies: row ``k * C + c`` is channel ``c`` delayed by ``k * lag``.

    All copies are truncated to the common length ``w - (order - 1) * lag``.
    """
    x = np.asarray(windows, dtype=np.float64)
    w = x.shape[-1]
    cfg.check(w)
    n_keep = w - (cfg.order - 1) * cfg.lag
    parts = [x[..., k * cfg.lag: k * cfg.lag + n_keep] for k in range(cfg.order)]
    return np.concatenate(parts, axis=-2)


def augmented_covariances(windows, cfg: AugConfig) -> np.ndarray:
    return covariances(delay_embed(windows, cfg))


def augmented_covariance(window, cfg: AugConfig) -> np.ndarray:
    """Covariance of the delay-embedded window, size ``C * order``."""
    return augmented_covariances(np.asarray(window, dtype=np.float64)[None], cfg)[0]


# ------------------------------------------------------ symmetric functions

def _eig_apply(s, fn, positive=True):
    vals, vecs = np.linalg.eigh(s)
    if positive and np.any(vals <= 0):
        raise NumericError(f"matrix is not positive definite (min eigenvalue {vals.min():.3e})")
    return (vecs * fn(vals)[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def spd_logm(s) -> np.ndarray:
    return _eig_apply(np.asarray(s, dtype=np.float64), np.log)


def spd_expm(s) -> np.ndarray:
    """Matrix exponential of a symmetric matrix (the inverse of :func:`spd_logm`)."""
    return _eig_apply(np.asarray(s, dtype=np.float64), np.exp, positive=False)


def spd_sqrtm(s) -> np.ndarray:
    return _eig_apply(np.asarray(s, dtype=np.float64), np.sqrt)


def spd_invsqrtm(s) -> np.ndarray:
    return _eig_apply(np.asarray(s, dtype=np.float64), lambda v: 1.0 / np.sqrt(v))


def spd_powm(s, p) -> np.ndarray:
    return _eig_apply(np.asarray(s, dtype=np.float64), lambda v: v ** p)


# --------------------------------------------------------------- geometry

def riemannian_distance(a, b) -> np.ndarray:
    """Affine-invariant distance ``||logm(A^-1/2 B A^-1/2)||_F``.

    ``a`` is a single reference matrix; ``b`` may be a stack. Computed from the
    eigenvalues of the whitened matrix ``A^-1/2 B A^-1/2``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-2:] != b.shape[-2:] or a.shape[-1] != a.shape[-2]:
        raise ParameterError(f"dimension mismatch: {a.shape} vs {b.shape}")
    isq = spd_invsqrtm(a)
    vals = np.linalg.eigvalsh(isq @ b @ isq)
    if np.any(vals <= 0):
        raise NumericError("matrix is not positive definite")
    return np.sqrt((np.log(vals) ** 2).sum(axis=-1))


def riemannian_mean(mats, tol: float = KARCHER_TOL, max_iter: int = KARCHER_MAX_ITER) -> np.ndarray:
    """Karcher mean by the fixed-point iteration
    ``G <- G^1/2 expm(mean_i logm(G^-1/2 S_i G^-1/2)) G^1/2``,
    started at the arithmetic mean."""
    mats = np.asarray(mats, dtype=np.float64)
    if mats.ndim == 2:
        mats = mats[None]
    if mats.ndim != 3 or mats.shape[0] < 1 or mats.shape[1] != mats.shape[2]:
        raise ParameterError(f"expected a non-empty (n, d, d) stack, got shape {mats.shape}")
    g = mats.mean(axis=0)
    residual = np.inf
    for _ in range(max_iter):
        vals, vecs = np.linalg.eigh(g)
        g_half = (vecs * np.sqrt(vals)) @ vecs.T
        g_ihalf = (vecs / np.sqrt(vals)) @ vecs.T
        tangent = spd_logm(g_ihalf @ mats @ g_ihalf).mean(axis=0)
        residual = np.linalg.norm(tangent)
        g = g_half @ spd_expm(tangent) @ g_half
        g = 0.5 * (g + g.T)
        if residual < tol:
            return g
    raise ConvergenceError(f"Karcher mean did not converge in {max_iter} iterations", residual)


def _triu_weights(d):
    rows, cols = np.triu_indices(d)
    weights = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return rows, cols, weights


def tangent_space(s, ref) -> np.ndarray:
    """Upper-triangular vectorization of ``logm(ref^-1/2 S ref^-1/2)``, off-diagonals times sqrt(2)."""
    s = np.asarray(s, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if s.shape[-2:] != ref.shape:
        raise ParameterError(f"dimension mismatch: {s.shape} vs {ref.shape}")
    isq = spd_invsqrtm(ref)
    logs = spd_logm(isq @ s @ isq)
    rows, cols, weights = _triu_weights(ref.shape[0])
    return logs[..., rows, cols] * weights


def untangent_space(v, ref) -> np.ndarray:
    ref = np.asarray(ref, dtype=np.float64)
    d = ref.shape[0]
    rows, cols, weights = _triu_weights(d)
    v = np.asarray(v, dtype=np.float64)
    m = np.zeros(v.shape[:-1] + (d, d))
    m[..., rows, cols] = v / weights
    m[..., cols, rows] = v / weights
    sq = spd_sqrtm(ref)
    return sq @ spd_expm(m) @ sq


# --------------------------------------------------------------------- CSP

@dataclass(frozen=True)
class CSPFilters:
    """Spatial filters (rows) with the eigenvalue and forward pattern of each.

    For two classes the first half of the rows maximizes the variance ratio of
    the first class, the second half minimizes it.
    """

    filters: np.ndarray
    patterns: np.ndarray
    eigenvalues: np.ndarray
    class_names: tuple


def _csp_pair(target, composite, n_filters):
    try:
        vals, vecs = linalg.eigh(target, composite)
    except linalg.LinAlgError as exc:
        raise NumericError(f"composite covariance is singular: {exc}") from None
    order = np.argsort(vals)[::-1]
    half = n_filters // 2
    keep = np.concatenate([order[:half], order[len(order) - half:]])
    w = vecs[:, keep].T
    patterns = composite @ w.T
    patterns /= np.linalg.norm(patterns, axis=0, keepdims=True)
    return w, patterns, vals[keep]


def csp_fit(windows, labels, n_filters: int = 4) -> CSPFilters:
    """Common spatial patterns from class-mean covariances.

    Two classes: generalized eigenproblem ``S1 w = l (S1 + S2) w``. More
    classes: one-vs-rest, with ``S_rest`` the mean covariance of the other
    classes; rows are concatenated in class order.
    """
    if n_filters < 2 or n_filters % 2:
        raise ParameterError(f"n_filters must be an even positive integer, got {n_filters}")
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise ParameterError("CSP needs at least two classes")
    covs = covariances(windows)
    if n_filters > covs.shape[-1]:
        raise ParameterError(f"n_filters={n_filters} exceeds channel count {covs.shape[-1]}")
    class_cov = {}
    for c in classes:
        sel = labels == c
        if sel.sum() < 2:
            raise ParameterError(f"class {c!r} has fewer than two windows")
        class_cov[c] = covs[sel].mean(axis=0)

    if len(classes) == 2:
        s1, s2 = class_cov[classes[0]], class_cov[classes[1]]
        w, p, v = _csp_pair(s1, s1 + s2, n_filters)
        return CSPFilters(w, p, v, tuple(classes))
    ws, ps, vs = [], [], []
    for c in classes:
        rest = np.mean([class_cov[o] for o in classes if o != c], axis=0)
        w, p, v = _csp_pair(class_cov[c], class_cov[c] + rest, n_filters)
        ws.append(w)
        ps.append(p)
        vs.append(v)
    return CSPFilters(np.vstack(ws), np.hstack(ps), np.concatenate(vs), tuple(classes))


LOGVAR_FLOOR = 1e-20


def csp_transform(filters, windows) -> np.ndarray:
    """Log of the population variance of each filtered signal."""
    w = filters.filters if isinstance(filters, CSPFilters) else np.asarray(filters)
    x = np.asarray(windows, dtype=np.float64)
    if x.shape[-2] != w.shape[1]:
        raise ParameterError(f"filters expect {w.shape[1]} channels, window has {x.shape[-2]}")
    proj = np.einsum("fc,...ct->...ft", w, x)
    return np.log(np.maximum(proj.var(axis=-1), LOGVAR_FLOOR))


# ----------------------------------------------------------------------- AR

AR_EPS = 1e-10


def ar_features(windows, order: int) -> np.ndarray:
    """Yule-Walker AR(p) coefficients per channel, concatenated channel-major.

    Accepts one ``(C, w)`` window or an ``(n, C, w)`` stack.
    """
    x = np.asarray(windows, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    n, c, w = x.shape
    if order < 1:
        raise ParameterError("AR order must be positive")
    if w <= order + 1:
        raise ParameterError(f"window of {w} samples too short for AR({order})")
    rows = x.reshape(n * c, w)
    rows = rows - rows.mean(axis=1, keepdims=True)
    r = kernels.autocorr(rows, order)
    if np.any(r[:, 0] <= 0):
        raise NumericError("singular autocorrelation system (constant channel)")
    r[:, 0] *= 1.0 + AR_EPS
    idx = np.abs(np.arange(order)[:, None] - np.arange(order)[None, :])
    toeplitz = r[:, idx]
    coef = np.linalg.solve(toeplitz, r[:, 1:, None])[..., 0]
    out = coef.reshape(n, c * order)
    return out[0] if single else out
