"""Classifier heads, pipeline composition and grid-search tuning.

A :class:`Pipeline` is a recipe: an ordered list of step factories plus a
hyperparameter grid. :meth:`Pipeline.build` turns one grid point into a
:class:`Chain` that can be fitted on windows and labels and then predicts
labels for new windows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import spd
from .core import WindowSet
from .errors import NumericError, ParameterError, PseudoBenchError
from .metrics import confusion, nmcc

SHRINKAGE_GRID = (0.01, 0.1, 0.3, 0.5, 0.9)
AUG_ORDERS = (2, 3, 4)
AUG_LAGS = (1, 4, 8)
AR_ORDERS = (2, 4, 6)


# ------------------------------------------------------------ classifiers

class MDM:
    """Minimum distance to the per-class Karcher mean of covariance matrices."""

    def fit(self, covs, labels):
        labels = np.asarray(labels)
        self.classes_ = tuple(sorted(set(labels.tolist())))
        if not self.classes_:
            raise ParameterError("MDM needs at least one training window")
        self.means_ = np.stack([spd.riemannian_mean(covs[labels == c]) for c in self.classes_])
        return self

    def distances(self, covs):
        covs = np.asarray(covs, dtype=np.float64)
        return np.stack([spd.riemannian_distance(m, covs) for m in self.means_], axis=-1)

    def predict(self, covs):
        # argmin keeps the first class on ties, i.e. class-name order
        return np.asarray(self.classes_, dtype=object)[np.argmin(self.distances(covs), axis=-1)]


class ShrinkageLDA:
    """LDA on a pooled covariance shrunk toward ``trace / p * I``."""

    def __init__(self, shrinkage: float = 0.1):
        if not 0.0 <= shrinkage <= 1.0:
            raise ParameterError(f"shrinkage must lie in [0, 1], got {shrinkage}")
        self.shrinkage = shrinkage

    def fit(self, x, labels):
        x = np.asarray(x, dtype=np.float64)
        labels = np.asarray(labels)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ParameterError(f"features must be an n x p matrix, got shape {x.shape}")
        self.classes_ = tuple(sorted(set(labels.tolist())))
        k = len(self.classes_)
        n, p = x.shape
        if k == 1:
            self.coef_ = np.zeros((p, 1))
            self.intercept_ = np.zeros(1)
            return self
        if n <= k:
            raise ParameterError(f"need more samples ({n}) than classes ({k})")
        means = np.stack([x[labels == c].mean(axis=0) for c in self.classes_])
        priors = np.array([(labels == c).mean() for c in self.classes_])
        centered = x - means[np.searchsorted(self.classes_, labels)]
        pooled = centered.T @ centered / (n - k)
        scale = np.trace(pooled) / p
        cov = (1.0 - self.shrinkage) * pooled + self.shrinkage * scale * np.eye(p)
        vals, vecs = np.linalg.eigh(cov)
        if vals[0] <= 1e-12 * max(vals[-1], 0.0) or vals[-1] <= 0:
            raise NumericError("shrunk covariance is singular; use a positive shrinkage")
        self.coef_ = vecs @ ((vecs.T @ means.T) / vals[:, None])
        self.intercept_ = -0.5 * np.einsum("kp,pk->k", means, self.coef_) + np.log(priors)
        self.means_ = means
        return self

    def decision_function(self, x):
        return np.asarray(x, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict(self, x):
        return np.asarray(self.classes_, dtype=object)[np.argmax(self.decision_function(x), axis=-1)]


# ------------------------------------------------------------ transforms

class _Stateless:
    # output of transform does not depend on training data
    stateless = True

    def fit(self, x, labels=None):
        return self


class Covariances(_Stateless):
    def transform(self, windows):
        return spd.covariances(windows)


class AugmentedCovariances(_Stateless):
    def __init__(self, order: int = 2, lag: int = 1):
        self.cfg = spd.AugConfig(order, lag)

    def transform(self, windows):
        return spd.augmented_covariances(windows, self.cfg)


class ARFeatures(_Stateless):
    def __init__(self, order: int = 4):
        self.order = order

    def transform(self, windows):
        return spd.ar_features(windows, self.order)


class TangentSpace:
    """Tangent vectors at the Karcher mean of the training covariances."""

    stateless = False

    def fit(self, covs, labels=None):
        self.reference_ = spd.riemannian_mean(covs)
        return self

    def transform(self, covs):
        return spd.tangent_space(covs, self.reference_)


class CSP:
    stateless = False

    def __init__(self, n_filters: int = 4):
        self.n_filters = n_filters

    def fit(self, windows, labels):
        self.filters_ = spd.csp_fit(windows, labels, self.n_filters)
        return self

    def transform(self, windows):
        return spd.csp_transform(self.filters_, windows)


class FilterBankCSP:
    """Per-band CSP on band-stacked windows (band ``b`` holds channels ``b*C .. b*C + C - 1``)."""

    stateless = False

    def __init__(self, n_bands: int = 6, n_filters: int = 4):
        self.n_bands = n_bands
        self.n_filters = n_filters

    def _split(self, windows):
        windows = np.asarray(windows)
        if windows.shape[-2] % self.n_bands:
            raise ParameterError(f"{windows.shape[-2]} channels do not split into {self.n_bands} bands")
        c = windows.shape[-2] // self.n_bands
        return [windows[..., b * c:(b + 1) * c, :] for b in range(self.n_bands)]

    def fit(self, windows, labels):
        self.filters_ = [spd.csp_fit(x, labels, self.n_filters) for x in self._split(windows)]
        return self

    def transform(self, windows):
        return np.concatenate([spd.csp_transform(f, x)
                               for f, x in zip(self.filters_, self._split(windows))], axis=-1)


# ------------------------------------------------------------ pipelines

class Chain:
    """Fitted-in-place sequence of transforms ending in a classifier."""

    def __init__(self, steps):
        self.steps = list(steps)

    def fit(self, windows, labels):
        x = windows
        for _, step in self.steps[:-1]:
            x = step.fit(x, labels).transform(x)
        self.steps[-1][1].fit(x, labels)
        return self

    def predict(self, windows):
        x = windows
        for _, step in self.steps[:-1]:
            x = step.transform(x)
        return self.steps[-1][1].predict(x)


@dataclass(frozen=True)
class Pipeline:
    """Pipeline recipe.

    ``steps`` holds ``(name, factory, default_kwargs)`` triples; grid keys are
    ``"<step name>.<kwarg>"``. ``input`` is ``"band"`` for the single
    pass-band signal or ``"filterbank"`` for band-stacked channels.
    """

    id: str
    steps: tuple
    hyper_grid: dict = field(default_factory=dict)
    input: str = "band"

    def step_params(self, point: dict | None = None) -> list[dict]:
        point = point or {}
        names = [name for name, _, _ in self.steps]
        for key in point:
            step, _, _ = key.partition(".")
            if step not in names:
                raise ParameterError(f"{self.id}: unknown hyperparameter {key!r}")
        return [{**defaults, **{k.partition(".")[2]: v for k, v in point.items()
                                if k.partition(".")[0] == name}}
                for name, _, defaults in self.steps]

    def build(self, point: dict | None = None) -> Chain:
        params = self.step_params(point)
        return Chain([(name, factory(**kw)) for (name, factory, _), kw in zip(self.steps, params)])

    def grid_points(self) -> list[dict]:
        """Cartesian product of the grid in key insertion order, values in listed order."""
        if not self.hyper_grid:
            return [{}]
        keys = list(self.hyper_grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*self.hyper_grid.values())]


def nmcc_scorer(true_labels, predicted, class_names) -> float:
    return nmcc(confusion(true_labels, predicted, class_names))


def contiguous_folds(n: int, k: int) -> list[np.ndarray]:
    """``k`` contiguous, time-ordered index blocks covering ``range(n)``."""
    if k < 2:
        raise ParameterError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ParameterError(f"cannot split {n} windows into {k} folds")
    return np.array_split(np.arange(n), k)


def _freeze(d: dict):
    return tuple(sorted(d.items()))


def grid_scores(pipeline: Pipeline, train: WindowSet, k: int = 5,
                scorer: Callable = nmcc_scorer) -> tuple[list[dict], np.ndarray]:
    """Per-fold validation scores ``(n_points, k)`` for every grid point.

    Folds are contiguous blocks of ``train`` in its stored order. Candidate
    fits that fail score 0 on that fold. Stateless step outputs are computed
    once on all windows; fitted step outputs are cached per fold.
    """
    labels = np.asarray(train.labels)
    for c in train.class_names:
        if 0 < (labels == c).sum() < k:
            raise ParameterError(f"class {c!r} has fewer than {k} training windows")
    folds = contiguous_folds(len(train), k)
    points = pipeline.grid_points()
    scores = np.zeros((len(points), k))
    shared = {}
    factories = [f for _, f, _ in pipeline.steps]
    for fi, val in enumerate(folds):
        tr = np.setdiff1d(np.arange(len(train)), val)
        y_tr, y_va = labels[tr], labels[val]
        cache = {}
        for gi, point in enumerate(points):
            params = pipeline.step_params(point)
            try:
                x_tr = x_va = prev_key = None
                all_stateless = True
                for i in range(len(factories) - 1):
                    key = (i, tuple(_freeze(p) for p in params[: i + 1]))
                    stateless = all_stateless and getattr(factories[i], "stateless", False)
                    if stateless:
                        if key not in shared:
                            src = train.windows if i == 0 else shared[prev_key]
                            shared[key] = factories[i](**params[i]).transform(src)
                        x_tr, x_va = shared[key][tr], shared[key][val]
                    else:
                        if key not in cache:
                            if x_tr is None:
                                x_tr, x_va = train.windows[tr], train.windows[val]
                            step = factories[i](**params[i]).fit(x_tr, y_tr)
                            cache[key] = (step.transform(x_tr), step.transform(x_va))
                        x_tr, x_va = cache[key]
                    all_stateless = stateless
                    prev_key = key
                if x_tr is None:
                    x_tr, x_va = train.windows[tr], train.windows[val]
                clf = factories[-1](**params[-1]).fit(x_tr, y_tr)
                scores[gi, fi] = scorer(y_va, clf.predict(x_va), train.class_names)
            except (PseudoBenchError, np.linalg.LinAlgError):
                scores[gi, fi] = 0.0
    return points, scores


def grid_search(pipeline: Pipeline, train: WindowSet, k: int = 5,
                scorer: Callable = nmcc_scorer) -> dict:
    """Grid point with the best mean validation score; ties go to the earlier point."""
    if not pipeline.hyper_grid:
        return {}
    points, scores = grid_scores(pipeline, train, k, scorer)
    return points[int(np.argmax(scores.mean(axis=1)))]


def registry(full_aug_grid: bool = False) -> list[Pipeline]:
    """The built-in pipeline catalogue.

    ``full_aug_grid`` widens the augmented-covariance grid to order and lag in
    1..10 (points whose embedding does not fit the window fail and are never
    selected); the default grid is a small subset of it.
    """
    lda = ("lda", ShrinkageLDA, {"shrinkage": 0.1})
    gamma = {"lda.shrinkage": list(SHRINKAGE_GRID)}
    orders = list(range(1, 11)) if full_aug_grid else list(AUG_ORDERS)
    lags = list(range(1, 11)) if full_aug_grid else list(AUG_LAGS)
    return [
        Pipeline("mdm", (("cov", Covariances, {}), ("mdm", MDM, {}))),
        Pipeline("tang_lda", (("cov", Covariances, {}), ("ts", TangentSpace, {}), lda), gamma),
        Pipeline("aug_tang_lda",
                 (("aug", AugmentedCovariances, {"order": 2, "lag": 1}), ("ts", TangentSpace, {}), lda),
                 {"aug.order": orders, "aug.lag": lags, **gamma}),
        Pipeline("csp_lda", (("csp", CSP, {"n_filters": 4}), lda), gamma),
        Pipeline("fbcsp_lda", (("fbcsp", FilterBankCSP, {"n_bands": 6, "n_filters": 4}), lda), gamma,
                 input="filterbank"),
        Pipeline("ar_lda", (("ar", ARFeatures, {"order": 4}), lda),
                 {"ar.order": list(AR_ORDERS), **gamma}),
    ]


def get_pipelines(ids, full_aug_grid: bool = False) -> list[Pipeline]:
    catalogue = {p.id: p for p in registry(full_aug_grid)}
    unknown = [i for i in ids if i not in catalogue]
    if unknown:
        raise ParameterError(f"unknown pipeline id(s): {', '.join(unknown)}")
    return [catalogue[i] for i in ids]
