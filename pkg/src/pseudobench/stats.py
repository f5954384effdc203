"""Paired pipeline comparisons: one-tailed Wilcoxon signed-rank test,
standardized mean differences, significance matrices and Stouffer
meta-aggregation across datasets."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from . import kernels
from .errors import UndefinedTestError, ValidationError

EXACT_MAX_N = 25
ALPHA = 0.05
P_CLAMP = 1e-12


def _signed_ranks(diffs):
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0]
    if d.size == 0:
        raise UndefinedTestError("all differences are zero")
    ranks = sps.rankdata(np.abs(d))  # midranks on ties
    return d, ranks


def wilcoxon_exact(diffs) -> float:
    """P(W+ >= observed) under the sign-flip null, by full enumeration."""
    d, ranks = _signed_ranks(diffs)
    ranks2 = np.rint(2 * ranks).astype(np.int64)  # midranks are multiples of 1/2
    w2 = int(ranks2[d > 0].sum())
    return kernels.wilcoxon_count_ge(ranks2, w2) / 2.0 ** len(d)


def wilcoxon_normal(diffs) -> float:
    """Normal approximation with tie-corrected variance and continuity correction."""
    d, ranks = _signed_ranks(diffs)
    n = len(d)
    w_plus = ranks[d > 0].sum()
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts ** 3 - tie_counts).sum() / 48.0
    z = (w_plus - mean - 0.5) / math.sqrt(var)
    return float(sps.norm.sf(z))


def wilcoxon_one_tailed(diffs) -> float:
    """One-tailed signed-rank p-value for the alternative that ``diffs`` are positive.

    Zero differences are dropped first; up to 25 remaining differences use
    exact enumeration, more use the normal approximation.
    """
    d, _ = _signed_ranks(diffs)
    p = wilcoxon_exact(d) if len(d) <= EXACT_MAX_N else wilcoxon_normal(d)
    return float(min(max(p, np.finfo(float).tiny), 1.0))


def smd(scores_a, scores_b):
    """Mean of the paired differences over their sample std, or ``None`` when that std is 0."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValidationError("smd needs two paired 1-D score lists of length >= 2")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0:
        return None
    return float(d.mean() / sd)


@dataclass(frozen=True)
class PairComparison:
    """Evidence that ``pipeline_a`` scores above ``pipeline_b``.

    ``status`` is ``"ok"``, ``"undefined"`` (all paired differences zero) or
    ``"incomparable"`` (no common subject); ``p_one_tailed`` and ``z`` are
    ``None`` unless the status is ``"ok"``.
    """

    pipeline_a: str
    pipeline_b: str
    n: int
    smd: float | None
    p_one_tailed: float | None
    z: float | None
    significant: bool
    status: str = "ok"


def p_to_z(p: float) -> float:
    p = min(max(p, P_CLAMP), 1 - P_CLAMP)
    return float(sps.norm.isf(p))


def compare_pair(name_a, scores_a: dict, name_b, scores_b: dict) -> PairComparison:
    """Compare per-subject score dicts on their common subjects."""
    common = sorted(set(scores_a) & set(scores_b))
    if not common:
        return PairComparison(name_a, name_b, 0, None, None, None, False, "incomparable")
    a = np.array([scores_a[s] for s in common])
    b = np.array([scores_b[s] for s in common])
    d = a - b
    effect = smd(a, b) if len(common) >= 2 else None
    try:
        p = wilcoxon_one_tailed(d)
    except UndefinedTestError:
        return PairComparison(name_a, name_b, len(common), effect, None, None, False, "undefined")
    return PairComparison(name_a, name_b, len(common), effect, p, p_to_z(p), p < ALPHA)


def subject_scores(records, score: str = "nmcc") -> dict:
    """``{pipeline: {subject: mean score over sessions}}``."""
    acc = defaultdict(lambda: defaultdict(list))
    for r in records:
        acc[r.pipeline_id][r.subject_id].append(getattr(r, score))
    return {p: {s: float(np.mean(v)) for s, v in subj.items()} for p, subj in acc.items()}


def comparison_matrix(records, score: str = "nmcc") -> tuple[list[str], list[list[PairComparison]]]:
    """Ordered-pair comparisons for all pipelines of one dataset.

    Cell ``[i][j]`` tests whether pipeline ``i`` beats pipeline ``j``.
    Pipelines are listed in sorted order, so the result does not depend on
    record order.
    """
    records = list(records)
    if len({r.dataset_id for r in records}) > 1:
        raise ValidationError("comparison_matrix takes records of a single dataset")
    per = subject_scores(records, score)
    names = sorted(per)
    if len(names) < 2:
        raise ValidationError("need at least two pipelines to compare")
    grid = [[compare_pair(a, per[a], b, per[b]) for b in names] for a in names]
    return names, grid


def meta_combine(p_values, n_subjects) -> tuple[float, float]:
    """Stouffer's weighted Z with weights ``sqrt(n_subjects)``; returns ``(z, p)``."""
    p = np.clip(np.asarray(p_values, dtype=np.float64), P_CLAMP, 1 - P_CLAMP)
    w = np.sqrt(np.asarray(n_subjects, dtype=np.float64))
    if p.size < 1 or p.shape != w.shape:
        raise ValidationError("need one weight per p-value and at least one dataset")
    z_i = sps.norm.isf(p)
    z = float((w * z_i).sum() / math.sqrt((w ** 2).sum()))
    return z, float(sps.norm.sf(z))


@dataclass(frozen=True)
class MetaRow:
    pipeline_a: str
    pipeline_b: str
    n_datasets: int
    smd: float | None
    z: float
    p_one_tailed: float
    significant: bool


def meta_analysis(records_by_dataset: dict, score: str = "nmcc") -> list[MetaRow]:
    """Combine per-dataset comparisons for every ordered pipeline pair.

    The combined SMD is the ``sqrt(n)``-weighted mean of the per-dataset SMDs.
    """
    cells = defaultdict(list)
    for records in records_by_dataset.values():
        try:
            names, grid = comparison_matrix(records, score)
        except ValidationError:
            continue
        for row in grid:
            for c in row:
                if c.status == "ok":
                    cells[c.pipeline_a, c.pipeline_b].append(c)
    rows = []
    for (a, b), cs in sorted(cells.items()):
        z, p = meta_combine([c.p_one_tailed for c in cs], [c.n for c in cs])
        effects = [(c.smd, math.sqrt(c.n)) for c in cs if c.smd is not None]
        m = (sum(e * w for e, w in effects) / sum(w for _, w in effects)) if effects else None
        rows.append(MetaRow(a, b, len(cs), m, z, p, p < ALPHA))
    return rows


def comparison_json(matrices: dict, meta: dict) -> dict:
    """JSON-ready comparison output.

    ``matrices`` maps a key to a :func:`comparison_matrix` result and ``meta``
    maps a key to a list of :class:`MetaRow`.
    """
    return {
        "comparisons": {key: [asdict(c) for row in grid for c in row]
                        for key, (_, grid) in matrices.items()},
        "meta": {key: [asdict(r) for r in rows] for key, rows in meta.items()},
    }
