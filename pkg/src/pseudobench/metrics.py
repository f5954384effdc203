"""Confusion-matrix scores: accuracy, MCC / nMCC, Cohen's kappa, mutual
information and the mutual-information ITR.

Every score is a function of a :class:`~pseudobench.core.ConfusionMatrix`
only, so permuting class order or scaling all counts leaves it unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfusionMatrix
from .errors import ParameterError, ValidationError


def confusion(true_labels, predicted_labels, class_names) -> ConfusionMatrix:
    class_names = tuple(class_names)
    true_labels = list(true_labels)
    predicted_labels = list(predicted_labels)
    if len(true_labels) != len(predicted_labels):
        raise ValidationError("true and predicted label lists differ in length")
    index = {c: i for i, c in enumerate(class_names)}
    unknown = (set(true_labels) | set(predicted_labels)) - set(index)
    if unknown:
        raise ValidationError(f"labels {sorted(map(str, unknown))} not in class_names")
    k = len(class_names)
    ti = np.array([index[t] for t in true_labels], dtype=np.int64)
    pi = np.array([index[p] for p in predicted_labels], dtype=np.int64)
    counts = np.bincount(ti * k + pi, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts, class_names)


def _counts(cm) -> np.ndarray:
    c = cm.counts if isinstance(cm, ConfusionMatrix) else np.asarray(cm)
    if c.sum() < 1:
        raise ValidationError("confusion matrix is empty")
    return c.astype(np.float64)


def accuracy(cm) -> float:
    c = _counts(cm)
    return float(np.trace(c) / c.sum())


def mcc(cm) -> float:
    """Multiclass Matthews correlation; reduces to the binary formula for K=2.

    A zero denominator (e.g. every prediction in one column) yields 0.
    """
    c = _counts(cm)
    s = c.sum()
    t = c.sum(axis=1)
    p = c.sum(axis=0)
    cov_tp = np.trace(c) * s - t @ p
    cov_pp = s * s - p @ p
    cov_tt = s * s - t @ t
    if cov_pp == 0 or cov_tt == 0:
        return 0.0
    return float(np.clip(cov_tp / math.sqrt(cov_pp * cov_tt), -1.0, 1.0))


def binary_mcc(tp, tn, fp, fn) -> float:
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(den)


def nmcc(cm) -> float:
    """``(MCC + 1) / 2``; 0.5 is chance level."""
    return (mcc(cm) + 1.0) / 2.0


def kappa(cm) -> float:
    c = _counts(cm)
    s = c.sum()
    p_o = np.trace(c) / s
    p_e = (c.sum(axis=1) @ c.sum(axis=0)) / (s * s)
    if p_e == 1.0:
        return 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def mutual_information(cm) -> float:
    """Mutual information in bits between true and predicted labels."""
    c = _counts(cm)
    joint = c / c.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz])))
    return max(mi, 0.0)


def itr(cm, t_symbol_seconds: float) -> float:
    """Bits per minute: ``MI * 60 / T`` with ``T`` seconds per decision."""
    if not t_symbol_seconds > 0:
        raise ParameterError(f"symbol time must be positive, got {t_symbol_seconds}")
    return mutual_information(cm) * 60.0 / t_symbol_seconds


@dataclass(frozen=True)
class ScoreSet:
    nmcc: float
    accuracy: float
    kappa: float
    mutual_info_bits: float
    itr_bits_per_min: float
    t_symbol_seconds: float


def score_all(cm, t_symbol_seconds: float) -> ScoreSet:
    mi = mutual_information(cm)
    if not t_symbol_seconds > 0:
        raise ParameterError(f"symbol time must be positive, got {t_symbol_seconds}")
    return ScoreSet(nmcc=nmcc(cm), accuracy=accuracy(cm), kappa=kappa(cm), mutual_info_bits=mi,
                    itr_bits_per_min=mi * 60.0 / t_symbol_seconds, t_symbol_seconds=t_symbol_seconds)
