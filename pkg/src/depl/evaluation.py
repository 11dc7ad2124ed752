"""Leave-one-subject-out orchestration, metrics, and paired comparisons.

Each fold holds out one subject; the z-scoring normalizer and all model
state are fitted on the remaining subjects only. Accuracy is scored per
1-second epoch, with trial-level majority voting reported alongside.
Model comparison uses the paired Student t-test; its two-sided p-value
comes from the regularized incomplete beta function evaluated by a
continued fraction, not from any statistics library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ArgumentError
from .features import (FeatureEpoch, apply_normalizer, epoch_matrix,
                       fit_normalizer)


@dataclass(frozen=True)
class Fold:
    test_subject: int
    train_subjects: tuple[int, ...]


@dataclass(frozen=True)
class FoldPlan:
    subjects: tuple[int, ...]
    folds: tuple[Fold, ...]


@dataclass(frozen=True)
class FoldResult:
    """Held-out performance for one test subject on one task."""

    test_subject: int
    task: str
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    f1: float
    trial_accuracy: float
    n_trials: int
    loss_curve: tuple[float, ...] | None = None

    @property
    def n_test(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class TTestResult(NamedTuple):
    t: float
    p: float
    degenerate: bool = False


@dataclass(frozen=True)
class ComparisonMatrix:
    """Pairwise paired-t statistics over per-subject accuracies."""

    labels: tuple[str, ...]
    t: np.ndarray
    p: np.ndarray


def loso_split(subject_ids) -> FoldPlan:
    """One fold per subject; the fold's training set excludes its subject."""
    subjects = tuple(subject_ids)
    if len(subjects) < 2:
        raise ArgumentError("leave-one-subject-out needs at least 2 subjects")
    if len(set(subjects)) != len(subjects):
        raise ArgumentError("duplicate subject ids")
    folds = tuple(
        Fold(test_subject=s,
             train_subjects=tuple(o for o in subjects if o != s))
        for s in subjects)
    return FoldPlan(subjects=subjects, folds=folds)


def accuracy_f1(tp: int, fp: int, tn: int, fn: int) -> tuple[float, float]:
    """Accuracy and F1 from confusion counts; F1 is 0 when undefined."""
    total = tp + fp + tn + fn
    if total <= 0:
        raise ArgumentError("empty confusion matrix")
    accuracy = (tp + tn) / total
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom > 0 else 0.0
    return accuracy, f1


def confusion_counts(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[int, int, int, int]:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ArgumentError("label/prediction length mismatch")
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    tn = int(np.sum((y_pred == 0) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    return tp, fp, tn, fn


def _labels_for(epochs: list[FeatureEpoch], task: str) -> np.ndarray:
    if task == "valence":
        return np.array([e.label_valence for e in epochs], dtype=np.int64)
    if task == "arousal":
        return np.array([e.label_arousal for e in epochs], dtype=np.int64)
    raise ArgumentError(f"unknown task {task!r}")


def _trial_majority_accuracy(epochs, y_true, y_pred) -> tuple[float, int]:
    """Majority-vote each trial's epoch predictions; ties go to class 0."""
    trials: dict[int, list[int]] = {}
    truth: dict[int, int] = {}
    for e, t, p in zip(epochs, y_true, y_pred):
        trials.setdefault(e.trial_id, []).append(int(p))
        truth[e.trial_id] = int(t)
    correct = 0
    for tid, preds in trials.items():
        vote = int(np.bincount(preds, minlength=2).argmax())
        correct += int(vote == truth[tid])
    return correct / len(trials), len(trials)


def run_fold(fold: Fold, make_model: Callable[[], object],
             epochs_by_subject: dict[int, list[FeatureEpoch]], task: str,
             probe: Callable | None = None) -> FoldResult:
    """Train on the fold's training subjects and score the held-out one.

    The normalizer is fitted on training epochs only, then applied to
    both sides. ``probe``, when given, is called with
    (normalizer, train_matrix, train_labels) before fitting so tests can
    verify that no held-out value leaks into the training side.
    """
    train_epochs: list[FeatureEpoch] = []
    for s in fold.train_subjects:
        train_epochs.extend(epochs_by_subject[s])
    test_epochs = epochs_by_subject.get(fold.test_subject, [])
    if not test_epochs:
        raise ArgumentError(f"no epochs for test subject {fold.test_subject}")
    if not train_epochs:
        raise ArgumentError("no training epochs in fold")

    norm = fit_normalizer(train_epochs)
    x_train = epoch_matrix(apply_normalizer(norm, train_epochs))
    y_train = _labels_for(train_epochs, task)
    if probe is not None:
        probe(norm, x_train, y_train)

    model = make_model()
    model.fit(x_train, y_train)

    x_test = epoch_matrix(apply_normalizer(norm, test_epochs))
    y_test = _labels_for(test_epochs, task)
    y_pred = np.asarray(model.predict(x_test), dtype=np.int64)

    tp, fp, tn, fn = confusion_counts(y_test, y_pred)
    accuracy, f1 = accuracy_f1(tp, fp, tn, fn)
    trial_acc, n_trials = _trial_majority_accuracy(test_epochs, y_test, y_pred)
    curve = getattr(model, "loss_curve", None)
    return FoldResult(test_subject=fold.test_subject, task=task,
                      tp=tp, fp=fp, tn=tn, fn=fn,
                      accuracy=accuracy, f1=f1,
                      trial_accuracy=trial_acc, n_trials=n_trials,
                      loss_curve=tuple(curve) if curve is not None else None)


# ---------------------------------------------------------------------------
# Student t machinery

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h  # converged to machine precision long before max_iter in practice


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued fraction, symmetrised for stability."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for T ~ Student t with ``df`` degrees of freedom."""
    if df < 1:
        raise ArgumentError("degrees of freedom must be >= 1")
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def paired_t_test(a, b) -> TTestResult:
    """Paired Student t-test over same-subject values; two-sided p.

    Degenerate case: identical nonzero differences have no spread, so t
    is reported as signed infinity with p = 0 and the degenerate flag
    set; all-zero differences give t = 0, p = 1.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ArgumentError("paired samples must be equal-length vectors")
    n = len(a)
    if n < 2:
        raise ArgumentError("need at least 2 pairs")
    d = a - b
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0)
        return TTestResult(t=math.copysign(math.inf, mean), p=0.0,
                           degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t=float(t), p=student_t_two_sided_p(t, n - 1))


# ---------------------------------------------------------------------------
# aggregation

def _mean_std(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1))


def aggregate(fold_results: list[FoldResult]) -> dict[str, float]:
    """Participant-averaged mean and sample std per metric."""
    if not fold_results:
        raise ArgumentError("no fold results to aggregate")
    out: dict[str, float] = {}
    for metric in ("accuracy", "f1", "trial_accuracy"):
        mean, std = _mean_std([getattr(r, metric) for r in fold_results])
        out[f"{metric}_mean"] = mean
        out[f"{metric}_std"] = std
    return out


def comparison_matrix(acc_by_label: dict[str, dict[int, float]]) -> ComparisonMatrix:
    """Pairwise paired t-tests between models' per-subject accuracies.

    All models must cover the same subjects; pairs are aligned by
    subject id. The diagonal is (t=0, p=1) by construction.
    """
    labels = tuple(acc_by_label)
    if not labels:
        raise ArgumentError("no models to compare")
    subjects = sorted(acc_by_label[labels[0]])
    for label in labels:
        if sorted(acc_by_label[label]) != subjects:
            raise ArgumentError(f"model {label!r} covers different subjects")
    k = len(labels)
    t = np.zeros((k, k))
    p = np.ones((k, k))
    for i in range(k):
        ai = [acc_by_label[labels[i]][s] for s in subjects]
        for j in range(k):
            if i == j:
                continue
            aj = [acc_by_label[labels[j]][s] for s in subjects]
            res = paired_t_test(ai, aj)
            t[i, j] = res.t
            p[i, j] = res.p
    return ComparisonMatrix(labels=labels, t=t, p=p)
