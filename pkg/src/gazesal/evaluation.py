"""Cross-validation protocols, classification metrics and the percentile
bootstrap used to evaluate the pairwise salience model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pairwise import (FitConfig, GlobalSalienceModel, Trial, encode_trial,
                       fit, predict_prob)


class UndefinedMetricError(ValueError):
    """Metric is undefined for the given inputs (e.g. one class only)."""


class ProtocolError(ValueError):
    """The evaluation protocol cannot be applied to this dataset."""


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    """Each fold is (train_subject_ids, test_subject_ids)."""


@dataclass
class MetricReport:
    auc_folds: list[float]
    tjur_folds: list[float]
    acc_folds: list[float]

    def summary(self) -> dict[str, float]:
        out = {}
        for name, vals in [("auc", self.auc_folds), ("tjur_r2", self.tjur_folds),
                           ("accuracy", self.acc_folds)]:
            arr = np.asarray(vals)
            out[f"{name}_mean"] = float(arr.mean())
            out[f"{name}_sd"] = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return out


@dataclass
class BootstrapResult:
    resampled_means: np.ndarray
    mean: float
    median: float
    standard_error: float
    ci_low: float
    ci_high: float
    p_value: float


def auc(scores, labels) -> float:
    """Probability that a positive outranks a negative, ties counted half.

    Computed from midranks (Mann-Whitney); exactly equal to brute-force
    pair counting since midrank sums are half-integers.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    rank = 1
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        midrank = (rank + rank + (j - i)) / 2.0
        ranks[order[i:j + 1]] = midrank
        rank += j - i + 1
        i = j + 1
    rank_sum_pos = float(ranks[pos].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def tjur_r2(probs, labels) -> float:
    """Coefficient of discrimination: mean p over positives minus mean p
    over negatives."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    pos = labels > 0
    if pos.all() or not pos.any():
        raise UndefinedMetricError("Tjur R2 needs both classes present")
    return float(probs[pos].mean() - probs[~pos].mean())


def accuracy(model: GlobalSalienceModel, trials: list[Trial]) -> float:
    """Fraction of trials whose predicted side matches the outcome.

    Probability exactly 0.5 predicts right_first (fixed tie rule).
    """
    if not trials:
        raise UndefinedMetricError("accuracy of an empty trial set is undefined")
    correct = 0
    for trial in trials:
        row = encode_trial(trial, model.M, model.K)
        p = predict_prob(model, row)
        pred = +1 if p >= 0.5 else -1
        correct += int(pred == row.label)
    return correct / len(trials)


def scores_and_labels(model: GlobalSalienceModel,
                      trials: list[Trial]) -> tuple[np.ndarray, np.ndarray]:
    """Predicted right-first probabilities and +/-1 labels for a trial set."""
    probs = np.empty(len(trials))
    labels = np.empty(len(trials), dtype=int)
    for i, trial in enumerate(trials):
        row = encode_trial(trial, model.M, model.K)
        probs[i] = predict_prob(model, row)
        labels[i] = row.label
    return probs, labels


def make_leave2out_plan(subject_ids, fold_count: int, seed: int = 0) -> FoldPlan:
    """Partition subjects into fold_count disjoint test sets (pairs, with
    one smaller set when the count does not divide evenly); the train set
    of each fold is every other subject."""
    if fold_count < 1:
        raise ProtocolError("fold_count must be at least 1")
    subjects = list(subject_ids)
    if fold_count > len(subjects):
        raise ProtocolError("more folds than subjects")
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(subjects)))
    shuffled = [subjects[i] for i in order]

    base, extra = divmod(len(shuffled), fold_count)
    folds = []
    start = 0
    for f in range(fold_count):
        size = base + (1 if f < extra else 0)
        test = tuple(sorted(shuffled[start:start + size]))
        start += size
        train = tuple(sorted(set(subjects) - set(test)))
        folds.append((train, test))
    return FoldPlan(folds=tuple(folds))


def default_c_grid() -> list[float]:
    """Ten log-spaced values 10^p with p = -3 + (2/3)(n-1), n = 1..10."""
    return [10.0 ** (-3 + (2.0 / 3.0) * n) for n in range(10)]


def _split_trials(trials, subject_set):
    return [t for t in trials if t.subject_id in subject_set]


def evaluate_folds(trials: list[Trial], M: int, K: int, plan: FoldPlan,
                   config: FitConfig = FitConfig()) -> MetricReport:
    """Fit on each fold's training subjects and score its test subjects."""
    report = MetricReport([], [], [])
    for train_subj, test_subj in plan.folds:
        train = _split_trials(trials, set(train_subj))
        test = _split_trials(trials, set(test_subj))
        if not train or not test:
            raise ProtocolError("fold with no trials on one side of the split")
        rows = [encode_trial(t, M, K) for t in train]
        model = fit(rows, M, K, config)
        probs, labels = scores_and_labels(model, test)
        report.auc_folds.append(auc(probs, labels))
        report.tjur_folds.append(tjur_r2(probs, labels))
        report.acc_folds.append(accuracy(model, test))
    return report


def cv_select_C(trials: list[Trial], M: int, K: int,
                grid: list[float] | None = None, n_folds: int = 5,
                seed: int = 0, tol: float = 1e-8,
                max_iter: int = 10000) -> tuple[float, dict[float, float]]:
    """Select the inverse regularization strength by by-participant
    cross-validation on mean accuracy; ties pick the smaller C."""
    if grid is None:
        grid = default_c_grid()
    if not grid:
        raise ProtocolError("empty C grid")
    subjects = sorted({t.subject_id for t in trials})
    if len(subjects) < n_folds:
        raise ProtocolError(
            f"need at least {n_folds} subjects for {n_folds}-fold validation")
    plan = make_leave2out_plan(subjects, n_folds, seed=seed)

    mean_acc: dict[float, float] = {}
    for C in grid:
        accs = []
        for train_subj, val_subj in plan.folds:
            train = _split_trials(trials, set(train_subj))
            val = _split_trials(trials, set(val_subj))
            rows = [encode_trial(t, M, K) for t in train]
            model = fit(rows, M, K, FitConfig(C=C, tol=tol, max_iter=max_iter))
            accs.append(accuracy(model, val))
        mean_acc[C] = float(np.mean(accs))
    best = min(grid, key=lambda c: (-mean_acc[c], c))
    return best, mean_acc


def percentile_bootstrap(values, n_resamples: int = 10000,
                         seed: int = 0) -> BootstrapResult:
    """Resample-with-replacement means, 95% percentile CI and a two-sided
    p-value against the null hypothesis of zero mean."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot bootstrap an empty sample")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_resamples, values.size))
    means = values[idx].mean(axis=1)
    ci_low, ci_high = np.percentile(means, [2.5, 97.5])
    frac_le = float(np.mean(means <= 0.0))
    frac_ge = float(np.mean(means >= 0.0))
    p = min(1.0, 2.0 * min(frac_le, frac_ge))
    return BootstrapResult(
        resampled_means=means,
        mean=float(means.mean()),
        median=float(np.median(means)),
        standard_error=float(means.std(ddof=1)) if n_resamples > 1 else 0.0,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        p_value=p,
    )
