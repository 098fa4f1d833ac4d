"""Pairwise-competition model of global image salience.

Each trial shows two images side by side and records which one received
the first saccade. Trials are encoded as sparse rows of a design matrix
with one column per image (+1 right, -1 left), one task column, one
familiarity column and one column per subject (lateral bias). The
coefficients are fitted with an L2-regularized logistic loss, which for
this encoding is the Bradley-Terry-Luce model with nuisance terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Side(Enum):
    NONE = "none"
    LEFT = "left"
    RIGHT = "right"


class Outcome(Enum):
    LEFT_FIRST = "left_first"
    RIGHT_FIRST = "right_first"


class DimensionError(ValueError):
    """An id is out of range for the declared number of images/subjects."""


class NumericError(ArithmeticError):
    """A non-finite value appeared in an objective/gradient evaluation."""


@dataclass(frozen=True)
class Trial:
    subject_id: int
    left_image: int
    right_image: int
    task_target_side: Side = Side.NONE
    familiar_side: Side = Side.NONE
    outcome: Outcome = Outcome.RIGHT_FIRST

    def __post_init__(self):
        if self.left_image == self.right_image:
            raise ValueError("a trial must pair two distinct images")
        if min(self.left_image, self.right_image, self.subject_id) < 0:
            raise ValueError("ids must be nonnegative")


@dataclass(frozen=True)
class DesignRow:
    """Sparse row of the extended design matrix.

    Column layout: [0, M) image columns, M task, M+1 familiarity,
    [M+2, M+2+K) subject columns.
    """

    entries: tuple[tuple[int, int], ...]
    label: int  # +1 right fixated first, -1 left


@dataclass(frozen=True)
class FitConfig:
    C: float = 1.0
    tol: float = 1e-8
    max_iter: int = 10000

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class GlobalSalienceModel:
    """Fitted coefficients: per-image scores plus nuisance terms."""

    w: np.ndarray          # length M, global salience scores
    tau: float             # task coefficient
    phi: float             # familiarity coefficient
    s: np.ndarray          # length K, per-subject lateral bias
    M: int
    K: int
    C: float = 1.0
    converged: bool = True
    n_iter: int = 0
    final_objective: float = field(default=float("nan"))

    @property
    def theta(self) -> np.ndarray:
        """Concatenated parameter vector [w, tau, phi, s]."""
        return np.concatenate([self.w, [self.tau, self.phi], self.s])

    @classmethod
    def from_theta(cls, theta: np.ndarray, M: int, K: int, **kw) -> "GlobalSalienceModel":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (M + 2 + K,):
            raise DimensionError(
                f"theta has length {theta.shape[0]}, expected {M + 2 + K}")
        return cls(w=theta[:M].copy(), tau=float(theta[M]), phi=float(theta[M + 1]),
                   s=theta[M + 2:].copy(), M=M, K=K, **kw)


def n_columns(M: int, K: int) -> int:
    return M + 2 + K


_SIDE_SIGN = {Side.NONE: 0, Side.LEFT: -1, Side.RIGHT: +1}


def encode_trial(trial: Trial, M: int, K: int) -> DesignRow:
    """Encode one trial as a sparse design row.

    Right image gets +1, left image -1; the task and familiarity columns
    get the sign of the side they point at; the subject column gets +1.
    Label is +1 iff the right image was fixated first.
    """
    if trial.left_image >= M or trial.right_image >= M:
        raise DimensionError(f"image id out of range for M={M}")
    if trial.subject_id >= K:
        raise DimensionError(f"subject id {trial.subject_id} out of range for K={K}")

    entries = [(trial.right_image, +1), (trial.left_image, -1)]
    t = _SIDE_SIGN[trial.task_target_side]
    if t:
        entries.append((M, t))
    f = _SIDE_SIGN[trial.familiar_side]
    if f:
        entries.append((M + 1, f))
    entries.append((M + 2 + trial.subject_id, +1))
    label = +1 if trial.outcome is Outcome.RIGHT_FIRST else -1
    return DesignRow(entries=tuple(entries), label=label)


def rows_to_dense(rows: list[DesignRow], M: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Materialize sparse rows as a dense (X, y) pair."""
    X = np.zeros((len(rows), n_columns(M, K)))
    y = np.empty(len(rows))
    for i, row in enumerate(rows):
        for j, v in row.entries:
            X[i, j] = v
        y[i] = row.label
    return X, y


def _sigmoid(z):
    # piecewise form avoids overflow in exp for large |z|
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_prob(model: GlobalSalienceModel, row: DesignRow) -> float:
    """Probability that the right image is fixated first (label +1)."""
    theta = model.theta
    ncol = n_columns(model.M, model.K)
    z = 0.0
    for j, v in row.entries:
        if j >= ncol:
            raise DimensionError(f"column {j} out of range for model with {ncol} columns")
        z += theta[j] * v
    return float(_sigmoid(np.array([z]))[0])


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float) -> float:
    """0.5 ||theta||^2 + C * sum log(1 + exp(-y theta.x))."""
    margins = y * (X @ theta)
    val = 0.5 * float(theta @ theta) + C * float(np.logaddexp(0.0, -margins).sum())
    if not np.isfinite(val):
        raise NumericError("objective is not finite")
    return val


def gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float) -> np.ndarray:
    """theta - C * sum_i y_i x_i sigmoid(-y_i theta.x_i)."""
    if X.shape[1] != theta.shape[0]:
        raise DimensionError("design matrix and parameter vector disagree")
    margins = y * (X @ theta)
    g = theta - C * (X.T @ (y * _sigmoid(-margins)))
    if not np.all(np.isfinite(g)):
        raise NumericError("gradient is not finite")
    return g


def objective_rows(model: GlobalSalienceModel, rows: list[DesignRow],
                   config: FitConfig) -> float:
    X, y = rows_to_dense(rows, model.M, model.K)
    return objective(model.theta, X, y, config.C)


def gradient_rows(model: GlobalSalienceModel, rows: list[DesignRow],
                  config: FitConfig) -> np.ndarray:
    X, y = rows_to_dense(rows, model.M, model.K)
    return gradient(model.theta, X, y, config.C)


def fit(rows: list[DesignRow], M: int, K: int,
        config: FitConfig = FitConfig(), verbose: bool = False) -> GlobalSalienceModel:
    """Fit by full-batch gradient descent with Armijo backtracking.

    The problem is smooth and strictly convex (the L2 term), so plain
    descent to a gradient-infinity-norm tolerance finds the unique
    optimum. Starts at theta = 0 for determinism.
    """
    if not rows:
        raise ValueError("cannot fit on an empty trial set")
    X, y = rows_to_dense(rows, M, K)

    theta = np.zeros(n_columns(M, K))
    fval = objective(theta, X, y, config.C)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        g = gradient(theta, X, y, config.C)
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= config.tol:
            converged = True
            break
        # Armijo backtracking along -g; slope factor 1e-4, shrink 0.5
        gg = float(g @ g)
        t = min(step * 2.0, 1e4)  # allow the step to grow back after shrinks
        while True:
            trial_theta = theta - t * g
            trial_val = objective(trial_theta, X, y, config.C)
            if trial_val <= fval - 1e-4 * t * gg:
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20:
            # step underflow: no descent progress possible at this scale
            break
        theta, fval, step = trial_theta, trial_val, t
        if verbose and it % 100 == 0:
            print(f"iter {it:6d}  obj {fval:.10f}  |g|_inf {gnorm:.3e}")

    return GlobalSalienceModel.from_theta(
        theta, M, K, C=config.C, converged=converged, n_iter=it,
        final_objective=fval)


def rank_images(model: GlobalSalienceModel) -> list[tuple[int, float]]:
    """Images sorted by descending salience score; ties by ascending id."""
    order = sorted(range(model.M), key=lambda j: (-model.w[j], j))
    return [(j, float(model.w[j])) for j in order]
