import numpy as np
import pytest

from gazesal.pairwise import Outcome, Side, Trial

SIDES = [Side.NONE, Side.LEFT, Side.RIGHT]


def sample_theta(M, K, rng):
    """Standard-normal parameter draw [w, tau, phi, s]."""
    return rng.standard_normal(M + 2 + K)


def sample_trials(theta, M, K, n, rng, with_nuisance=True):
    """Draw trials from the pairwise logistic model at parameters theta.

    Returns (trials, bayes_rate), where the Bayes rate is the accuracy of
    the generator itself, max(p, 1-p) averaged over the drawn trials.
    """
    w = theta[:M]
    tau, phi = theta[M], theta[M + 1]
    s = theta[M + 2:]
    trials = []
    best = np.empty(n)
    sign = {Side.NONE: 0, Side.LEFT: -1, Side.RIGHT: +1}
    for i in range(n):
        left, right = rng.choice(M, size=2, replace=False)
        subj = int(rng.integers(K))
        task = SIDES[rng.integers(3)] if with_nuisance else Side.NONE
        fam = SIDES[rng.integers(3)] if with_nuisance else Side.NONE
        z = w[right] - w[left] + sign[task] * tau + sign[fam] * phi + s[subj]
        p = 1.0 / (1.0 + np.exp(-z))
        right_first = rng.random() < p
        trials.append(Trial(
            subject_id=subj, left_image=int(left), right_image=int(right),
            task_target_side=task, familiar_side=fam,
            outcome=Outcome.RIGHT_FIRST if right_first else Outcome.LEFT_FIRST))
        best[i] = max(p, 1.0 - p)
    return trials, float(best.mean())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
