"""Synthetic data streams with tractable conditional laws.

Each family fixes a hidden weight vector (a deterministic function of the
stream seed) and defines, for every round, the conditional distribution
of the next point given the past.  This is what lets the coverage
harness integrate conditional risks by Monte Carlo.

Families:

* ``iid_gaussian_linear``: x ~ N(0, I_d), y = <w*, x> + noise * N(0, 1).
* ``iid_classification_margin``: x ~ N(0, I_d), y = sign(<w*, x>) with
  labels flipped independently with probability ``noise``.
* ``markov_ar1``: x_i = rho * x_{i-1} + N(0, I_d) innovation,
  y_i = <w*, x_i> + noise * N(0, 1); the conditional law at round i
  depends on x_{i-1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CLASSIFICATION, REGRESSION, Dataset, LossSpec, eval_loss_from_pred
from .distributions import run_rng

IID_GAUSSIAN_LINEAR = "iid_gaussian_linear"
IID_CLASSIFICATION_MARGIN = "iid_classification_margin"
MARKOV_AR1 = "markov_ar1"

FAMILIES = (IID_GAUSSIAN_LINEAR, IID_CLASSIFICATION_MARGIN, MARKOV_AR1)

# key offsets for the per-stream rng streams
_KEY_WEIGHTS = 0
_KEY_DATA = 1
_KEY_MC = 2


@dataclass(frozen=True)
class SyntheticStream:
    family: str
    d: int
    m: int
    noise: float = 0.5
    seed: int = 0
    rho: float = 0.8  # markov_ar1 only

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown stream family {self.family!r}")
        if self.m < 1:
            raise ValueError("stream length must be >= 1")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.noise < 0:
            raise ValueError("noise level must be nonnegative")
        if self.family == IID_CLASSIFICATION_MARGIN and not self.noise < 0.5:
            raise ValueError("label flip probability must be < 0.5")

    @property
    def task(self) -> str:
        if self.family == IID_CLASSIFICATION_MARGIN:
            return CLASSIFICATION
        return REGRESSION


def true_weights(stream: SyntheticStream) -> np.ndarray:
    """Hidden weight vector; a deterministic function of the stream seed."""
    rng = run_rng(stream.seed, _KEY_WEIGHTS)
    return rng.standard_normal(stream.d)


def _labels(stream, X, rng):
    signal = X @ true_weights(stream)
    if stream.family == IID_CLASSIFICATION_MARGIN:
        y = np.where(signal >= 0.0, 1.0, -1.0)
        flips = rng.random(len(y)) < stream.noise
        return np.where(flips, -y, y)
    return signal + stream.noise * rng.standard_normal(len(signal))


def generate(stream: SyntheticStream, rep: int = 0) -> Dataset:
    """Materialize repetition ``rep`` of the stream as a Dataset."""
    rng = run_rng(stream.seed, _KEY_DATA, rep)
    if stream.family == MARKOV_AR1:
        X = np.empty((stream.m, stream.d))
        x = np.zeros(stream.d)
        for i in range(stream.m):
            x = stream.rho * x + rng.standard_normal(stream.d)
            X[i] = x
    else:
        X = rng.standard_normal((stream.m, stream.d))
    y = _labels(stream, X, rng)
    return Dataset(X, y, task=stream.task)


def sample_conditional(stream: SyntheticStream, prev_x, n: int, rng) -> tuple:
    """n draws (X, y) from the conditional law of the next point.

    ``prev_x`` is the previous feature vector for markov_ar1 and is
    ignored for the iid families.
    """
    if stream.family == MARKOV_AR1:
        base = stream.rho * np.asarray(prev_x, dtype=float)
        X = base + rng.standard_normal((n, stream.d))
    else:
        X = rng.standard_normal((n, stream.d))
    y = _labels(stream, X, rng)
    return X, y


def conditional_risk(
    h,
    loss: LossSpec,
    stream: SyntheticStream,
    prev_x=None,
    n_mc: int = 10_000,
    rng=None,
) -> tuple[float, float]:
    """Monte-Carlo conditional expected loss of predictor h, with its
    standard error: (estimate, se)."""
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    if rng is None:
        rng = run_rng(stream.seed, _KEY_MC)
    X, y = sample_conditional(stream, prev_x, n_mc, rng)
    vals = eval_loss_from_pred(loss, X @ np.asarray(h, dtype=float), y)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_mc))
