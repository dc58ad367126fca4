"""Bounded losses for online linear prediction.

Two loss families are supported, both evaluated on a linear predictor h
against a point (x, y):

* hinge:   (1 - y <h, x>)_+   for labels y in {-1, +1}
* squared: (y - <h, x>)^2

Reported losses are clipped at a positive threshold K so that every value
lies in [0, K].  Subgradients and proximal steps act on the *unclipped*
convex loss (except that the subgradient is zero on the clipped plateau),
since the clipped loss is non-convex and has no useful proximal map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

HINGE = "hinge"
SQUARED = "squared"

CLASSIFICATION = "classification"
REGRESSION = "regression"

#: Default clipping thresholds, large enough to be inactive on
#: standardized data.
DEFAULT_THRESHOLD = {HINGE: 10.0, SQUARED: 100.0}


class DimensionMismatchError(ValueError):
    """Predictor and feature vector have different dimensions."""


@dataclass(frozen=True)
class DataPoint:
    """A single observation: feature vector ``x`` and real label ``y``."""

    x: np.ndarray
    y: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))
        if not np.all(np.isfinite(x)) or not np.isfinite(self.y):
            raise ValueError("data point has non-finite coordinates")


@dataclass
class Dataset:
    """An ordered stream of points. Order matters: it defines the rounds."""

    X: np.ndarray  # (m, d)
    y: np.ndarray  # (m,)
    task: str = REGRESSION

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y length mismatch")
        if self.X.shape[0] < 1:
            raise ValueError("dataset must contain at least one point")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite values")
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == CLASSIFICATION and not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("classification labels must be in {-1, +1}")

    def __len__(self):
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def point(self, i: int) -> DataPoint:
        return DataPoint(self.X[i], self.y[i])


@dataclass(frozen=True)
class LossSpec:
    """Loss family plus clipping threshold."""

    family: str
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.family not in (HINGE, SQUARED):
            raise ValueError(f"unknown loss family {self.family!r}")
        k = self.threshold
        if k is None:
            k = DEFAULT_THRESHOLD[self.family]
        k = float(k)
        if not (k > 0):
            raise ValueError("threshold must be positive")
        object.__setattr__(self, "threshold", k)


def _check_dims(h: np.ndarray, x: np.ndarray):
    if h.shape != x.shape:
        raise DimensionMismatchError(
            f"predictor dim {h.shape} != feature dim {x.shape}"
        )


def raw_loss_from_pred(loss: LossSpec, pred, y):
    """Unclipped loss given the prediction <h, x>. Vectorized."""
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if loss.family == HINGE:
        return np.maximum(0.0, 1.0 - y * pred)
    return (y - pred) ** 2


def eval_loss_from_pred(loss: LossSpec, pred, y):
    """Clipped loss given the prediction <h, x>. Vectorized."""
    return np.minimum(raw_loss_from_pred(loss, pred, y), loss.threshold)


def raw_loss(loss: LossSpec, h: np.ndarray, z: DataPoint) -> float:
    h = np.asarray(h, dtype=float)
    _check_dims(h, z.x)
    return float(raw_loss_from_pred(loss, h @ z.x, z.y))


def eval_loss(loss: LossSpec, h: np.ndarray, z: DataPoint) -> float:
    """Clipped loss value, in [0, threshold]."""
    return min(raw_loss(loss, h, z), loss.threshold)


def subgradient(loss: LossSpec, h: np.ndarray, z: DataPoint) -> np.ndarray:
    """A subgradient of the clipped loss at h.

    On the clipped plateau (raw loss above the threshold) the loss is
    locally constant and the zero vector is returned.  At the hinge kink
    the active-side element -y*x is chosen for determinism.
    """
    h = np.asarray(h, dtype=float)
    _check_dims(h, z.x)
    pred = h @ z.x
    raw = float(raw_loss_from_pred(loss, pred, z.y))
    if raw > loss.threshold:
        return np.zeros_like(h)
    if loss.family == HINGE:
        if 1.0 - z.y * pred <= 0.0:
            return np.zeros_like(h)
        return -z.y * z.x
    return -2.0 * (z.y - pred) * z.x


def prox(loss: LossSpec, z: DataPoint, v: np.ndarray, tau: float) -> np.ndarray:
    """argmin_u raw_loss(u, z) + ||u - v||^2 / (2 tau), in closed form.

    Uses the unclipped convex loss.  For the hinge with a zero feature
    vector the loss is constant in u and v is returned unchanged.
    """
    v = np.asarray(v, dtype=float)
    _check_dims(v, z.x)
    if not (tau > 0):
        raise ValueError("tau must be positive")
    xx = float(z.x @ z.x)
    if loss.family == HINGE:
        margin = 1.0 - z.y * (v @ z.x)
        yxx = z.y**2 * xx  # curvature of the margin along the descent ray
        if margin <= 0.0 or yxx == 0.0:
            return v.copy()
        step = min(tau, margin / yxx)
        return v + step * z.y * z.x
    resid = z.y - v @ z.x
    return v + (2.0 * tau * resid / (1.0 + 2.0 * tau * xx)) * z.x


@dataclass
class RunConfig:
    """Configuration of one online run."""

    algorithm: str
    lam: Optional[float] = None  # scale parameter; None = algorithm default
    sigma: Optional[float] = None  # Gaussian std (priors / noise)
    delta: float = 0.05
    seed: int = 0
    n_particles: int = 2000
    prior_family: str = "gaussian"  # gibbs only: gaussian | laplace
    variant: Optional[str] = None  # noisy-prox only: pointwise | renyi
    eta: Optional[float] = None  # ogd step size; None = 1/sqrt(m)
    radius: float = np.inf  # ogd projection radius
    checkpoints: Optional[list] = None

    def __post_init__(self):
        if self.lam is not None and not (self.lam > 0):
            raise ValueError("lam must be positive")
        if self.sigma is not None and not (self.sigma > 0):
            raise ValueError("sigma must be positive")
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")
        if self.n_particles < 1:
            raise ValueError("need at least one particle")


@dataclass
class RunTrace:
    """Per-step record of an online run."""

    losses: np.ndarray  # instantaneous clipped losses, (m,)
    predictors: np.ndarray  # per-step predictor summary, (m, d)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.losses = np.asarray(self.losses, dtype=float)
        self.predictors = np.atleast_2d(np.asarray(self.predictors, dtype=float))

    @property
    def avg_cum_losses(self) -> np.ndarray:
        m = len(self.losses)
        return np.cumsum(self.losses) / np.arange(1, m + 1)

    def __len__(self):
        return len(self.losses)
