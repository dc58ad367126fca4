"""The three online learners.

* ``gibbs_run``: sequential exponential-weight aggregation over a particle
  ensemble; predicts with the posterior mean.
* ``noisy_prox_run``: Gaussian learner with fixed variance.  Each round
  draws a noise vector eps ~ N(0, sigma^2 I), solves a proximal step on
  the noised loss and shifts the mean; two penalty variants are
  available ("pointwise" log-density-ratio and "renyi").
* ``ogd_run``: projected online gradient descent baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    Dataset,
    LossSpec,
    RunTrace,
    eval_loss,
    eval_loss_from_pred,
    prox,
    subgradient,
)
from .distributions import (
    GaussianFixedVar,
    LaplacePrior,
    effective_sample_size,
    gibbs_update,
    init_ensemble,
    posterior_mean,
)

PSI_POINTWISE = "pointwise"
PSI_RENYI = "renyi"


def gibbs_run(
    data: Dataset,
    loss: LossSpec,
    lam: Optional[float] = None,
    prior: str | object = "gaussian",
    sigma: float = 1.5,
    n_particles: int = 2000,
    rng: Optional[np.random.Generator] = None,
    record_weights: bool = False,
) -> RunTrace:
    """Sequential Gibbs aggregation: predict with the ensemble mean, then
    downweight each particle by exp(-lam * loss).

    lam defaults to 1/m.  ``record_weights`` keeps the (m+1, N) log-weight
    history in the trace extras (used by the coverage harness).
    """
    m, d = len(data), data.d
    if lam is None:
        lam = 1.0 / m
    if rng is None:
        rng = np.random.default_rng(0)
    if isinstance(prior, str):
        if prior == "gaussian":
            prior = GaussianFixedVar(np.zeros(d), sigma**2)
        elif prior == "laplace":
            prior = LaplacePrior(d)
        else:
            raise ValueError(f"unknown prior family {prior!r}")

    ensemble = init_ensemble(prior, n_particles, rng)
    losses = np.empty(m)
    expected_losses = np.empty(m)  # E_{h ~ Q_i}[loss(h, z_i)]
    predictors = np.empty((m, d))
    ess = np.empty(m)
    history = [ensemble.log_weights.copy()] if record_weights else None

    for i in range(m):
        z = data.point(i)
        h = posterior_mean(ensemble)
        predictors[i] = h
        losses[i] = eval_loss(loss, h, z)
        p = ensemble.normalized_weights()
        particle_losses = eval_loss_from_pred(loss, ensemble.particles @ z.x, z.y)
        expected_losses[i] = p @ particle_losses
        ess[i] = effective_sample_size(ensemble)
        ensemble = gibbs_update(ensemble, loss, z, lam)
        if record_weights:
            history.append(ensemble.log_weights.copy())

    extras = {
        "ensemble": ensemble,
        "expected_losses": expected_losses,
        "ess": ess,
        "lam": lam,
    }
    if record_weights:
        extras["log_weight_history"] = np.asarray(history)
    return RunTrace(losses, predictors, extras)


@dataclass
class NoisyProxState:
    """Current mean of the fixed-variance Gaussian learner."""

    mean: np.ndarray
    sigma2: float
    lam: float
    variant: str = PSI_POINTWISE

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if not (self.sigma2 > 0 and self.lam > 0):
            raise ValueError("sigma2 and lam must be positive")
        if self.variant not in (PSI_POINTWISE, PSI_RENYI):
            raise ValueError(f"unknown variant {self.variant!r}")


def noisy_prox_step(state: NoisyProxState, z, eps: np.ndarray, loss: LossSpec,
                    prior_mean: Optional[np.ndarray] = None):
    """One update of the noised proximal learner.

    With u = w + eps the round objective reduces to a proximal step on the
    raw loss with weight tau = lam * sigma^2; the anchor is the prior mean
    for the pointwise variant and the prior mean plus eps for the renyi
    variant.  Returns (next_mean, predictor, incurred_loss) where the
    predictor is next_mean + eps.
    """
    eps = np.asarray(eps, dtype=float)
    w0 = state.mean if prior_mean is None else np.asarray(prior_mean, dtype=float)
    tau = state.lam * state.sigma2
    anchor = w0 if state.variant == PSI_POINTWISE else w0 + eps
    u = prox(loss, z, anchor, tau)
    w_next = u - eps
    h = u  # equals w_next + eps
    return w_next, h, eval_loss(loss, h, z)


def noisy_prox_run(
    data: Dataset,
    loss: LossSpec,
    lam: float,
    sigma: float,
    variant: str = PSI_POINTWISE,
    rng: Optional[np.random.Generator] = None,
    w_init: Optional[np.ndarray] = None,
    prior_mean_rule: Optional[Callable] = None,
) -> RunTrace:
    """Run the noised proximal learner over the stream.

    The recorded trace uses the training-mode predictor h_i = w_{i+1} + eps_i
    (the one the update produces); a test-mode trace with h_i = w_i + eps_i,
    which does not peek at z_i, is stored in extras["test_losses"].
    ``prior_mean_rule`` maps (current_mean, rng) to the round's prior mean;
    the default chains the learner's own mean.
    """
    m, d = len(data), data.d
    if rng is None:
        rng = np.random.default_rng(0)
    w = np.zeros(d) if w_init is None else np.asarray(w_init, dtype=float).copy()
    state = NoisyProxState(w, sigma**2, lam, variant)

    losses = np.empty(m)
    test_losses = np.empty(m)
    predictors = np.empty((m, d))
    means = np.empty((m + 1, d))
    noises = np.empty((m, d))
    means[0] = state.mean

    for i in range(m):
        z = data.point(i)
        eps = sigma * rng.standard_normal(d)
        noises[i] = eps
        test_losses[i] = eval_loss(loss, state.mean + eps, z)
        w0 = state.mean if prior_mean_rule is None else prior_mean_rule(state.mean, rng)
        w_next, h, lval = noisy_prox_step(state, z, eps, loss, prior_mean=w0)
        predictors[i] = h
        losses[i] = lval
        state.mean = w_next
        means[i + 1] = w_next

    extras = {
        "test_losses": test_losses,
        "means": means,
        "noises": noises,
        "lam": lam,
        "sigma": sigma,
        "variant": variant,
    }
    return RunTrace(losses, predictors, extras)


def project_ball(theta: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(theta))
    if norm <= radius or not np.isfinite(radius):
        return theta
    return theta * (radius / norm)


def ogd_run(
    data: Dataset,
    loss: LossSpec,
    eta: Optional[float] = None,
    radius: float = np.inf,
) -> RunTrace:
    """Projected online gradient descent from 0 with fixed step.

    eta defaults to 1/sqrt(m); radius=inf disables the projection.
    """
    m, d = len(data), data.d
    if eta is None:
        eta = 1.0 / np.sqrt(m)
    if not (eta > 0):
        raise ValueError("eta must be positive")
    theta = np.zeros(d)
    losses = np.empty(m)
    predictors = np.empty((m, d))
    for i in range(m):
        z = data.point(i)
        predictors[i] = theta
        losses[i] = eval_loss(loss, theta, z)
        theta = project_ball(theta - eta * subgradient(loss, theta, z), radius)
    return RunTrace(losses, predictors, {"eta": eta, "radius": radius, "final": theta})


def ogd_regret_bound(D: float, G: float, eta: float, T: int) -> float:
    """Static-regret bound for projected OGD with fixed step:
    D^2/(2 eta) + eta * T * G^2."""
    if not (D > 0 and G > 0 and eta > 0 and T > 0):
        raise ValueError("all inputs must be positive")
    return D**2 / (2.0 * eta) + eta * T * G**2
