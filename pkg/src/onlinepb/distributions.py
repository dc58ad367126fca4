"""Fixed-variance Gaussian / Laplace measures and weighted particle ensembles.

A sequentially reweighted ensemble keeps a fixed particle set (drawn once
from the initial prior) and evolves log-weights only, so that after m
exponential-weight updates the log-weight of particle j is exactly
``-lam * sum_i loss(h_j, z_i)`` up to an additive constant.  All weight
arithmetic stays in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataPoint, LossSpec, eval_loss_from_pred


def run_rng(seed: int, *key: int) -> np.random.Generator:
    """Seedable generator; distinct ``key`` tuples give independent streams."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


@dataclass(frozen=True)
class GaussianFixedVar:
    """Isotropic Gaussian N(mean, var * I_d)."""

    mean: np.ndarray
    var: float

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "mean", mean)
        if not (self.var > 0):
            raise ValueError("variance must be positive")
        if not np.all(np.isfinite(mean)):
            raise ValueError("mean must be finite")

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        shape = self.d if n is None else (n, self.d)
        return self.mean + np.sqrt(self.var) * rng.standard_normal(shape)


@dataclass(frozen=True)
class LaplacePrior:
    """iid standard Laplace coordinates (location 0, scale 1)."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        shape = self.d if n is None else (n, self.d)
        return rng.laplace(size=shape)


class EnsembleCollapseError(RuntimeError):
    """Every particle carries zero weight."""


@dataclass
class ParticleEnsemble:
    particles: np.ndarray  # (N, d)
    log_weights: np.ndarray  # (N,)

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        self.log_weights = np.asarray(self.log_weights, dtype=float).ravel()
        if self.particles.shape[0] != self.log_weights.shape[0]:
            raise ValueError("particles / log_weights length mismatch")
        if self.particles.shape[0] < 1:
            raise ValueError("need at least one particle")
        if not np.all(np.isfinite(self.particles)):
            raise ValueError("particles must be finite")

    @property
    def n(self) -> int:
        return self.particles.shape[0]

    def normalized_weights(self) -> np.ndarray:
        return normalized_weights(self.log_weights)


def normalized_weights(log_weights: np.ndarray) -> np.ndarray:
    """softmax of log-weights, stabilized; raises on total collapse."""
    lw = np.asarray(log_weights, dtype=float)
    finite = lw[np.isfinite(lw)]
    if finite.size == 0:
        raise EnsembleCollapseError("all particle weights vanished")
    shifted = lw - finite.max()
    w = np.exp(shifted, where=np.isfinite(shifted), out=np.zeros_like(shifted))
    return w / w.sum()


def init_ensemble(prior, n: int, rng: np.random.Generator) -> ParticleEnsemble:
    """n iid draws from the prior with uniform weights."""
    if n < 1:
        raise ValueError("need at least one particle")
    particles = prior.sample(rng, n)
    return ParticleEnsemble(particles, np.zeros(n))


def gibbs_update(
    e: ParticleEnsemble, loss: LossSpec, z: DataPoint, lam: float
) -> ParticleEnsemble:
    """Exponential-weight update: log_weights -= lam * loss(particle, z).

    Particles are shared with the input ensemble; normalization is
    deferred to the log domain.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    losses = eval_loss_from_pred(loss, e.particles @ z.x, z.y)
    return ParticleEnsemble(e.particles, e.log_weights - lam * losses)


def posterior_mean(e: ParticleEnsemble) -> np.ndarray:
    """Self-normalized weighted average of the particles."""
    return normalized_weights(e.log_weights) @ e.particles


def effective_sample_size(e: ParticleEnsemble) -> float:
    """1 / sum(p^2): weight-degeneracy diagnostic in [1, N]."""
    p = e.normalized_weights()
    return float(1.0 / np.sum(p**2))


def ensemble_kl(log_weights_post: np.ndarray, log_weights_prior: np.ndarray) -> float:
    """KL between two reweightings of the same particle set."""
    p = normalized_weights(log_weights_post)
    q = normalized_weights(log_weights_prior)
    mask = p > 0
    if np.any(q[mask] == 0):
        return np.inf
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def kl_gaussian_fixed_var(w1, w2, var: float) -> float:
    """KL(N(w1, var I) || N(w2, var I)) = ||w1 - w2||^2 / (2 var)."""
    if not (var > 0):
        raise ValueError("variance must be positive")
    diff = np.asarray(w1, dtype=float) - np.asarray(w2, dtype=float)
    return float(diff @ diff / (2.0 * var))


def renyi2_gaussian_fixed_var(w1, w2, var: float) -> float:
    """Order-2 Renyi divergence between equal-variance isotropic Gaussians."""
    if not (var > 0):
        raise ValueError("variance must be positive")
    diff = np.asarray(w1, dtype=float) - np.asarray(w2, dtype=float)
    return float(diff @ diff / var)


def gaussian_log_density_ratio(h, w1, w2, var: float) -> float:
    """log dN(w1, var I)/dN(w2, var I) evaluated at h."""
    if not (var > 0):
        raise ValueError("variance must be positive")
    h = np.asarray(h, dtype=float)
    d1 = h - np.asarray(w1, dtype=float)
    d2 = h - np.asarray(w2, dtype=float)
    return float((d2 @ d2 - d1 @ d1) / (2.0 * var))
