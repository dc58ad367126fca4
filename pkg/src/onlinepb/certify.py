"""Monte-Carlo certification of the probabilistic bounds.

``coverage_experiment`` repeatedly draws a fresh synthetic stream, runs
the paired learner, estimates the bound's left-hand side (a sum of
conditional risks) by Monte Carlo and counts how often it exceeds the
right-hand side.  A 3-sigma buffer on the Monte-Carlo error keeps
estimation noise from being scored as a violation, so the empirical
coverage should sit at or above 1 - delta up to binomial fluctuation.

``exp_moment_probe`` checks the exponential-moment inequality
E[exp(lam * sum of centered losses)] <= exp(lam^2 m K^2 / 2)
on streams whose loss is two-valued with a known conditional mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, LossSpec, SQUARED, raw_loss_from_pred, eval_loss_from_pred
from .distributions import ensemble_kl, normalized_weights, run_rng
from .learners import PSI_POINTWISE, PSI_RENYI, gibbs_run, noisy_prox_run
from .pac_bounds import (
    disintegrated_penalty,
    naive_bound_rhs,
    opb_test_rhs,
    opb_train_rhs,
    optimal_lambda_test,
)
from .streams import MARKOV_AR1, SyntheticStream, generate, sample_conditional

GIBBS = "gibbs"
NOISY_PROX = "noisy_prox"
OGD = "ogd"

#: bound id -> compatible algorithm
BOUND_ALGORITHMS = {
    "opb_test": GIBBS,
    "opb_train": GIBBS,
    "naive": GIBBS,
    "prox_test_pointwise": NOISY_PROX,
    "prox_test_renyi": NOISY_PROX,
    "prox_train_pointwise": NOISY_PROX,
    "prox_train_renyi": NOISY_PROX,
}

_KEY_COVER_MC = 3
_KEY_COVER_ALG = 4


@dataclass
class CoverageResult:
    bound: str
    delta: float
    repetitions: int
    violations: int
    lhs: np.ndarray
    rhs: np.ndarray
    se: np.ndarray
    clipped_reps: int = 0
    params: dict = field(default_factory=dict)

    @property
    def coverage(self) -> float:
        return (self.repetitions - self.violations) / self.repetitions

    def passes_envelope(self) -> bool:
        return self.violations <= binomial_envelope(self.repetitions, self.delta)


def binomial_envelope(R: int, delta: float) -> float:
    """Largest violation count compatible with a true rate delta (3 sigma)."""
    return delta * R + 3.0 * np.sqrt(R * delta * (1.0 - delta))


def _chunked_clipped_losses(loss, H, X, y, out=None):
    """Clipped losses of predictors H (n, d) on points (X, y): (n, len(y))."""
    preds = H @ X.T
    return eval_loss_from_pred(loss, preds, y)


def _iid_risk(loss, H, stream, n_mc, rng, chunk=200):
    """Per-predictor conditional risk on an iid stream with shared draws.

    Returns (risk, L) where risk[j] is the MC risk of H[j] and L is the
    (n, n_mc) clipped loss matrix (kept for the standard-error reduction).
    """
    Xp, yp = sample_conditional(stream, None, n_mc, rng)
    n = H.shape[0]
    L = np.empty((n, n_mc))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        L[start:stop] = _chunked_clipped_losses(loss, H[start:stop], Xp, yp)
    return L.mean(axis=1), L


def _weighted_lhs_iid(coeffs, L):
    """LHS estimate sum_j coeffs_j * risk_j with its standard error."""
    G = coeffs @ L  # per-draw weighted losses, (n_mc,)
    n_mc = G.shape[0]
    return float(G.mean()), float(G.std(ddof=1) / np.sqrt(n_mc))


def _markov_weighted_lhs(loss, stream, coeff_rows, H, data, n_mc, rng):
    """Per-step conditional-law version used for markov streams.

    ``coeff_rows`` is (m, n): round-i weights over the rows of H (for a
    sampled-predictor bound each row is an indicator).  Standard errors
    add in quadrature since each round uses fresh draws.
    """
    m = len(data)
    total, var = 0.0, 0.0
    prev = np.zeros(stream.d)
    for i in range(m):
        Xp, yp = sample_conditional(stream, prev, n_mc, rng)
        L = _chunked_clipped_losses(loss, H, Xp, yp)
        G = coeff_rows[i] @ L
        total += G.mean()
        var += G.var(ddof=1) / n_mc
        prev = data.X[i]
    return float(total), float(np.sqrt(var))


def _round_lhs(loss, stream, coeff_rows, H, data, n_mc, rng):
    if stream.family == MARKOV_AR1:
        return _markov_weighted_lhs(loss, stream, coeff_rows, H, data, n_mc, rng)
    risk, L = _iid_risk(loss, H, stream, n_mc, rng)
    return _weighted_lhs_iid(coeff_rows.sum(axis=0), L)


def _raw_exceeds_threshold(loss, H, data) -> bool:
    preds = np.einsum("id,id->i", H, data.X)
    return bool(np.any(raw_loss_from_pred(loss, preds, data.y) > loss.threshold))


def coverage_experiment(
    algorithm: str,
    bound: str,
    stream: SyntheticStream,
    R: int = 200,
    delta: float = 0.05,
    n_mc: int = 10_000,
    loss: LossSpec | None = None,
    lam_bound: float | None = None,
    lam_alg: float | None = None,
    sigma: float = 0.1,
    n_particles: int = 800,
    prior_sigma: float = 1.5,
    seed: int = 0,
) -> CoverageResult:
    """Empirical coverage of one bound over R independent repetitions.

    The algorithm is rerun on a fresh stream draw each repetition; the
    left-hand side is estimated with ``n_mc`` conditional draws and a
    violation is scored only when LHS > RHS + 3 * (MC standard error).
    """
    if bound not in BOUND_ALGORITHMS:
        raise ValueError(f"unknown bound id {bound!r}")
    if BOUND_ALGORITHMS[bound] != algorithm:
        raise ValueError(f"bound {bound!r} applies to {BOUND_ALGORITHMS[bound]!r} runs, "
                         f"not {algorithm!r}")
    if R < 1:
        raise ValueError("need at least one repetition")
    if loss is None:
        family = SQUARED if stream.task == "regression" else "hinge"
        loss = LossSpec(family)
    m = stream.m
    K = loss.threshold
    if lam_bound is None:
        lam_bound = optimal_lambda_test(m, K, delta)
    if lam_alg is None:
        lam_alg = 1.0 / m

    lhs_vals = np.empty(R)
    rhs_vals = np.empty(R)
    se_vals = np.empty(R)
    clipped = 0

    for r in range(R):
        data = generate(stream, rep=r)
        rng_mc = run_rng(seed, _KEY_COVER_MC, r)
        rng_alg = run_rng(seed, _KEY_COVER_ALG, r)
        if algorithm == GIBBS:
            lhs, rhs, se, clip = _gibbs_rep(
                bound, data, stream, loss, lam_alg, lam_bound, delta,
                n_particles, prior_sigma, n_mc, rng_alg, rng_mc)
        else:
            variant = PSI_POINTWISE if bound.endswith("pointwise") else PSI_RENYI
            lhs, rhs, se, clip = _prox_rep(
                bound, variant, data, stream, loss, lam_alg, lam_bound, delta,
                sigma, n_mc, rng_alg, rng_mc)
        lhs_vals[r], rhs_vals[r], se_vals[r] = lhs, rhs, se
        clipped += int(clip)

    violations = int(np.sum(lhs_vals > rhs_vals + 3.0 * se_vals))
    return CoverageResult(
        bound=bound,
        delta=delta,
        repetitions=R,
        violations=violations,
        lhs=lhs_vals,
        rhs=rhs_vals,
        se=se_vals,
        clipped_reps=clipped,
        params={
            "lam_bound": lam_bound,
            "lam_alg": lam_alg,
            "n_mc": n_mc,
            "threshold": K,
            "stream": stream,
        },
    )


def _gibbs_rep(bound, data, stream, loss, lam_alg, lam_bound, delta,
               n_particles, prior_sigma, n_mc, rng_alg, rng_mc):
    m, K = len(data), loss.threshold
    trace = gibbs_run(
        data, loss, lam=lam_alg, prior="gaussian", sigma=prior_sigma,
        n_particles=n_particles, rng=rng_alg, record_weights=True)
    particles = trace.extras["ensemble"].particles
    lw_hist = trace.extras["log_weight_history"]  # (m + 1, N)
    P = np.vstack([normalized_weights(lw) for lw in lw_hist])

    # particle losses on the observed stream, (N, m)
    L_obs = eval_loss_from_pred(
        loss, particles @ data.X.T, data.y[np.newaxis, :])

    if bound == "opb_test":
        coeff_rows = P[:m]  # round i uses the pre-update posterior
        empirical = float(np.einsum("ij,ji->", coeff_rows, L_obs))
        rhs = opb_test_rhs(empirical, lam_bound, m, K, delta).total
    else:
        coeff_rows = P[1 : m + 1]  # round i uses the post-update posterior
        empirical = float(np.einsum("ij,ji->", coeff_rows, L_obs))
        kl_terms = [ensemble_kl(lw_hist[i + 1], lw_hist[i]) for i in range(m)]
        if bound == "opb_train":
            rhs = opb_train_rhs(empirical, kl_terms, lam_bound, m, K, delta).total
        else:
            rhs = naive_bound_rhs(empirical, kl_terms, lam_bound, m, K, delta).total

    lhs, se = _round_lhs(loss, stream, coeff_rows, particles, data, n_mc, rng_mc)
    raw = raw_loss_from_pred(loss, particles @ data.X.T, data.y[np.newaxis, :])
    clip = bool(np.any(raw > loss.threshold))
    return lhs, rhs, se, clip


def prox_divergence(means, noises, sigma2, variant, lam_bound) -> float:
    """Accumulated divergence term of the training-data bound for a
    noisy proximal run.

    ``means`` is the (m + 1, d) sequence of learner means, ``noises`` the
    (m, d) Gaussian draws.  For the pointwise variant this is the summed
    log-density ratio of each updated measure against its prior, evaluated
    at the drawn predictor; for the renyi variant the summed order-2
    Renyi divergence between consecutive measures, halved.
    """
    m = len(noises)
    if variant == PSI_POINTWISE:
        H = means[1 : m + 1] + noises  # h_i = w_{i+1} + eps_i
        diff_post = H - means[1 : m + 1]  # = eps_i
        diff_prior = H - means[:m]
        return float(np.sum(
            (np.einsum("id,id->i", diff_prior, diff_prior)
             - np.einsum("id,id->i", diff_post, diff_post)) / (2.0 * sigma2)
        )) / lam_bound
    steps = means[1 : m + 1] - means[:m]
    return float(np.einsum("id,id->", steps, steps) / sigma2) / (2.0 * lam_bound)


def _prox_rep(bound, variant, data, stream, loss, lam_alg, lam_bound, delta,
              sigma, n_mc, rng_alg, rng_mc):
    m, K = len(data), loss.threshold
    trace = noisy_prox_run(data, loss, lam_alg, sigma, variant, rng=rng_alg)
    means = trace.extras["means"]  # (m + 1, d)
    noises = trace.extras["noises"]  # (m, d)
    sigma2 = sigma**2

    if bound.startswith("prox_test"):
        H = means[:m] + noises  # h_i = w_i + eps_i, no peek at z_i
        empirical = float(trace.extras["test_losses"].sum())
        kind = "test_pointwise" if variant == PSI_POINTWISE else "test_renyi"
        rhs = empirical + disintegrated_penalty(kind, lam_bound, m, K, delta)
    else:
        H = trace.predictors  # h_i = w_{i+1} + eps_i
        empirical = float(trace.losses.sum())
        div = prox_divergence(means, noises, sigma2, variant, lam_bound)
        kind = ("train_pointwise" if variant == PSI_POINTWISE else "train_renyi")
        rhs = empirical + div + disintegrated_penalty(kind, lam_bound, m, K, delta)

    coeff_rows = np.eye(m)  # sampled predictors: one row per round
    lhs, se = _round_lhs(loss, stream, coeff_rows, H, data, n_mc, rng_mc)
    clip = _raw_exceeds_threshold(loss, H, data)
    return lhs, rhs, se, clip


@dataclass
class ProbeResult:
    estimate: float
    bound: float
    ratio: float
    se_relative: float
    lam: float
    m: int
    threshold: float
    repetitions: int


def exp_moment_probe(
    lam: float,
    m: int,
    K: float,
    R: int,
    seed: int = 0,
    p: float = 0.5,
) -> ProbeResult:
    """Estimate the exponential moment of the centered cumulative loss on a
    two-valued loss stream and compare it against exp(lam^2 m K^2 / 2).

    Each round's loss is K with probability p and 0 otherwise, independent
    of the past, so the conditional mean is exactly p*K and the centered
    losses are known without estimation.  Accumulation stays in the log
    domain; the reported ratio estimate/bound should not exceed 1 beyond
    Monte-Carlo error.
    """
    if R < 1:
        raise ValueError("need at least one repetition")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not (0 <= p <= 1):
        raise ValueError("p must lie in [0, 1]")
    rng = run_rng(seed, 7)
    losses = K * (rng.random((R, m)) < p)
    exponents = lam * (p * K - losses).sum(axis=1)  # lam * sum of centered losses
    shift = exponents.max()
    vals = np.exp(exponents - shift)
    log_estimate = shift + np.log(vals.mean())
    log_bound = lam**2 * m * K**2 / 2.0
    se_rel = float(vals.std(ddof=1) / (np.sqrt(R) * vals.mean())) if R > 1 else np.inf
    return ProbeResult(
        estimate=float(np.exp(log_estimate)),
        bound=float(np.exp(log_bound)),
        ratio=float(np.exp(log_estimate - log_bound)),
        se_relative=se_rel,
        lam=lam,
        m=m,
        threshold=K,
        repetitions=R,
    )
