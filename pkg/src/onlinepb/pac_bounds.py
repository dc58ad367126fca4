"""Numeric evaluators for the online PAC-Bayes bounds.

Every evaluator is pure arithmetic on scalars the caller supplies (the
empirical loss term and any divergence terms); all logarithms are
natural.  Results come back as a :class:`BoundReport` whose ``total`` is
the sum of its listed terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CSV_HEADER = (
    "bound,empirical,divergence,rate,confidence,total,lam,delta,threshold,m"
)


@dataclass
class BoundReport:
    bound: str
    empirical: float
    divergence: float
    rate: float
    confidence: float
    lam: float
    delta: float
    threshold: float
    m: int

    @property
    def total(self) -> float:
        return self.empirical + self.divergence + self.rate + self.confidence

    @property
    def penalty(self) -> float:
        """Everything except the empirical term."""
        return self.divergence + self.rate + self.confidence

    def csv_row(self) -> str:
        fields = [self.bound] + [
            repr(float(v))
            for v in (self.empirical, self.divergence, self.rate,
                      self.confidence, self.total, self.lam, self.delta,
                      self.threshold)
        ] + [str(self.m)]
        return ",".join(fields)


def _check_params(lam: float, m: int, K: float, delta: float):
    if not (lam > 0):
        raise ValueError("lam must be positive")
    if not (m >= 1):
        raise ValueError("m must be >= 1")
    if not (K > 0):
        raise ValueError("threshold K must be positive")
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")


def main_bound_rhs(empirical, kl_terms, lam, m, K, delta) -> BoundReport:
    """Cumulative bound: empirical + sum(KL)/lam + lam*m*K^2/2 + ln(1/delta)/lam."""
    _check_params(lam, m, K, delta)
    kl_terms = np.asarray(kl_terms, dtype=float)
    if np.any(kl_terms < 0):
        raise ValueError("KL terms must be nonnegative")
    return BoundReport(
        bound="main",
        empirical=float(empirical),
        divergence=float(kl_terms.sum()) / lam,
        rate=lam * m * K**2 / 2.0,
        confidence=np.log(1.0 / delta) / lam,
        lam=lam,
        delta=delta,
        threshold=K,
        m=int(m),
    )


def opb_train_rhs(empirical, kl_terms, lam, m, K, delta) -> BoundReport:
    """Training bound; same arithmetic as the cumulative bound, the KL terms
    being taken between each updated posterior and its round prior."""
    report = main_bound_rhs(empirical, kl_terms, lam, m, K, delta)
    report.bound = "opb_train"
    return report


def opb_test_rhs(empirical, lam, m, K, delta) -> BoundReport:
    """Test bound for predictive sequences (divergence terms vanish)."""
    _check_params(lam, m, K, delta)
    return BoundReport(
        bound="opb_test",
        empirical=float(empirical),
        divergence=0.0,
        rate=lam * m * K**2 / 2.0,
        confidence=np.log(1.0 / delta) / lam,
        lam=lam,
        delta=delta,
        threshold=K,
        m=int(m),
    )


def optimal_lambda_test(m, K, delta) -> float:
    """lam minimizing the test-bound penalty: sqrt(2 ln(1/delta) / (m K^2)).
    At this lam the rate and confidence terms are equal."""
    _check_params(1.0, m, K, delta)
    return float(np.sqrt(2.0 * np.log(1.0 / delta) / (m * K**2)))


#: Penalty variants for the disintegrated bounds.
PENALTY_KINDS = (
    "train_pointwise",
    "train_renyi",
    "test_pointwise",
    "test_renyi",
)


def disintegrated_penalty(kind, lam, m, K, delta, renyi_proof_constant=False) -> float:
    """Rate-plus-confidence penalty of the disintegrated bounds.

    * train_pointwise / test_pointwise: lam*m*K^2/2 + ln(1/delta)/lam
    * train_renyi: lam*m*K^2 + 3*ln(1/delta)/(2*lam)
    * test_renyi: 2*lam*m*K^2 + ln(1/delta)/lam

    ``renyi_proof_constant=True`` switches the train_renyi confidence term
    to 3*ln(2/delta)/(2*lam) (the constant the union-bound route yields).
    """
    _check_params(lam, m, K, delta)
    if kind in ("train_pointwise", "test_pointwise"):
        return lam * m * K**2 / 2.0 + np.log(1.0 / delta) / lam
    if kind == "train_renyi":
        conf = 2.0 / delta if renyi_proof_constant else 1.0 / delta
        return lam * m * K**2 + 3.0 * np.log(conf) / (2.0 * lam)
    if kind == "test_renyi":
        return 2.0 * lam * m * K**2 + np.log(1.0 / delta) / lam
    raise ValueError(f"unknown penalty kind {kind!r}")


def disintegrated_rhs(empirical, divergence, kind, lam, m, K, delta,
                      renyi_proof_constant=False) -> BoundReport:
    """Full disintegrated RHS: empirical + divergence + penalty.

    ``divergence`` is the fully assembled sum of the per-round penalty
    terms (log-density ratios or Renyi divergences, already scaled by
    1/lam and 1/(2 sigma^2) as the variant requires); this function adds
    the rate and confidence terms only.
    """
    _check_params(lam, m, K, delta)
    pen = disintegrated_penalty(kind, lam, m, K, delta, renyi_proof_constant)
    conf = np.log(1.0 / delta) / lam
    if kind == "train_renyi":
        conf = 3.0 * np.log(2.0 / delta if renyi_proof_constant else 1.0 / delta) / (2.0 * lam)
    return BoundReport(
        bound=f"disintegrated_{kind}",
        empirical=float(empirical),
        divergence=float(divergence),
        rate=pen - conf,
        confidence=conf,
        lam=lam,
        delta=delta,
        threshold=K,
        m=int(m),
    )


def naive_bound_rhs(empirical, kl_terms, lam, m, K, delta) -> BoundReport:
    """Per-round union bound: the confidence term degrades to m*ln(m/delta)/lam."""
    _check_params(lam, m, K, delta)
    kl_terms = np.asarray(kl_terms, dtype=float)
    if np.any(kl_terms < 0):
        raise ValueError("KL terms must be nonnegative")
    return BoundReport(
        bound="naive",
        empirical=float(empirical),
        divergence=float(kl_terms.sum()) / lam,
        rate=lam * m * K**2 / 2.0,
        confidence=m * np.log(m / delta) / lam,
        lam=lam,
        delta=delta,
        threshold=K,
        m=int(m),
    )


def lambda_grid_select(grid, m, K, delta, empirical_fn):
    """Pick the grid point minimizing the test bound, each candidate being
    evaluated at confidence delta/len(grid) (union bound over the grid).

    ``empirical_fn`` maps a candidate lam to the empirical term.  Ties
    break toward the smaller lam.  Returns (lam_best, BoundReport).
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty lambda grid")
    if any(g <= 0 for g in grid):
        raise ValueError("grid values must be positive")
    delta_adj = delta / len(grid)
    best = None
    for lam in sorted(grid):
        report = opb_test_rhs(empirical_fn(lam), lam, m, K, delta_adj)
        if best is None or report.total < best[1].total:
            best = (lam, report)
    return best
