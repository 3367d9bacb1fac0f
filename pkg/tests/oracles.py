"""Slow independent references used only by the test suite.

None of these share code with the fast paths they check: special-function
values come from mpmath at 30 decimal digits, the loss loops use scipy's
digamma/gammaln and plain Python sums, Dirichlet KL is estimated by Monte
Carlo with stdlib lgamma densities, and aggregation is re-derived from the
element-wise evidence mean.
"""

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special as sp

mpmath.mp.dps = 30


@dataclass
class OracleReport:
    case_id: str
    reference: float
    fast: float
    tolerance: float

    @property
    def abs_error(self):
        return abs(self.reference - self.fast)

    @property
    def rel_error(self):
        scale = max(abs(self.reference), abs(self.fast), 1e-300)
        return self.abs_error / scale

    @property
    def passed(self):
        return self.abs_error <= self.tolerance


def reference_digamma(x):
    return float(mpmath.digamma(x))


def reference_trigamma(x):
    return float(mpmath.polygamma(1, x))


def reference_lgamma(x):
    return float(mpmath.loggamma(x))


def mc_dirichlet_kl(alpha_tilde, n_samples, seed):
    """Monte Carlo estimate of KL[Dir(alpha_tilde) || Dir(1)] with its SE."""
    alpha = np.asarray(alpha_tilde, dtype=np.float64)
    q = alpha.size
    rng = np.random.default_rng(seed)
    samples = rng.dirichlet(alpha, size=n_samples)
    samples = np.clip(samples, 1e-300, None)
    const = (
        math.lgamma(alpha.sum())
        - sum(math.lgamma(a) for a in alpha)
        - math.lgamma(q)
    )
    log_ratio = const + ((alpha - 1.0) * np.log(samples)).sum(axis=1)
    return float(log_ratio.mean()), float(log_ratio.std(ddof=1) / np.sqrt(n_samples))


# ---------------------------------------------------------------------------
# opinion-level references


def mean_evidence_opinion(evidences):
    """Joint opinion from the plain element-wise mean of evidence vectors."""
    stacked = np.asarray(evidences, dtype=np.float64)
    mean_e = stacked.mean(axis=0)
    q = mean_e.size
    strength = mean_e.sum() + q
    return mean_e / strength, q / strength


def opinion_from_alpha(alpha_row):
    alpha_row = np.asarray(alpha_row, dtype=np.float64)
    q = alpha_row.size
    e = alpha_row - 1.0
    strength = e.sum() + q
    return e / strength, q / strength


def naive_conflict(alpha_a, alpha_b):
    """Conflict degree from Dirichlet parameters, one sample at a time."""
    b_a, u_a = opinion_from_alpha(alpha_a)
    b_b, u_b = opinion_from_alpha(alpha_b)
    q = len(b_a)
    p_a = b_a + u_a / q
    p_b = b_b + u_b / q
    pd = 0.5 * sum(abs(p_a[k] - p_b[k]) for k in range(q))
    cc = (1.0 - u_a) * (1.0 - u_b)
    return pd * cc


# ---------------------------------------------------------------------------
# loss loops (straight transcriptions, no vectorization)


def naive_ace(alpha, y):
    alpha = np.asarray(alpha, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, q = alpha.shape
    total = 0.0
    for j in range(n):
        strength = alpha[j].sum()
        for k in range(q):
            total += y[j, k] * (sp.digamma(strength) - sp.digamma(alpha[j, k]))
    return total / n


def naive_kl(alpha, y):
    alpha = np.asarray(alpha, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, q = alpha.shape
    total = 0.0
    for j in range(n):
        masked = y[j] + (1.0 - y[j]) * alpha[j]
        strength = masked.sum()
        value = sp.gammaln(strength) - sp.gammaln(float(q))
        for k in range(q):
            value -= sp.gammaln(masked[k])
            value += (masked[k] - 1.0) * (sp.digamma(masked[k]) - sp.digamma(strength))
        total += value
    return total / n


def naive_acc(alpha, y, lam):
    return naive_ace(alpha, y) + lam * naive_kl(alpha, y)


def naive_h1(alpha_views, alpha_common, alpha_specific, y, gamma):
    n_views = len(alpha_views)
    n = np.asarray(y).shape[0]
    total = 0.0
    for i in range(n_views):
        total += naive_ace(alpha_views[i], y)
        total += naive_ace(alpha_common, y)
        total += naive_ace(alpha_specific[i], y)
        conflict = 0.0
        for j in range(n):
            conflict += naive_conflict(alpha_common[j], alpha_specific[i][j])
        total += gamma * conflict / n
    return total / n_views


def naive_con(alpha_views):
    n_views = len(alpha_views)
    if n_views < 2:
        return 0.0
    n = np.asarray(alpha_views[0]).shape[0]
    total = 0.0
    for p in range(n_views):
        for r in range(n_views):
            if r == p:
                continue
            pair = 0.0
            for j in range(n):
                pair += naive_conflict(alpha_views[p][j], alpha_views[r][j])
            total += pair / n
    return total / (n_views - 1)


def naive_h2(alpha_joint, alpha_attended, alpha_views, y, lam, gamma):
    total = naive_acc(alpha_joint, y, lam)
    for alpha_hat in alpha_attended:
        total += naive_acc(alpha_hat, y, lam)
    return total + gamma * naive_con(alpha_views)


def fd_gradient(f, x, h=1e-5):
    """Central-difference gradient of a scalar function of a flat array."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for j in range(x.size):
        bumped = x.copy()
        bumped.flat[j] += h
        f_plus = f(bumped)
        bumped.flat[j] -= 2 * h
        f_minus = f(bumped)
        grad.flat[j] = (f_plus - f_minus) / (2 * h)
    return grad
