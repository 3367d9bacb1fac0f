"""Differentiable training objectives.

Composition: an adversarial confusion term and a per-view prediction term
supervise the common subspace; an orthogonality penalty shapes the
specific representations; evidential cross-entropy terms (with an annealed
KL regularizer toward the uniform Dirichlet) drive both aggregation
levels; and conflict-degree penalties discourage contradictory opinions
within and across views.  Every function builds a scalar graph node, so
gradients flow back to whatever leaves produced the inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError
from .special import lgamma as _lgamma_value

log = logging.getLogger(__name__)

_PROB_FLOOR = 1e-12


@dataclass
class LossBreakdown:
    """Scalar loss terms for one epoch, as logged to the training log."""

    adv: float
    cml: float
    com: float
    spe: float
    h1: float
    h2: float
    con: float
    overall: float
    lambda_t: float
    epoch: int

    FIELDS = ("adv", "cml", "com", "spe", "h1", "h2", "con", "overall", "lambda_t")

    def resum(self, delta, eta):
        """Recombine the recorded terms per the overall-loss identity."""
        return self.h1 + self.h2 + delta * self.com + eta * self.spe

    def finite(self):
        return all(np.isfinite(getattr(self, f)) for f in self.FIELDS)


def lambda_schedule(epoch, anneal_epochs):
    """Annealing coefficient ramping linearly from 0 to 1."""
    if anneal_epochs < 1:
        raise ContractError("anneal_epochs must be >= 1")
    return min(1.0, epoch / anneal_epochs)


# ---------------------------------------------------------------------------
# common / specific subspace losses


def cross_entropy(probs, onehot):
    """Mean categorical cross-entropy over rows; probabilities are floored."""
    probs = ad.lift(probs)
    if np.any(probs.data <= 0.0):
        clamped = int((probs.data <= _PROB_FLOOR).sum())
        log.warning("cross_entropy: flooring %d non-positive probabilities", clamped)
    picked = (probs.clamp(lo=_PROB_FLOOR).log() * onehot).sum(axis=-1)
    return -picked.mean()


def adv_loss(z_hat, z):
    """Confusion objective exp(-CE) in (0, 1]; 1 means a perfect discriminator.

    ``z_hat`` holds row-softmax view probabilities for every (sample, view)
    pair and ``z`` the matching one-hot view labels.  The cross-entropy is
    averaged over rows before the exponential so the value stays in a
    usable floating-point range for any batch size.
    """
    return (-cross_entropy(z_hat, z)).exp()


def cml_loss(y_hat, y):
    """Mean per-class binary cross-entropy of the common prediction head."""
    y_hat = ad.lift(y_hat)
    clipped = y_hat.clamp(lo=_PROB_FLOOR, hi=1.0 - _PROB_FLOOR)
    term = clipped.log() * y + (1.0 - clipped).log() * (1.0 - y)
    return -term.mean()


def com_loss(adv, cml):
    """Total common-information loss: confusion term plus prediction term."""
    return adv + cml


def spe_loss(specific_list, common):
    """Squared per-sample inner products between each specific vector and the
    mean common vector, summed over views and averaged over the batch."""
    total = None
    for s in specific_list:
        if s.shape[-1] != common.shape[-1]:
            raise ContractError(
                f"spe_loss: specific width {s.shape[-1]} != common width {common.shape[-1]}"
            )
        inner = (s * common).sum(axis=-1)
        term = (inner * inner).mean()
        total = term if total is None else total + term
    if total is None:
        raise ContractError("spe_loss: need at least one specific representation")
    return total


# ---------------------------------------------------------------------------
# evidential classification losses


def _check_alpha(alpha):
    if np.any(alpha.data < 1.0 - 1e-12):
        raise ContractError("Dirichlet parameters must satisfy alpha_k >= 1")


def ace_loss(alpha, y):
    """Evidential cross-entropy: sum_k y_k (psi(S) - psi(alpha_k)), batch mean."""
    alpha = ad.lift(alpha)
    _check_alpha(alpha)
    strength = alpha.sum(axis=-1, keepdims=True)
    per_class = (strength.digamma() - alpha.digamma()) * y
    return per_class.sum(axis=-1).mean()


def kl_uniform(alpha_tilde):
    """KL divergence from Dir(alpha_tilde) to the uniform Dirichlet, batch mean."""
    alpha_tilde = ad.lift(alpha_tilde)
    q = alpha_tilde.shape[-1]
    strength = alpha_tilde.sum(axis=-1, keepdims=True)
    log_norm = strength.lgamma() - alpha_tilde.lgamma().sum(axis=-1, keepdims=True) - float(
        _lgamma_value(float(q))
    )
    concentration = ((alpha_tilde - 1.0) * (alpha_tilde.digamma() - strength.digamma())).sum(
        axis=-1, keepdims=True
    )
    return (log_norm + concentration).mean()


def kl_loss(alpha, y):
    """KL regularizer on the masked parameters that spare the true class."""
    alpha = ad.lift(alpha)
    _check_alpha(alpha)
    masked = alpha * (1.0 - y) + y
    return kl_uniform(masked)


def acc_loss(alpha, y, lambda_t):
    """Annealed classification loss: ace + lambda_t * masked KL."""
    return ace_loss(alpha, y) + lambda_t * kl_loss(alpha, y)


# ---------------------------------------------------------------------------
# opinion geometry inside the graph


def beliefs_uncertainty(evidence):
    """Graph-side Dirichlet projection: b = e/S, u = q/S with S = sum(e) + q."""
    evidence = ad.lift(evidence)
    q = evidence.shape[-1]
    strength = evidence.sum(axis=-1, keepdims=True) + float(q)
    return evidence / strength, float(q) / strength


def pairwise_conflict(evidence_a, evidence_b):
    """Per-sample conflict degree between two evidence batches, shape (..., 1).

    Matches the opinion-level definition: half the L1 distance between the
    uniformly projected probabilities, discounted by conjunctive certainty.
    """
    if evidence_a.shape != evidence_b.shape:
        raise ContractError(
            f"pairwise_conflict: shapes differ, {evidence_a.shape} vs {evidence_b.shape}"
        )
    q = evidence_a.shape[-1]
    b_a, u_a = beliefs_uncertainty(evidence_a)
    b_b, u_b = beliefs_uncertainty(evidence_b)
    p_a = b_a + u_a * (1.0 / q)
    p_b = b_b + u_b * (1.0 / q)
    distance = (p_a - p_b).abs().sum(axis=-1, keepdims=True) * 0.5
    certainty = (1.0 - u_a) * (1.0 - u_b)
    return distance * certainty


# ---------------------------------------------------------------------------
# hierarchy losses


def h1_loss(alpha_views, alpha_common, alpha_specific, y, gamma):
    """First-hierarchy loss: per-view, common and specific classification
    terms plus the common/specific conflict penalty, averaged over views."""
    n_views = len(alpha_views)
    if n_views == 0 or len(alpha_specific) != n_views:
        raise ContractError("h1_loss: need matching per-view alpha lists")
    total = None
    for i in range(n_views):
        term = (
            ace_loss(alpha_views[i], y)
            + ace_loss(alpha_common, y)
            + ace_loss(alpha_specific[i], y)
        )
        if gamma != 0.0:
            conflict = pairwise_conflict(alpha_common - 1.0, alpha_specific[i] - 1.0)
            term = term + gamma * conflict.mean()
        total = term if total is None else total + term
    return total * (1.0 / n_views)


def con_loss(alpha_views):
    """Mean pairwise conflict across views, normalized by v - 1."""
    n_views = len(alpha_views)
    if n_views < 2:
        return Tensor(0.0)
    total = None
    for p in range(n_views):
        for r in range(n_views):
            if r == p:
                continue
            c = pairwise_conflict(alpha_views[p] - 1.0, alpha_views[r] - 1.0).mean()
            total = c if total is None else total + c
    return total * (1.0 / (n_views - 1))


def h2_loss(alpha_joint, alpha_attended, alpha_views, y, lambda_t, gamma, conflict=None):
    """Second-hierarchy loss: annealed classification of the joint and every
    attended distribution plus the inter-view conflict penalty.

    ``conflict`` may carry a precomputed ``con_loss(alpha_views)`` node so the
    caller can log it without building the subgraph twice.
    """
    total = acc_loss(alpha_joint, y, lambda_t)
    for alpha_hat in alpha_attended:
        total = total + acc_loss(alpha_hat, y, lambda_t)
    if gamma != 0.0:
        if conflict is None:
            conflict = con_loss(alpha_views)
        total = total + gamma * conflict
    return total


def overall_loss(h1, h2, com, spe, delta, eta):
    """Trade-off combination of the four top-level terms."""
    return h1 + h2 + delta * com + eta * spe
