"""Policy heads: Beta (bounded continuous), categorical, deterministic.

Each head interprets the raw output of an actor network's final layer and
knows three things: how many output units it needs, which activation that
final layer must use, and how to turn outputs into actions with exact
log-probabilities and gradients.  The Beta head keeps all density inside the
action bounds by construction (both concentration parameters exceed 1).
"""

import numpy as np
from scipy.special import betaln, digamma, polygamma

from ..nn.net import Activation

# sampled Beta draws are nudged into the open interval so log densities of
# stored actions never hit the -inf boundary
_X_EPS = 1e-12


def _check_bounds(low, high):
    if not np.isfinite(low) or not np.isfinite(high) or not low < high:
        raise ValueError(f"degenerate action bounds [{low}, {high}]")


class BetaHead:
    """Per-dimension Beta(alpha, beta) with alpha, beta = softplus(z) + 1,
    affinely rescaled from (0, 1) to [low, high]."""

    final_activation = Activation.SOFTPLUS

    def __init__(self, low, high, dim=1):
        _check_bounds(low, high)
        self.low = float(low)
        self.high = float(high)
        self.span = self.high - self.low
        self.dim = int(dim)
        self.n_outputs = 2 * self.dim

    def _params(self, out):
        out = np.atleast_2d(out)
        return out[:, : self.dim] + 1.0, out[:, self.dim :] + 1.0

    def sample(self, out, rng):
        """One action from one state's head output; returns (action, logp)."""
        alpha, beta = self._params(out)
        x = np.clip(rng.beta(alpha[0], beta[0]), _X_EPS, 1.0 - _X_EPS)
        action = self.low + x * self.span
        logp, _ = self.log_prob_grad(out, action)
        return action, float(logp[0])

    def mean_action(self, out):
        alpha, beta = self._params(out)
        return (self.low + alpha[0] / (alpha[0] + beta[0]) * self.span)

    def log_prob_grad(self, out, actions):
        """log pi(a) for a batch plus its gradient w.r.t. the net outputs.

        Includes the -log(span) change-of-variables term per dimension, so
        exp(logp) is the true density on the action interval.
        """
        alpha, beta = self._params(out)
        # flat (n,) action arrays for dim=1 must become columns, not a row
        a2 = np.asarray(actions, dtype=np.float64).reshape(-1, self.dim)
        x = np.clip((a2 - self.low) / self.span, _X_EPS, 1.0 - _X_EPS)
        log_x, log_1mx = np.log(x), np.log1p(-x)
        logp = (
            (alpha - 1.0) * log_x
            + (beta - 1.0) * log_1mx
            - betaln(alpha, beta)
            - np.log(self.span)
        ).sum(axis=1)
        dig_ab = digamma(alpha + beta)
        d_alpha = log_x - digamma(alpha) + dig_ab
        d_beta = log_1mx - digamma(beta) + dig_ab
        return logp, np.concatenate([d_alpha, d_beta], axis=1)

    def entropy_grad(self, out):
        alpha, beta = self._params(out)
        ab = alpha + beta
        h = (
            betaln(alpha, beta)
            - (alpha - 1.0) * digamma(alpha)
            - (beta - 1.0) * digamma(beta)
            + (ab - 2.0) * digamma(ab)
            + np.log(self.span)
        ).sum(axis=1)
        trig_ab = polygamma(1, ab)
        d_alpha = -(alpha - 1.0) * polygamma(1, alpha) + (ab - 2.0) * trig_ab
        d_beta = -(beta - 1.0) * polygamma(1, beta) + (ab - 2.0) * trig_ab
        return h, np.concatenate([d_alpha, d_beta], axis=1)


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class CategoricalHead:
    final_activation = Activation.IDENTITY

    def __init__(self, n):
        if n < 2:
            raise ValueError("categorical head needs at least 2 actions")
        self.n = int(n)
        self.n_outputs = self.n

    def sample(self, out, rng):
        if not np.all(np.isfinite(out)):
            raise ValueError("non-finite action logits")
        lp = log_softmax(out)
        probs = np.exp(lp)
        u = rng.random()
        action = int(min(np.searchsorted(np.cumsum(probs), u, side="right"), self.n - 1))
        return action, float(lp[action])

    def mean_action(self, out):
        return int(np.argmax(out))

    def log_prob_grad(self, out, actions):
        out2 = np.atleast_2d(out)
        a = np.asarray(actions, dtype=np.intp).reshape(-1)
        lp = log_softmax(out2)
        probs = np.exp(lp)
        logp = lp[np.arange(a.size), a]
        grad = -probs.copy()
        grad[np.arange(a.size), a] += 1.0
        return logp, grad

    def entropy_grad(self, out):
        out2 = np.atleast_2d(out)
        lp = log_softmax(out2)
        probs = np.exp(lp)
        h = -(probs * lp).sum(axis=1)
        grad = -probs * (lp + h[:, None])
        return h, grad


class DeterministicHead:
    """tanh output scaled into [low, high]; for DDPG-style actors."""

    final_activation = Activation.TANH

    def __init__(self, low, high, dim=1):
        _check_bounds(low, high)
        self.low = float(low)
        self.high = float(high)
        self.dim = int(dim)
        self.n_outputs = self.dim
        self.mid = (self.high + self.low) / 2.0
        self.half_range = (self.high - self.low) / 2.0

    def action(self, out):
        return self.mid + self.half_range * np.asarray(out)

    def action_grad(self, d_action):
        """d(loss)/d(net output) given d(loss)/d(action)."""
        return self.half_range * np.asarray(d_action)
