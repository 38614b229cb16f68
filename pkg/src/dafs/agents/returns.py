"""Return and advantage computation over flat trajectory batches.

Batches concatenate several episode segments; `dones` flags the last step of
each segment (true termination or a horizon cut).  Accumulation never flows
across a flagged step.
"""

import numpy as np


def compute_returns(rewards, dones, gamma, terminated=None, tail_values=None):
    """Discounted returns R_t = r_t + gamma * R_{t+1} * (1 - done_t).

    With `terminated`/`tail_values` given, a segment that was cut without
    true termination (done_t set, terminated_t clear) restarts accumulation
    from tail_values[t] (the critic's bootstrap for the unseen next state)
    instead of 0.  The batch end itself is treated like a cut.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    n = rewards.size
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma {gamma} outside [0, 1]")
    if n == 0:
        raise ValueError("empty batch has no returns")
    dones = np.asarray(dones, dtype=bool)
    out = np.empty(n)
    r_next = 0.0
    if terminated is not None and tail_values is not None and n and not dones[-1]:
        # batch cut mid-episode: bootstrap the dangling tail
        r_next = float(tail_values[-1])
    for t in range(n - 1, -1, -1):
        if dones[t]:
            if terminated is None or terminated[t]:
                r_next = 0.0
            else:
                r_next = float(tail_values[t])
        out[t] = rewards[t] + gamma * r_next
        r_next = out[t]
    return out


def gae_advantages(rewards, values, next_values, terminated, dones, gamma, lam):
    """Generalized advantage estimation over TD residuals.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - terminated_t) - V(s_t);
    A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1}.  `terminated`
    removes the bootstrap where the episode truly ended; `dones` (which also
    covers horizon cuts) stops the advantage recursion.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    next_values = np.asarray(next_values, dtype=np.float64)
    terminated = np.asarray(terminated, dtype=bool)
    dones = np.asarray(dones, dtype=bool)
    n = rewards.size
    if n == 0:
        raise ValueError("empty batch has no advantages")
    adv = np.empty(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + gamma * next_values[t] * (1.0 - terminated[t]) - values[t]
        running = delta + gamma * lam * (0.0 if dones[t] else running)
        adv[t] = running
    return adv


def simple_advantages(returns, values):
    returns = np.asarray(returns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if returns.size == 0:
        raise ValueError("empty batch has no advantages")
    if returns.shape != values.shape:
        raise ValueError(f"returns {returns.shape} vs values {values.shape}")
    return returns - values


def normalize_advantages(adv):
    """Zero-mean unit-variance per batch; all-zero when spread is negligible."""
    adv = np.asarray(adv, dtype=np.float64)
    if adv.size == 0:
        raise ValueError("empty batch has no advantages")
    std = adv.std()
    if std <= 1e-8:
        return np.zeros_like(adv)
    return (adv - adv.mean()) / std
