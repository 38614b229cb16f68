"""Dual-world DDPG: deterministic actor on real states, Q(s_v, a) critic.

Mirrors the PPO world split: the actor reads raw observations, the critic
scores attention-weighted ones (with the action appended), and psi learns
from the critic's TD regression.  During the actor step psi is frozen: the
virtual state enters as a constant, so the actor cannot bend the mask toward
actions it prefers.  Targets track online nets by Polyak averaging.
"""

import numpy as np

from ..attention import AttentionEvaluator
from ..envs.base import Continuous
from ..nn import MLP, Activation, Adam
from .heads import DeterministicHead


def polyak_update(target_pv, online_pv, tau):
    """target <- tau * online + (1 - tau) * target. tau=1 copies, tau=0 holds."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau {tau} outside [0, 1]")
    target_pv.data[:] = tau * online_pv.data + (1.0 - tau) * target_pv.data


class DDPGAgent:
    def __init__(
        self,
        state_dim,
        action_space,
        *,
        actor_hidden=(64, 64),
        critic_hidden=(512, 512),
        n_e=20,
        actor_lr=1e-4,
        critic_lr=1e-3,
        attention_lr=1e-3,
        gamma=0.99,
        tau=0.005,
        use_attention=True,
        rng=None,
    ):
        if not isinstance(action_space, Continuous):
            raise TypeError("DDPG needs a continuous action space")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.m = int(state_dim)
        self.gamma = float(gamma)
        self.tau = float(tau)
        self.head = DeterministicHead(action_space.low, action_space.high, action_space.dim)
        self.dim = action_space.dim

        acts_a = [Activation.TANH] * len(actor_hidden) + [self.head.final_activation]
        self.actor = MLP([self.m, *actor_hidden, self.dim], acts_a, rng=rng, name="actor")
        acts_c = [Activation.TANH] * len(critic_hidden) + [Activation.IDENTITY]
        self.critic = MLP(
            [self.m + self.dim, *critic_hidden, 1], acts_c, rng=rng, name="critic"
        )
        # plain variant (subset arbiter): critic on raw state-action pairs
        if use_attention:
            self.attention = AttentionEvaluator(self.m, n_e=n_e, rng=rng)
            self.attention_target = self.attention.clone()
            self.opt_attention = Adam(self.attention.pv, attention_lr)
        else:
            self.attention = None
            self.attention_target = None
            self.opt_attention = None
        self.actor_target = self.actor.clone()
        self.critic_target = self.critic.clone()
        self.opt_actor = Adam(self.actor.pv, actor_lr)
        self.opt_critic = Adam(self.critic.pv, critic_lr)

    def act(self, s_r, noise_std=0.0, rng=None):
        """Deterministic action, optionally with Gaussian exploration noise
        (scaled to the action half-range) clipped back into bounds."""
        a = self.head.action(self.actor.forward(s_r))
        a = np.atleast_1d(a)
        if noise_std > 0.0:
            a = a + noise_std * self.head.half_range * rng.normal(size=a.shape)
        return np.clip(a, self.head.low, self.head.high)

    def critic_grads(self, sample):
        """Accumulates TD-regression gradients for Q(s_v, a) into the critic
        and attention parameters; returns the critic loss."""
        states = sample["states"]
        n = len(states)
        if n == 0:
            raise ValueError("empty replay sample")
        actions = np.asarray(sample["actions"], dtype=np.float64).reshape(n, self.dim)

        a_next = self.head.action(self.actor_target.forward(sample["next_states"]))
        if self.attention_target is None:
            sv_next = np.atleast_2d(sample["next_states"])
        else:
            sv_next = self.attention_target.virtual_state(sample["next_states"])
        q_next = self.critic_target.forward(np.hstack([sv_next, np.atleast_2d(a_next)]))[:, 0]
        targets = sample["rewards"] + self.gamma * (1.0 - sample["terminated"]) * q_next

        s_v = states if self.attention is None else self.attention.virtual_state(states)
        q = self.critic.forward(np.hstack([s_v, actions]))[:, 0]
        err = q - targets
        d_q = (2.0 * err / n)[:, None]
        d_in = self.critic.backward(d_q)
        if self.attention is not None:
            self.attention.backward_virtual(d_in[:, : self.m])
        return float(np.mean(err**2))

    def actor_grads(self, states):
        """Accumulates ascent gradients for Q(s_v, mu(s_r)) into the actor
        with psi and phi held fixed; returns the mean predicted Q.

        The critic and attention modules are used as forward conduits only;
        any gradients they pick up here are dropped before returning.
        """
        n = len(states)
        sv_const = states if self.attention is None else self.attention.virtual_state(states)
        out = self.actor.forward(states)
        a_pred = self.head.action(out)
        q_pred = self.critic.forward(np.hstack([sv_const, np.atleast_2d(a_pred)]))
        actor_objective = float(np.mean(q_pred))
        d_in = self.critic.backward(-np.ones_like(q_pred) / n)
        self.actor.backward(self.head.action_grad(d_in[:, self.m :]))
        self.critic.pv.zero_grad()
        if self.attention is not None:
            self.attention.pv.zero_grad()
        return actor_objective

    def apply_critic_step(self):
        self.opt_critic.step()
        if self.opt_attention is not None:
            self.opt_attention.step()

    def apply_actor_step(self):
        self.opt_actor.step()

    def sync_targets(self):
        """One Polyak tracking step for all target copies."""
        pairs = [(self.actor_target, self.actor), (self.critic_target, self.critic)]
        if self.attention is not None:
            pairs.append((self.attention_target, self.attention))
        for target, online in pairs:
            polyak_update(target.pv, online.pv, self.tau)

    def update(self, sample):
        critic_loss = self.critic_grads(sample)
        self.apply_critic_step()
        actor_objective = self.actor_grads(sample["states"])
        self.apply_actor_step()
        self.sync_targets()
        return {"critic_loss": critic_loss, "actor_objective": actor_objective}

    def _named_nets(self):
        nets = [("actor", self.actor), ("critic", self.critic)]
        if self.attention is not None:
            nets.append(("attention", self.attention))
        return nets

    def snapshot_nets(self):
        return {name: (net.pv, net.arch_meta()) for name, net in self._named_nets()}

    def restore_nets(self, nets):
        for name, net in self._named_nets():
            pv = nets[name]["pv"]
            net.pv.copy_data_from(pv)
            net.pv.m[:] = pv.m
            net.pv.v[:] = pv.v
            net.pv.step = pv.step
        self.actor_target.pv.copy_data_from(self.actor.pv)
        self.critic_target.pv.copy_data_from(self.critic.pv)
        if self.attention is not None:
            self.attention_target.pv.copy_data_from(self.attention.pv)
