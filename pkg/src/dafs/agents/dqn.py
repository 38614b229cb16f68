"""Dual-world DQN: one Q-network on virtual states.

Q-learning has no actor/critic split, so the attention module hangs off the
only value network there is: Q consumes s_v = s_r * p and TD regression
trains psi through Q's input.  Epsilon-greedy acting uses the same weighted
view.  Target copies of both Q and the attention parameters are hard-synced
together, keeping the TD target a pure snapshot.
"""

import numpy as np

from ..attention import AttentionEvaluator
from ..nn import MLP, Activation, Adam


class DQNAgent:
    def __init__(
        self,
        state_dim,
        n_actions,
        *,
        q_hidden=(512, 512),
        n_e=20,
        q_lr=1e-3,
        attention_lr=1e-3,
        gamma=0.99,
        use_attention=True,
        rng=None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.m = int(state_dim)
        self.n_actions = int(n_actions)
        self.gamma = float(gamma)
        acts = [Activation.TANH] * len(q_hidden) + [Activation.IDENTITY]
        self.q = MLP([self.m, *q_hidden, self.n_actions], acts, rng=rng, name="q")
        # plain variant (subset arbiter): Q straight on raw states
        if use_attention:
            self.attention = AttentionEvaluator(self.m, n_e=n_e, rng=rng)
            self.attention_target = self.attention.clone()
            self.opt_attention = Adam(self.attention.pv, attention_lr)
        else:
            self.attention = None
            self.attention_target = None
            self.opt_attention = None
        self.q_target = self.q.clone()
        self.opt_q = Adam(self.q.pv, q_lr)

    def q_values(self, s_r):
        if self.attention is None:
            return self.q.forward(s_r)
        return self.q.forward(self.attention.virtual_state(s_r))

    def act(self, s_r, epsilon, rng):
        if epsilon > 0.0 and rng.random() < epsilon:
            return int(rng.integers(self.n_actions))
        return int(np.argmax(self.q_values(s_r)))

    def td_grads(self, sample):
        """Accumulates one TD step's gradients into Q (and psi, when
        present) without applying them; returns the sample loss.

        Targets bootstrap through everything except true termination, so
        time-limit cuts (stored with terminated=False) keep their tails.
        """
        states = sample["states"]
        actions = np.asarray(sample["actions"], dtype=np.intp)
        n = len(actions)
        if n == 0:
            raise ValueError("empty replay sample")
        if self.attention_target is None:
            q_next = self.q_target.forward(sample["next_states"]).max(axis=1)
        else:
            sv_next = self.attention_target.virtual_state(sample["next_states"])
            q_next = self.q_target.forward(sv_next).max(axis=1)
        targets = sample["rewards"] + self.gamma * (1.0 - sample["terminated"]) * q_next

        s_v = states if self.attention is None else self.attention.virtual_state(states)
        q_all = self.q.forward(s_v)
        q_sel = q_all[np.arange(n), actions]
        err = q_sel - targets
        loss = float(np.mean(err**2))
        d_q = np.zeros_like(q_all)
        d_q[np.arange(n), actions] = 2.0 * err / n
        d_sv = self.q.backward(d_q)
        if self.attention is not None:
            self.attention.backward_virtual(d_sv)
        return loss

    def apply_step(self):
        self.opt_q.step()
        if self.opt_attention is not None:
            self.opt_attention.step()

    def update(self, sample):
        """One TD step on a replay sample; trains Q and psi jointly."""
        loss = self.td_grads(sample)
        self.apply_step()
        return loss

    def sync_target(self):
        """Hard copy of both Q and attention into the target pair."""
        self.q_target.pv.copy_data_from(self.q.pv)
        if self.attention is not None:
            self.attention_target.pv.copy_data_from(self.attention.pv)

    def _named_nets(self):
        nets = [("q", self.q)]
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
        self.sync_target()
