"""Dual-world PPO: clipped-ratio actor on real states, critic and attention
trained jointly on virtual states.

The actor never sees a virtual state; the critic never sees a raw state
except through the attention product s_v = s_r * p.  That split is the whole
point: the value regression pressure lands on the per-feature weights.
"""

import numpy as np

from ..attention import AttentionEvaluator
from ..envs.base import Continuous, Discrete
from ..nn import MLP, Activation, Adam
from .batch import Batch
from .heads import BetaHead, CategoricalHead
from .returns import (
    compute_returns,
    gae_advantages,
    normalize_advantages,
    simple_advantages,
)

# exp() overflows past ~709; a ratio this size is already degenerate
_MAX_LOG_RATIO = 700.0


def head_for(action_space):
    if isinstance(action_space, Discrete):
        return CategoricalHead(action_space.n)
    if isinstance(action_space, Continuous):
        return BetaHead(action_space.low, action_space.high, action_space.dim)
    raise TypeError(f"no policy head for action space {action_space!r}")


def minibatch_slices(n, size, rng):
    perm = rng.permutation(n)
    return [perm[i : i + size] for i in range(0, n, size)]


def clipped_surrogate(ratio, advantages, eps):
    """Per-sample min(r*A, clip(r, 1-eps, 1+eps)*A) and its d/dlogp.

    The derivative w.r.t. log-probability is r*A on the unclipped branch and
    exactly zero where the clipped branch is active (it is locally constant
    in the policy parameters).
    """
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - eps, 1.0 + eps) * advantages
    use_unclipped = surr1 <= surr2
    objective = np.where(use_unclipped, surr1, surr2)
    d_logp = np.where(use_unclipped, surr1, 0.0)
    return objective, d_logp


class PPOAgent:
    def __init__(
        self,
        state_dim,
        action_space,
        *,
        actor_hidden=(64, 64),
        critic_hidden=(512, 512),
        n_e=20,
        actor_lr=3e-4,
        critic_lr=1e-3,
        attention_lr=1e-3,
        clip_eps=0.2,
        gamma=0.99,
        lam=0.95,
        epochs=4,
        minibatch=64,
        entropy_coef=0.0,
        advantage_mode="gae",
        use_attention=True,
        rng=None,
    ):
        if advantage_mode not in ("gae", "mc"):
            raise ValueError(f"advantage_mode {advantage_mode!r} not in ('gae', 'mc')")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.m = int(state_dim)
        self.head = head_for(action_space)
        self.clip_eps = float(clip_eps)
        self.gamma = float(gamma)
        self.lam = float(lam)
        self.epochs = int(epochs)
        self.minibatch = int(minibatch)
        self.entropy_coef = float(entropy_coef)
        self.advantage_mode = advantage_mode

        acts_a = [Activation.TANH] * len(actor_hidden) + [self.head.final_activation]
        self.actor = MLP(
            [self.m, *actor_hidden, self.head.n_outputs], acts_a, rng=rng, name="actor"
        )
        acts_c = [Activation.TANH] * len(critic_hidden) + [Activation.IDENTITY]
        self.critic = MLP([self.m, *critic_hidden, 1], acts_c, rng=rng, name="critic")
        # use_attention=False gives the plain single-world variant used as
        # the arbiter when re-evaluating feature subsets: critic on raw states
        if use_attention:
            self.attention = AttentionEvaluator(self.m, n_e=n_e, rng=rng)
            self.opt_attention = Adam(self.attention.pv, attention_lr)
        else:
            self.attention = None
            self.opt_attention = None
        self.opt_actor = Adam(self.actor.pv, actor_lr)
        self.opt_critic = Adam(self.critic.pv, critic_lr)
        self.update_rng = rng

    # --- acting -----------------------------------------------------------

    def act(self, s_r, rng):
        """Sampled action + its log-probability (training mode)."""
        return self.head.sample(self.actor.forward(s_r), rng)

    def act_eval(self, s_r):
        """Deterministic action: distribution mean / argmax (testing mode)."""
        return self.head.mean_action(self.actor.forward(s_r))

    def value(self, states):
        """V(s_v): critic applied to attention-weighted states (raw states
        in the plain variant)."""
        s = np.atleast_2d(states)
        if self.attention is not None:
            s = self.attention.virtual_state(s)
        return self.critic.forward(s)[:, 0]

    # --- batch preparation (returns + advantages, Algorithm-1 order) ------

    def prepare_batch(self, batch: Batch):
        v = self.value(batch.states)
        v_next = self.value(batch.next_states)
        batch.returns = compute_returns(
            batch.rewards, batch.dones, self.gamma,
            terminated=batch.terminated, tail_values=v_next,
        )
        if self.advantage_mode == "gae":
            adv = gae_advantages(
                batch.rewards, v, v_next, batch.terminated, batch.dones,
                self.gamma, self.lam,
            )
        else:
            adv = simple_advantages(batch.returns, v)
        batch.advantages = normalize_advantages(adv)
        return batch

    # --- gradient accumulation primitives (used directly by the trainer) --

    def actor_minibatch_grad(self, states, actions, log_probs_old, advantages):
        """Accumulates clipped-surrogate ascent gradients into the actor;
        returns (mean objective, samples skipped for non-finite ratios)."""
        out = self.actor.forward(states)
        logp, dlogp_dout = self.head.log_prob_grad(out, actions)
        diff = logp - log_probs_old
        valid = np.isfinite(diff) & (diff <= _MAX_LOG_RATIO)
        skipped = int((~valid).sum())
        ratio = np.where(valid, np.exp(np.minimum(diff, _MAX_LOG_RATIO)), 1.0)
        objective, d_obj_dlogp = clipped_surrogate(ratio, advantages, self.clip_eps)
        n_valid = max(int(valid.sum()), 1)
        d_obj_dlogp = np.where(valid, d_obj_dlogp, 0.0)
        d_out = d_obj_dlogp[:, None] * dlogp_dout
        mean_obj = float(objective[valid].sum() / n_valid)
        if self.entropy_coef > 0.0:
            h, dh_dout = self.head.entropy_grad(out)
            mean_obj += self.entropy_coef * float(h.mean())
            d_out = d_out + self.entropy_coef * dh_dout
        # ascend the objective: feed the negated gradient to the minimizer
        self.actor.backward(-d_out / n_valid)
        return mean_obj, skipped

    def critic_minibatch_grad(self, states, targets):
        """Accumulates joint MSE gradients into critic and attention;
        returns the minibatch loss."""
        s_v = states if self.attention is None else self.attention.virtual_state(states)
        v = self.critic.forward(s_v)[:, 0]
        err = v - targets
        loss = float(np.mean(err**2))
        d_v = (2.0 * err / err.size)[:, None]
        d_sv = self.critic.backward(d_v)
        if self.attention is not None:
            self.attention.backward_virtual(d_sv)
        return loss

    def apply_actor_step(self):
        self.opt_actor.step()

    def apply_critic_step(self):
        self.opt_critic.step()
        if self.opt_attention is not None:
            self.opt_attention.step()

    # --- full iteration update (single-worker path) -----------------------

    def update(self, batch: Batch):
        if batch.returns is None or batch.advantages is None:
            raise ValueError("batch not prepared: call prepare_batch first")
        n = len(batch)
        obj_sum = 0.0
        loss_sum = 0.0
        n_mb = 0
        skipped = 0
        self.actor.pv.zero_grad()
        for _ in range(self.epochs):
            for idx in minibatch_slices(n, self.minibatch, self.update_rng):
                obj, sk = self.actor_minibatch_grad(
                    batch.states[idx], batch.actions[idx],
                    batch.log_probs_old[idx], batch.advantages[idx],
                )
                self.apply_actor_step()
                obj_sum += obj
                skipped += sk
                n_mb += 1
        self.critic.pv.zero_grad()
        if self.attention is not None:
            self.attention.pv.zero_grad()
        c_mb = 0
        for _ in range(self.epochs):
            for idx in minibatch_slices(n, self.minibatch, self.update_rng):
                loss_sum += self.critic_minibatch_grad(
                    batch.states[idx], batch.returns[idx]
                )
                self.apply_critic_step()
                c_mb += 1
        return {
            "actor_objective": obj_sum / max(n_mb, 1),
            "critic_loss": loss_sum / max(c_mb, 1),
            "skipped_ratios": skipped,
        }

    # --- persistence -------------------------------------------------------

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
