"""The full training loop: collect real-world trajectories in parallel,
compute returns, build the weighted virtual view, update the actor on real
states and the critic plus attention on virtual ones, and log a per-feature
weight snapshot every iteration.

Parallelism is synchronous: workers collect under a frozen parameter
snapshot, and each optimization step applies the arithmetic mean of
per-worker gradients exactly once.  Everything downstream of the config is
deterministic, including the thread-parallel collection phase.
"""

import json
import tempfile
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..agents import DDPGAgent, DQNAgent, PPOAgent, ReplayBuffer, minibatch_slices
from ..attention import ranking_records, snapshot_and_average
from ..envs.base import Continuous, Discrete
from ..envs.discretize import DiscretizedActions
from ..envs.registry import make as make_env_by_name
from .config import TrainConfig
from .rollout import RolloutWorker, parallel_collect


class TrainingDiverged(RuntimeError):
    """Raised when a loss or weight goes non-finite; names the dump file."""


def averaged_update(pv, grad_sets, optimizer):
    """Applies the arithmetic mean of per-worker gradient sets in one step."""
    if not grad_sets:
        raise ValueError("no gradient sets to average")
    for g in grad_sets:
        if g.shape != pv.grad.shape:
            raise ValueError(
                f"gradient set shape {g.shape} does not match parameters "
                f"{pv.grad.shape}"
            )
    pv.grad[:] = np.mean(np.stack(grad_sets), axis=0)
    optimizer.step()


def detect_plateau(history, window, tolerance):
    """Finds where a return curve settles.

    Smooths with a ragged-start moving average of length `window`, then
    returns the first index i >= window from which the average never again
    leaves a relative `tolerance` band around its value at i.  At least
    `window` in-band points must follow i, so stability is corroborated
    rather than declared on a shrinking tail.  Returns (index, True) on
    success and (last index, False) for curves that never settle
    (including histories shorter than the window).
    """
    h = np.asarray(history, dtype=np.float64)
    n = h.size
    if n == 0:
        return 0, False
    w = max(1, int(window))
    c = np.cumsum(h)
    ma = np.empty(n)
    k = min(w, n)
    ma[:k] = c[:k] / np.arange(1, k + 1)
    if n > w:
        ma[w:] = (c[w:] - c[:-w]) / w
    suffix_max = np.maximum.accumulate(ma[::-1])[::-1]
    suffix_min = np.minimum.accumulate(ma[::-1])[::-1]
    for i in range(w, n - w + 1):
        band = tolerance * max(abs(ma[i]), 1e-12)
        if suffix_max[i] - ma[i] <= band and ma[i] - suffix_min[i] <= band:
            return i, True
    return n - 1, False


def ranking_window(iterations, fraction, plateau_index, plateaued):
    """Snapshots averaged for the final ranking: the trailing `fraction` of
    iterations, shortened to the post-plateau span when that is smaller."""
    if iterations <= 0:
        return 0
    tail = max(1, int(round(fraction * iterations)))
    if plateaued:
        tail = min(tail, max(1, iterations - plateau_index))
    return min(tail, iterations)


@dataclass
class TrainReport:
    """Everything a finished run produced, JSON-serializable."""

    env: str
    algorithm: str
    seed: int
    workers: int
    iterations: int
    feature_names: list
    mean_returns: list
    losses: dict
    weight_history: list  # one row per iteration; [] for attention-free runs
    plateau_index: int
    plateaued: bool
    ranking_window: int
    ranking: list
    wall_clock_seconds: float
    config: dict

    def __post_init__(self):
        if len(self.mean_returns) != self.iterations:
            raise ValueError(
                f"return curve length {len(self.mean_returns)} != iterations "
                f"{self.iterations}"
            )
        for key, curve in self.losses.items():
            if len(curve) != self.iterations:
                raise ValueError(
                    f"loss curve {key!r} length {len(curve)} != iterations "
                    f"{self.iterations}"
                )
        if self.weight_history and len(self.weight_history) != self.iterations:
            raise ValueError(
                f"weight history length {len(self.weight_history)} != "
                f"iterations {self.iterations}"
            )

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown report field: {', '.join(unknown)}")
        return cls(**d)

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class Trainer:
    """Owns the agent, the workers, and the iteration loop.

    `use_attention=False` trains the plain single-world variant (used when
    re-evaluating feature subsets); `env_wrapper` lets callers project
    observations (feature masking) before the agent sees them.
    """

    def __init__(self, config: TrainConfig, *, use_attention=True,
                 env_wrapper=None, diagnostics_dir=None):
        self.config = config
        self.diagnostics_dir = diagnostics_dir
        self.use_attention = bool(use_attention)

        def base_env():
            env = make_env_by_name(config.env)
            if env_wrapper is not None:
                env = env_wrapper(env)
            return env

        probe = base_env()
        space = probe.spec.action_space
        if config.algorithm == "dqn" and isinstance(space, Continuous):
            def make_env():
                return DiscretizedActions(base_env(), config.action_bins)
            probe = make_env()
        elif config.algorithm == "ddpg" and isinstance(space, Discrete):
            raise ValueError(
                f"ddpg needs a continuous-action environment; {config.env} is discrete"
            )
        else:
            make_env = base_env
        self._make_env = make_env
        self.spec = probe.spec
        self.feature_names = list(self.spec.feature_names)

        root = np.random.SeedSequence((config.seed,))
        init_stream, sample_stream = root.spawn(2)
        agent_rng = np.random.default_rng(init_stream)
        self._sample_rng = np.random.default_rng(sample_stream)

        m = self.spec.state_dim
        space = self.spec.action_space
        if config.algorithm == "ppo":
            self.agent = PPOAgent(
                m, space,
                actor_hidden=config.actor_hidden,
                critic_hidden=config.critic_hidden,
                n_e=config.n_e,
                actor_lr=config.actor_lr,
                critic_lr=config.critic_lr,
                attention_lr=config.attention_lr,
                clip_eps=config.clip_eps,
                gamma=config.gamma,
                lam=config.lam,
                epochs=config.ppo_epochs,
                minibatch=config.minibatch,
                entropy_coef=config.entropy_coef,
                advantage_mode=config.advantage_mode,
                use_attention=self.use_attention,
                rng=agent_rng,
            )
            self.buffer = None
        elif config.algorithm == "dqn":
            self.agent = DQNAgent(
                m, space.n,
                q_hidden=config.critic_hidden,
                n_e=config.n_e,
                q_lr=config.critic_lr,
                attention_lr=config.attention_lr,
                gamma=config.gamma,
                use_attention=self.use_attention,
                rng=agent_rng,
            )
            self.buffer = ReplayBuffer(config.buffer_capacity, m)
        else:
            self.agent = DDPGAgent(
                m, space,
                actor_hidden=config.actor_hidden,
                critic_hidden=config.critic_hidden,
                n_e=config.n_e,
                actor_lr=config.actor_lr,
                critic_lr=config.critic_lr,
                attention_lr=config.attention_lr,
                gamma=config.gamma,
                tau=config.tau,
                use_attention=self.use_attention,
                rng=agent_rng,
            )
            self.buffer = ReplayBuffer(config.buffer_capacity, m, action_dim=space.dim)

        self.workers = [
            RolloutWorker(self._make_env, i, config.seed)
            for i in range(config.workers)
        ]
        self.global_step = 0
        self._update_count = 0

    def make_env(self):
        """A fresh copy of the training environment (wrappers included)."""
        return self._make_env()

    # --- acting policies (frozen per iteration) ----------------------------

    def _epsilon(self):
        cfg = self.config
        total = max(1, cfg.iterations * cfg.steps_per_iteration)
        decay = max(1, int(cfg.eps_decay_fraction * total))
        frac = min(1.0, self.global_step / decay)
        return cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start)

    def _act_closures(self):
        cfg = self.config
        agent = self.agent
        n = cfg.workers
        if cfg.algorithm == "ppo":
            head = agent.head
            clones = [agent.actor.clone() for _ in range(n)]

            def mk(net):
                def act(obs, rng):
                    return head.sample(net.forward(obs), rng)
                return act

            return [mk(c) for c in clones]

        if cfg.algorithm == "dqn":
            eps = self._epsilon()
            n_actions = agent.n_actions
            pairs = [
                (agent.q.clone(),
                 agent.attention.clone() if agent.attention is not None else None)
                for _ in range(n)
            ]

            def mk(q_net, att):
                def act(obs, rng):
                    if rng.random() < eps:
                        return int(rng.integers(n_actions)), 0.0
                    s = obs if att is None else att.virtual_state(obs)
                    return int(np.argmax(q_net.forward(s))), 0.0
                return act

            return [mk(q, a) for q, a in pairs]

        # ddpg: uniform random during warmup, then noisy deterministic
        head = agent.head
        if self.global_step < cfg.warmup_steps:
            def act_random(obs, rng):
                return rng.uniform(head.low, head.high, size=head.dim), 0.0
            return [act_random] * n

        clones = [agent.actor.clone() for _ in range(n)]
        noise = cfg.noise_std * head.half_range

        def mk(net):
            def act(obs, rng):
                a = head.action(net.forward(obs))
                a = np.atleast_1d(a) + noise * rng.normal(size=head.dim)
                return np.clip(a, head.low, head.high), 0.0
            return act

        return [mk(c) for c in clones]

    # --- per-algorithm update phases ---------------------------------------

    def _update_ppo(self, batch):
        agent = self.agent
        cfg = self.config
        agent.prepare_batch(batch)
        k = cfg.workers
        shard = cfg.steps_per_worker

        obj_sum, n_mb, skipped = 0.0, 0, 0
        for _ in range(cfg.ppo_epochs):
            perms = [minibatch_slices(shard, cfg.minibatch, agent.update_rng)
                     for _ in range(k)]
            for j in range(len(perms[0])):
                grads, objs = [], []
                for w in range(k):
                    idx = perms[w][j] + w * shard
                    agent.actor.pv.zero_grad()
                    obj, sk = agent.actor_minibatch_grad(
                        batch.states[idx], batch.actions[idx],
                        batch.log_probs_old[idx], batch.advantages[idx],
                    )
                    grads.append(agent.actor.pv.grad.copy())
                    objs.append(obj)
                    skipped += sk
                averaged_update(agent.actor.pv, grads, agent.opt_actor)
                obj_sum += float(np.mean(objs))
                n_mb += 1

        loss_sum, c_mb = 0.0, 0
        for _ in range(cfg.ppo_epochs):
            perms = [minibatch_slices(shard, cfg.minibatch, agent.update_rng)
                     for _ in range(k)]
            for j in range(len(perms[0])):
                g_critic, g_att, losses = [], [], []
                for w in range(k):
                    idx = perms[w][j] + w * shard
                    agent.critic.pv.zero_grad()
                    if agent.attention is not None:
                        agent.attention.pv.zero_grad()
                    losses.append(agent.critic_minibatch_grad(
                        batch.states[idx], batch.returns[idx]))
                    g_critic.append(agent.critic.pv.grad.copy())
                    if agent.attention is not None:
                        g_att.append(agent.attention.pv.grad.copy())
                averaged_update(agent.critic.pv, g_critic, agent.opt_critic)
                if agent.attention is not None:
                    averaged_update(agent.attention.pv, g_att, agent.opt_attention)
                loss_sum += float(np.mean(losses))
                c_mb += 1
        return {
            "actor_objective": obj_sum / max(n_mb, 1),
            "critic_loss": loss_sum / max(c_mb, 1),
            "skipped_ratios": float(skipped),
        }

    def _push_batch(self, batch):
        for t in range(len(batch)):
            self.buffer.push(
                batch.states[t], batch.actions[t], batch.rewards[t],
                batch.next_states[t], batch.terminated[t],
            )

    def _ready_to_update(self):
        need = max(self.config.batch_size, self.config.warmup_steps)
        return len(self.buffer) >= need

    def _update_dqn(self, batch):
        agent = self.agent
        cfg = self.config
        self._push_batch(batch)
        if not self._ready_to_update():
            return {"loss": None}
        losses = []
        for _ in range(cfg.dqn_updates):
            g_q, g_att, lw = [], [], []
            for _ in range(cfg.workers):
                sample = self.buffer.sample(cfg.batch_size, self._sample_rng)
                agent.q.pv.zero_grad()
                if agent.attention is not None:
                    agent.attention.pv.zero_grad()
                lw.append(agent.td_grads(sample))
                g_q.append(agent.q.pv.grad.copy())
                if agent.attention is not None:
                    g_att.append(agent.attention.pv.grad.copy())
            averaged_update(agent.q.pv, g_q, agent.opt_q)
            if agent.attention is not None:
                averaged_update(agent.attention.pv, g_att, agent.opt_attention)
            self._update_count += 1
            if self._update_count % cfg.target_sync_interval == 0:
                agent.sync_target()
            losses.append(float(np.mean(lw)))
        return {"loss": float(np.mean(losses))}

    def _update_ddpg(self, batch):
        agent = self.agent
        cfg = self.config
        self._push_batch(batch)
        if not self._ready_to_update():
            return {"critic_loss": None, "actor_objective": None}
        c_losses, a_objs = [], []
        for _ in range(cfg.dqn_updates):
            samples = [self.buffer.sample(cfg.batch_size, self._sample_rng)
                       for _ in range(cfg.workers)]
            g_critic, g_att, lw = [], [], []
            for sample in samples:
                agent.critic.pv.zero_grad()
                if agent.attention is not None:
                    agent.attention.pv.zero_grad()
                lw.append(agent.critic_grads(sample))
                g_critic.append(agent.critic.pv.grad.copy())
                if agent.attention is not None:
                    g_att.append(agent.attention.pv.grad.copy())
            averaged_update(agent.critic.pv, g_critic, agent.opt_critic)
            if agent.attention is not None:
                averaged_update(agent.attention.pv, g_att, agent.opt_attention)

            g_actor, ow = [], []
            for sample in samples:
                agent.actor.pv.zero_grad()
                ow.append(agent.actor_grads(sample["states"]))
                g_actor.append(agent.actor.pv.grad.copy())
            averaged_update(agent.actor.pv, g_actor, agent.opt_actor)
            agent.sync_targets()
            c_losses.append(float(np.mean(lw)))
            a_objs.append(float(np.mean(ow)))
        return {
            "critic_loss": float(np.mean(c_losses)),
            "actor_objective": float(np.mean(a_objs)),
        }

    # --- divergence handling ------------------------------------------------

    def _diverged(self, iteration, batch, detail):
        out = Path(self.diagnostics_dir or tempfile.mkdtemp(prefix="dafs-diverged-"))
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"diverged-iteration-{iteration}.npz"
        np.savez(
            path,
            states=batch.states, actions=batch.actions, rewards=batch.rewards,
            terminated=batch.terminated, dones=batch.dones,
            next_states=batch.next_states, log_probs_old=batch.log_probs_old,
        )
        raise TrainingDiverged(
            f"non-finite {detail} at iteration {iteration}; "
            f"offending batch dumped to {path}"
        )

    def _check_finite(self, iteration, batch, stats, weights):
        for key, value in stats.items():
            if value is not None and not np.isfinite(value):
                self._diverged(iteration, batch, f"{key} ({value})")
        if weights is not None and not np.all(np.isfinite(weights)):
            self._diverged(iteration, batch, "attention weights")

    # --- the loop -----------------------------------------------------------

    def run(self):
        cfg = self.config
        t0 = time.perf_counter()
        update = {
            "ppo": self._update_ppo,
            "dqn": self._update_dqn,
            "ddpg": self._update_ddpg,
        }[cfg.algorithm]

        mean_returns = []
        losses = {}
        weight_rows = []
        last_mean = None
        for it in range(cfg.iterations):
            batch, ep_returns, partials = parallel_collect(
                self.workers, self._act_closures(), cfg.steps_per_worker
            )
            self.global_step += cfg.steps_per_iteration
            stats = update(batch)

            if ep_returns:
                last_mean = float(np.mean(ep_returns))
            elif last_mean is None:
                last_mean = float(np.mean(partials))
            mean_returns.append(last_mean)
            for key, value in stats.items():
                losses.setdefault(key, []).append(value)

            row = None
            if self.agent.attention is not None:
                row = self.agent.attention.compute_weights(batch.states).mean(axis=0)
                weight_rows.append(row)
            self._check_finite(it, batch, stats, row)

        wall = time.perf_counter() - t0
        plateau_index, plateaued = detect_plateau(
            mean_returns, cfg.plateau_window, cfg.plateau_tolerance
        )
        window = 0
        ranking = []
        if weight_rows:
            window = ranking_window(
                cfg.iterations, cfg.snapshot_window, plateau_index, plateaued
            )
            ranked = snapshot_and_average(weight_rows, window)
            ranking = ranking_records(ranked, self.feature_names)
        return TrainReport(
            env=cfg.env,
            algorithm=cfg.algorithm,
            seed=cfg.seed,
            workers=cfg.workers,
            iterations=cfg.iterations,
            feature_names=self.feature_names,
            mean_returns=mean_returns,
            losses=losses,
            weight_history=[row.tolist() for row in weight_rows],
            plateau_index=int(plateau_index),
            plateaued=bool(plateaued),
            ranking_window=int(window),
            ranking=ranking,
            wall_clock_seconds=float(wall),
            config=cfg.to_dict(),
        )


def train(config: TrainConfig, **kwargs) -> TrainReport:
    """Builds a Trainer and runs it; see Trainer for keyword options."""
    return Trainer(config, **kwargs).run()
