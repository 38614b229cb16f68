"""Parallel trajectory collection.

Each worker owns an exclusive environment and two RNG streams (episode
seeding and action sampling), both derived deterministically from
(run seed, worker index).  Workers act under frozen parameter snapshots and
share nothing mutable, so the merged batch is reproducible regardless of
thread scheduling: results are concatenated in worker-index order.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..agents.batch import Batch
from ..envs.base import Discrete


class WorkerFailure(RuntimeError):
    """A rollout worker raised; carries the worker index in the message."""


class RolloutWorker:
    """One collector: env + derived RNG streams + a persistent episode.

    Episodes continue across rollout calls; the final transition of each
    segment is flagged done (a cut, not a termination) so downstream return
    computation bootstraps instead of leaking across segment boundaries.
    """

    def __init__(self, make_env, index, seed):
        self.index = int(index)
        self.env = make_env()
        # per-worker streams: hash(seed, index), stable across runs
        ss = np.random.SeedSequence((int(seed), self.index))
        env_stream, action_stream = ss.spawn(2)
        self._env_seed_rng = np.random.default_rng(env_stream)
        self.rng = np.random.default_rng(action_stream)
        self._obs = None
        self._ep_return = 0.0

    def _begin_episode(self):
        self._obs = self.env.reset(seed=int(self._env_seed_rng.integers(2**31 - 1)))
        self._ep_return = 0.0

    def rollout(self, act, steps):
        """Collects `steps` transitions under the frozen policy `act`.

        act(obs, rng) -> (action, log_prob); value-based policies return a
        zero log_prob.  Returns (Batch, completed episode returns, running
        return of the unfinished episode).
        """
        spec = self.env.spec
        m = spec.state_dim
        discrete = isinstance(spec.action_space, Discrete)
        states = np.empty((steps, m))
        next_states = np.empty((steps, m))
        if discrete:
            actions = np.empty(steps, dtype=np.int64)
        else:
            actions = np.empty((steps, spec.action_space.dim))
        rewards = np.empty(steps)
        log_probs = np.empty(steps)
        terminated = np.zeros(steps, dtype=bool)
        dones = np.zeros(steps, dtype=bool)

        if self._obs is None:
            self._begin_episode()
        completed = []
        for t in range(steps):
            action, logp = act(self._obs, self.rng)
            result = self.env.step(action)
            states[t] = self._obs
            actions[t] = action
            rewards[t] = result.reward
            log_probs[t] = logp
            terminated[t] = result.terminated
            dones[t] = result.done
            next_states[t] = result.state
            self._ep_return += result.reward
            if result.done:
                completed.append(self._ep_return)
                self._begin_episode()
            else:
                self._obs = result.state
        dones[-1] = True  # segment boundary: cut, bootstrapped downstream
        batch = Batch(
            states=states,
            actions=actions,
            rewards=rewards,
            terminated=terminated,
            dones=dones,
            next_states=next_states,
            log_probs_old=log_probs,
        )
        return batch, completed, self._ep_return


def merge_batches(batches):
    """Concatenates worker batches in the given (worker-index) order."""
    if len(batches) == 1:
        return batches[0]
    return Batch(
        states=np.concatenate([b.states for b in batches]),
        actions=np.concatenate([b.actions for b in batches]),
        rewards=np.concatenate([b.rewards for b in batches]),
        terminated=np.concatenate([b.terminated for b in batches]),
        dones=np.concatenate([b.dones for b in batches]),
        next_states=np.concatenate([b.next_states for b in batches]),
        log_probs_old=np.concatenate([b.log_probs_old for b in batches]),
    )


def parallel_collect(workers, act_fns, steps_each):
    """Runs every worker's rollout concurrently and merges the results.

    Returns (merged batch, completed episode returns across workers in
    worker order, per-worker running partial returns).  A failing worker
    aborts the collection with its index.
    """
    if len(act_fns) != len(workers):
        raise ValueError("one acting policy per worker required")
    if len(workers) == 1:
        results = [workers[0].rollout(act_fns[0], steps_each)]
    else:
        with ThreadPoolExecutor(max_workers=len(workers)) as pool:
            futures = [
                pool.submit(w.rollout, f, steps_each)
                for w, f in zip(workers, act_fns)
            ]
            results = []
            failure = None
            for w, fut in zip(workers, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    if failure is None:
                        failure = WorkerFailure(
                            f"worker {w.index} failed during rollout: {exc}"
                        )
                        failure.__cause__ = exc
            if failure is not None:
                raise failure
    batch = merge_batches([r[0] for r in results])
    episode_returns = [ret for r in results for ret in r[1]]
    partials = [r[2] for r in results]
    return batch, episode_returns, partials
