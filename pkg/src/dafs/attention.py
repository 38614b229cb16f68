"""Attention evaluator: per-feature selection probabilities and virtual states.

A dense trunk E = tanh(s_r @ W_E + b_E) feeds two affine heads that produce,
for every feature k, a selected logit x^k and an unselected logit y^k.  The
selection probability is the two-way softmax

    p^k = exp(x^k) / (exp(x^k) + exp(y^k))

computed in the max-subtracted stable form, and the virtual state handed to
the value function is the elementwise product s_v = s_r * p.  After training,
time-averaged p ranks the features; the Top-K prefix is the selected sensor
set.
"""

from dataclasses import dataclass
import json

import numpy as np

from .nn.net import _as_batch, glorot_uniform
from .nn.params import ParamVector

# p is kept strictly inside (0, 1): the logit gap saturates float64 sigmoid
# to exactly 0.0 / 1.0 around |gap| ~ 37, which would break downstream
# open-interval contracts.
P_FLOOR = 1e-300
P_CEIL = np.nextafter(1.0, 0.0)


def naive_selection_probability(x, y):
    """Textbook form of the two-way softmax, exp overflow and all.

    Only safe at small logit magnitudes; kept as an oracle for the stable
    implementation.
    """
    ex, ey = np.exp(x), np.exp(y)
    return ex / (ex + ey)


def _stable_two_way_softmax(x, y):
    """exp(x - M) / (exp(x - M) + exp(y - M)) with M = max(x, y), elementwise."""
    m = np.maximum(x, y)
    ex = np.exp(x - m)
    ey = np.exp(y - m)
    return ex / (ex + ey)


def selection_probability(x, y):
    """Per-feature weight from a selected/unselected logit pair.

    The stable two-way softmax, clipped into the open interval so callers
    can rely on 0 < p < 1 even where the softmax saturates.
    """
    return np.clip(_stable_two_way_softmax(x, y), P_FLOOR, P_CEIL)


def map_virtual(s_r, p):
    """Virtual state: elementwise product of the real state and the weights."""
    s_r = np.asarray(s_r, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if s_r.shape != p.shape:
        raise ValueError(f"state shape {s_r.shape} != weight shape {p.shape}")
    return s_r * p


def map_virtual_backward(d_sv, s_r, p):
    """Product rule: returns (d_s_r, d_p)."""
    return d_sv * p, d_sv * s_r


class AttentionEvaluator:
    """Trunk + two shared heads; one ParamVector holds all of psi.

    Heads are realized as two [n_e x m] matrices instead of m separate
    two-output networks; with the shared trunk this computes the same
    per-feature (x^k, y^k) pairs.  Head weights start near zero so every
    feature opens at p ~ 0.5 (no prior preference) while the asymmetry is
    still enough to give the trunk a gradient from the first update.
    """

    def __init__(self, m, n_e=20, rng=None, name="attention"):
        if m < 1 or n_e < 1:
            raise ValueError("m and n_e must be positive")
        self.m = int(m)
        self.n_e = int(n_e)
        self.name = name
        self.pv = ParamVector(
            [
                ("trunk.W", (self.m, self.n_e)),
                ("trunk.b", (self.n_e,)),
                ("head_x.W", (self.n_e, self.m)),
                ("head_x.b", (self.m,)),
                ("head_y.W", (self.n_e, self.m)),
                ("head_y.b", (self.m,)),
            ]
        )
        self.W_E = self.pv.view("trunk.W")
        self.b_E = self.pv.view("trunk.b")
        self.W_x = self.pv.view("head_x.W")
        self.b_x = self.pv.view("head_x.b")
        self.W_y = self.pv.view("head_y.W")
        self.b_y = self.pv.view("head_y.b")
        if rng is not None:
            self.init_params(rng)
        self._cache = None

    def init_params(self, rng):
        self.W_E[:] = glorot_uniform(rng, self.m, self.n_e)
        self.b_E[:] = 0.0
        self.W_x[:] = 0.1 * glorot_uniform(rng, self.n_e, self.m)
        self.b_x[:] = 0.0
        self.W_y[:] = 0.1 * glorot_uniform(rng, self.n_e, self.m)
        self.b_y[:] = 0.0

    def compute_weights(self, s_r):
        """Selection probabilities p for one state or a batch of states."""
        s2, single = _as_batch(s_r, self.m, f"{self.name} input")
        if not np.all(np.isfinite(s2)):
            raise ValueError(f"{self.name}: non-finite entries in input state")
        e = np.tanh(s2 @ self.W_E + self.b_E)
        x = e @ self.W_x + self.b_x
        y = e @ self.W_y + self.b_y
        raw = _stable_two_way_softmax(x, y)
        p = np.clip(raw, P_FLOOR, P_CEIL)
        self._cache = (s2, e, raw, p, single)
        return p[0] if single else p

    def backward_weights(self, d_p):
        """Backprop through compute_weights; accumulates psi gradients,
        returns dLoss/ds_r."""
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward without cached forward")
        s2, e, raw, _, single = self._cache
        d2, d_single = _as_batch(d_p, self.m, f"{self.name} weight gradient")
        if d_single != single or d2.shape[0] != s2.shape[0]:
            raise ValueError(f"{self.name}: gradient batch does not match forward batch")
        # dp/d(x - y) = p(1 - p); saturated entries legitimately get 0
        d_z = d2 * raw * (1.0 - raw)
        gv = self.pv.grad_view
        gv("head_x.W")[:] += e.T @ d_z
        gv("head_x.b")[:] += d_z.sum(axis=0)
        gv("head_y.W")[:] -= e.T @ d_z
        gv("head_y.b")[:] -= d_z.sum(axis=0)
        d_e = d_z @ (self.W_x - self.W_y).T
        d_pre = d_e * (1.0 - e * e)
        gv("trunk.W")[:] += s2.T @ d_pre
        gv("trunk.b")[:] += d_pre.sum(axis=0)
        d_s = d_pre @ self.W_E.T
        return d_s[0] if single else d_s

    def virtual_state(self, s_r):
        """s_v = s_r * p(s_r), cached for backward_virtual."""
        s2, single = _as_batch(s_r, self.m, f"{self.name} input")
        p = self.compute_weights(s2)
        self._virtual_cache = (s2, p, single)
        return (s2 * p)[0] if single else s2 * p

    def backward_virtual(self, d_sv):
        """Backprop s_v = s_r * p(s_r): psi gradients plus total dLoss/ds_r
        (direct product term and the path through p)."""
        s2, p, single = self._virtual_cache
        d2, _ = _as_batch(d_sv, self.m, f"{self.name} virtual gradient")
        d_sr_direct, d_p = map_virtual_backward(d2, s2, p)
        d_sr_through_p = self.backward_weights(d_p)
        d_total = d_sr_direct + d_sr_through_p
        return d_total[0] if single else d_total

    def clone(self):
        other = AttentionEvaluator(self.m, self.n_e, rng=None, name=self.name)
        other.pv.copy_data_from(self.pv)
        return other

    def arch_meta(self):
        return {"m": self.m, "n_e": self.n_e, "name": self.name}

    @classmethod
    def from_meta(cls, meta):
        return cls(meta["m"], meta["n_e"], name=meta.get("name", "attention"))


@dataclass
class WeightSnapshot:
    step: int
    p: np.ndarray


def _as_weight_matrix(history):
    rows = [np.asarray(h.p if isinstance(h, WeightSnapshot) else h, dtype=np.float64)
            for h in history]
    return np.stack(rows)


def snapshot_and_average(history, window):
    """Mean weight per feature over the last `window` snapshots, ranked.

    Returns a list of (feature_index, mean_weight) sorted by weight
    descending; equal means fall back to lower index first.
    """
    if len(history) == 0:
        raise ValueError("cannot rank features from an empty weight history")
    if not 1 <= window <= len(history):
        raise ValueError(f"window {window} outside [1, {len(history)}]")
    mat = _as_weight_matrix(history)
    means = mat[-window:].mean(axis=0)
    order = sorted(range(means.size), key=lambda i: (-means[i], i))
    return [(i, float(means[i])) for i in order]


def top_k(ranking, k):
    """First k feature indices of a ranking from snapshot_and_average."""
    if not 1 <= k <= len(ranking):
        raise ValueError(f"k={k} outside [1, {len(ranking)}]")
    return [idx for idx, _ in ranking[:k]]


def write_weight_history_csv(path, steps, history):
    """CSV of the full weight trajectory: iteration, feature_0, ..."""
    mat = _as_weight_matrix(history)
    if len(steps) != mat.shape[0]:
        raise ValueError("steps and history lengths differ")
    cols = ["iteration"] + [f"feature_{k}" for k in range(mat.shape[1])]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for step, row in zip(steps, mat):
            fh.write("%d,%s\n" % (step, ",".join("%.17g" % v for v in row)))


def ranking_records(ranking, names):
    """JSON-ready ranking rows: {index, name, mean_weight, rank}."""
    if len(names) != len(ranking):
        raise ValueError("one name per ranked feature required")
    return [
        {"index": idx, "name": names[idx], "mean_weight": w, "rank": r + 1}
        for r, (idx, w) in enumerate(ranking)
    ]


def write_ranking_json(path, ranking, names):
    with open(path, "w") as fh:
        json.dump(ranking_records(ranking, names), fh, indent=2)
        fh.write("\n")
