"""Env construction by name string, plus trajectory CSV dumps."""

import numpy as np

from .augment import AugmentedEnv
from .classic import Acrobot, CartPole, MountainCar, MountainCarContinuous, Pendulum
from .synth import SynthSensorField

_CLASSIC = {
    "cartpole": CartPole,
    "pendulum": Pendulum,
    "mountaincar": MountainCar,
    "mountaincar-cont": MountainCarContinuous,
    "acrobot": Acrobot,
}


def env_names():
    return sorted(_CLASSIC) + ["synth:m=<M>,k=<K>"]


def _parse_synth(name):
    params = {"m": 30, "k": 5}
    body = name[len("synth"):]
    if body.startswith(":"):
        for pair in body[1:].split(","):
            if "=" not in pair:
                raise ValueError(f"bad synth parameter {pair!r}; expected m=<int> or k=<int>")
            key, val = pair.split("=", 1)
            key = key.strip()
            if key not in params:
                raise ValueError(f"unknown synth parameter {key!r}; expected m or k")
            try:
                params[key] = int(val)
            except ValueError:
                raise ValueError(f"synth parameter {key}={val!r} is not an integer") from None
    elif body:
        raise ValueError(f"unknown environment {name!r}; available: {', '.join(env_names())}")
    return params


def make(name):
    """Env with the full experimental feature set.

    Classic tasks come wrapped with trig and noise channels; the synthetic
    sensor field carries its noise sensors natively.
    """
    key = name.strip().lower()
    if key.startswith("synth"):
        p = _parse_synth(key)
        return SynthSensorField(m=p["m"], k_true=p["k"])
    if key in _CLASSIC:
        return AugmentedEnv(_CLASSIC[key]())
    raise ValueError(f"unknown environment {name!r}; available: {', '.join(env_names())}")


def make_base(name):
    """The bare task without augmentation channels."""
    key = name.strip().lower()
    if key.startswith("synth"):
        p = _parse_synth(key)
        return SynthSensorField(m=p["m"], k_true=p["k"])
    if key in _CLASSIC:
        return _CLASSIC[key]()
    raise ValueError(f"unknown environment {name!r}; available: {', '.join(env_names())}")


def _action_text(action):
    arr = np.asarray(action).reshape(-1)
    if arr.size == 1:
        v = arr[0]
        return "%d" % v if float(v).is_integer() and arr.dtype.kind in "iu" else "%.17g" % v
    return ";".join("%.17g" % v for v in arr)


def write_trajectory_csv(path, spec, rows):
    """rows: iterable of (step, state, action, reward, done)."""
    cols = ["step"] + list(spec.feature_names) + ["action", "reward", "done"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for step, state, action, reward, done in rows:
            fields = [str(step)]
            fields += ["%.17g" % v for v in np.asarray(state).reshape(-1)]
            fields.append(_action_text(action))
            fields.append("%.17g" % reward)
            fields.append("1" if done else "0")
            fh.write(",".join(fields) + "\n")
