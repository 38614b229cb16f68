"""Finite-difference gradient verification for networks built on ParamVector."""

import numpy as np


def grad_check(loss_fn, pv, h=1e-5, sample=None, rng=None):
    """Compare analytic gradients against central finite differences.

    loss_fn() must compute a scalar loss from the current pv.data AND leave
    the corresponding analytic gradient in pv.grad (accumulated from zero).
    Returns the maximum relative error over the checked coordinates, where
    the relative error of analytic a vs numeric n is
    |a - n| / max(|a|, |n|, 1e-8).

    sample caps how many coordinates are perturbed (all, if None or larger
    than the parameter count); the subset is drawn without replacement from
    rng so large nets can be checked in bounded time.
    """
    pv.zero_grad()
    loss_fn()
    analytic = pv.grad.copy()
    pv.zero_grad()

    n = pv.data.size
    if sample is None or sample >= n:
        coords = np.arange(n)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        coords = rng.choice(n, size=sample, replace=False)
        coords.sort()

    worst = 0.0
    for i in coords:
        orig = pv.data[i]
        pv.data[i] = orig + h
        lp = loss_fn()
        pv.zero_grad()
        pv.data[i] = orig - h
        lm = loss_fn()
        pv.zero_grad()
        pv.data[i] = orig
        numeric = (lp - lm) / (2.0 * h)
        a = analytic[i]
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        if err > worst:
            worst = err
    return float(worst)
