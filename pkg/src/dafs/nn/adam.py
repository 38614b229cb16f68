"""Adam optimizer over a ParamVector."""

import numpy as np

from . import backend


class Adam:
    """Standard Adam with bias correction.

    step() consumes the gradients accumulated in the ParamVector: it applies
    one update, increments the step counter, and zeroes the gradient buffer.
    A zero gradient leaves the parameters unchanged.
    """

    def __init__(self, pv, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.pv = pv
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)

    def step(self):
        pv = self.pv
        if not np.all(np.isfinite(pv.grad)):
            bad = int(np.flatnonzero(~np.isfinite(pv.grad))[0])
            raise FloatingPointError(
                f"non-finite gradient in parameter block '{pv.block_at(bad)}'"
            )
        pv.step += 1
        backend.active().adam_step(
            pv.data, pv.grad, pv.m, pv.v, pv.step, self.lr, self.beta1, self.beta2, self.eps
        )
        pv.zero_grad()
