"""Dense network substrate: parameter storage, MLPs, Adam, gradient checks.

Hot kernels (layer forward/backward, fused Adam) live in a compiled
extension when available, with a pure-numpy fallback; see backend.py.
"""

from .adam import Adam
from .backend import active_name as backend_name
from .backend import available as available_backends
from .gradcheck import grad_check
from .net import ACT_BY_NAME, Activation, DenseLayer, MLP, glorot_uniform
from .params import ParamVector, load_snapshot, save_snapshot

__all__ = [
    "ACT_BY_NAME",
    "Activation",
    "Adam",
    "DenseLayer",
    "MLP",
    "ParamVector",
    "available_backends",
    "backend_name",
    "glorot_uniform",
    "grad_check",
    "load_snapshot",
    "save_snapshot",
]
