"""dafs: feature selection for RL sensors via a dual-world critic.

The actor acts on real observations while the critic scores virtual
observations weighted by a learned per-feature attention vector; the
converged weights rank sensors for Top-K selection.
"""

__version__ = "0.1.0"
