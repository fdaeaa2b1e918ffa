"""unilite: a desk-scale heterogeneous RL training runtime.

CPU collectors feed a learner through three coupling regimes (synchronized
PPO, asynchronous APPO with V-trace, replay-based SAC behind a simulated
device boundary), with trace-based per-cycle attribution of where the time
goes.
"""

__version__ = "0.1.0"
