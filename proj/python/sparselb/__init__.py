"""Load balancing on sparse graphs: epoch kernel, simulator, policies and MF-R training."""

import json

from . import _sparselb
from ._sparselb import (
    EpochKernel,
    Topology,
    bethe_size,
    discounted_return,
    effective_rates,
    mean_ci95,
    topology,
)

__all__ = [
    "EpochKernel",
    "MfcEnv",
    "Topology",
    "bethe_size",
    "discounted_return",
    "effective_rates",
    "evaluate",
    "mean_ci95",
    "run_episode",
    "sweep",
    "topology",
    "train",
]


def _dump(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def run_episode(topology, policy, delta_t, horizon=50, seed=0, system=None):
    """Simulate one episode on a built Topology with a policy spec such as "jsq"."""
    return _sparselb.run_episode(topology, policy, delta_t, horizon, seed, _dump(system))


def evaluate(topology, policy, delta_t, episodes=100, horizon=50, seed=0, workers=1, system=None):
    """Mean drops and 95% CI for one (topology, policy, delta_t) cell, seeded like the CLI."""
    return _sparselb.evaluate(topology, policy, delta_t, episodes, horizon, seed, workers, _dump(system))


def sweep(config, workers=1):
    """Run an experiment grid given as a dict (same schema as the CLI config)."""
    return _sparselb.sweep(_dump(config), workers)


def train(topology, env=None, trainer=None, seed=0, method="ppo"):
    """Train an MF-R policy. Returns the policy document, the curve and the best iteration."""
    out = _sparselb.train(topology, _dump(env), _dump(trainer), seed, method)
    out["policy"] = json.loads(out["policy"])
    return out


class MfcEnv(_sparselb.MfcEnv):
    """Mean-field control environment on a finite graph."""

    def __init__(self, topology, env=None):
        super().__init__(topology, _dump(env))
