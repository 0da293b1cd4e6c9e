import numpy as np
import pytest

from powbandits.model import ArmModel


def random_arm(rng: np.random.Generator, n_states: int, budget: float | None = None,
               reward_scale: float = 1.0) -> ArmModel:
    """Dense random arm with Dirichlet kernel rows and U(0,1) penalties."""
    reward = rng.uniform(-reward_scale, reward_scale, size=(n_states, 2))
    penalty = rng.uniform(0.0, 1.0, size=(n_states, 2))
    kernel = rng.dirichlet(np.ones(n_states), size=(n_states, 2))
    init = rng.dirichlet(np.ones(n_states))
    if budget is None:
        budget = float(rng.uniform(0.1, 0.9))
    return ArmModel(reward, penalty, kernel, budget, init)


def uniform_channel_arm(activation_rewards, budget: float) -> ArmModel:
    """Activation-constrained arm with an i.i.d.-uniform, action-independent
    kernel: r(s,1) as given, r(s,0) = 0, penalty 1-a.  The state occupancy is
    uniform under any policy, which makes fluid fixed points exact."""
    r1 = np.asarray(activation_rewards, dtype=float)
    s = len(r1)
    reward = np.zeros((s, 2))
    reward[:, 1] = r1
    penalty = np.zeros((s, 2))
    penalty[:, 0] = 1.0
    kernel = np.full((s, 2, s), 1.0 / s)
    return ArmModel(reward, penalty, kernel, budget, np.full(s, 1.0 / s))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
