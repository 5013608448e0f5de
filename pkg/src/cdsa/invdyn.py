"""Inverse dynamics: recover the action that moves one state to another.

The model maps a concatenated (state, successor state) pair to the action the
behavior policy took between them, trained by plain squared-error regression
on dataset transitions. The controller queries it with imagined successors to
turn a desired state displacement into an executable action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, NormStats
from .neuralcore import (
    AdamState,
    MlpParams,
    Rng,
    adam_step,
    backward_batch,
    forward_batch,
    mlp_init,
)

HIDDEN_DIMS = [128, 128, 128]
LEAKY_SLOPE = 0.2
DEFAULT_LR = 1e-3
DEFAULT_BATCH = 256
DEFAULT_ITERS = 10000


@dataclass
class InvDynModel:
    params: MlpParams
    norm: NormStats

    @property
    def state_dim(self) -> int:
        return len(self.norm.state_mean)

    @property
    def action_dim(self) -> int:
        return len(self.norm.action_mean)


@dataclass
class InvDynTrainConfig:
    iterations: int = DEFAULT_ITERS
    batch_size: int = DEFAULT_BATCH
    lr: float = DEFAULT_LR
    seed: int = 0

    def validate(self) -> None:
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")


def model_dims(state_dim: int, action_dim: int) -> list[int]:
    return [2 * state_dim] + HIDDEN_DIMS + [action_dim]


def invdyn_loss(net: MlpParams, states: np.ndarray, next_states: np.ndarray,
                actions: np.ndarray):
    """Mean squared action-recovery error with exact gradients.

    loss = mean over the batch of ||net(s, s_next) - a||^2, summed over
    action coordinates. Zero net and a single action (0.3, -0.4) give 0.25.
    """
    states = np.asarray(states, dtype=np.float64)
    next_states = np.asarray(next_states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    x = np.hstack([states, next_states])
    out, cache = forward_batch(net, x)
    resid = out - actions
    n = len(resid)
    loss = float(np.sum(resid * resid)) / n
    grads, _ = backward_batch(net, cache, 2.0 * resid / n)
    return loss, grads


def train_invdyn(dataset: Dataset, config: InvDynTrainConfig):
    """Adam regression of normalized actions from normalized state pairs.

    Returns (model, loss_history). Deterministic given config.seed.
    """
    config.validate()
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    norm = dataset.norm
    states_n = norm.normalize_state(dataset.states)
    next_n = norm.normalize_state(dataset.next_states)
    actions_n = norm.normalize_action(dataset.actions)
    rng = Rng(config.seed)
    net = mlp_init(model_dims(dataset.state_dim, dataset.action_dim), LEAKY_SLOPE, rng)
    opt = AdamState.for_params(net)
    history = []
    for step in range(config.iterations):
        idx = rng.integers(len(dataset), size=config.batch_size)
        loss, grads = invdyn_loss(net, states_n[idx], next_n[idx], actions_n[idx])
        adam_step(opt, net, grads, config.lr)
        history.append((step, loss))
    return InvDynModel(net, norm), history


def infer_action(model: InvDynModel, s: np.ndarray, s_tilde: np.ndarray) -> np.ndarray:
    """Action predicted to carry s to s_tilde, in env units both ways."""
    s_n = model.norm.normalize_state(s)
    t_n = model.norm.normalize_state(s_tilde)
    out, _ = forward_batch(model.params, np.hstack([s_n, t_n])[None, :])
    return model.norm.denormalize_action(out[0])
