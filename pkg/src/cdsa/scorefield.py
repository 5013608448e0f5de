"""Gradient fields of the dataset density, trained by denoising score matching.

Two fields share one architecture family: an action field approximating the
gradient of log density with respect to the action, and a state field
approximating the gradient with respect to the state. Training perturbs only
the scored coordinates with Gaussian noise (scale sigma, normalized units) and
regresses the network output at the perturbed point onto -z/sigma, the
analytic score of the perturbation kernel. The expected-square objective of
that regression is identical to regressing onto -(perturbed - clean)/sigma^2;
both forms are implemented, the reparameterized one for training and the
analytic-target one as an independent oracle, and they must agree to float
association order on identical draws.

Everything here operates in normalized coordinates; each trained field embeds
the normalization stats of its training dataset so it is self-describing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, NormStats
from .neuralcore import (
    AdamState,
    MlpParams,
    NeuralCoreError,
    Rng,
    adam_step,
    backward_batch,
    forward_batch,
    mlp_init,
)

HIDDEN_DIMS = [32, 128, 32]
LEAKY_SLOPE = 0.1
DEFAULT_SIGMA = 0.1
DEFAULT_LR = 3e-4
DEFAULT_BATCH = 256
DEFAULT_ITERS = 10000


class ScoreKind(enum.Enum):
    ACTION = "action_score"
    STATE = "state_score"


@dataclass
class ScoreField:
    params: MlpParams
    kind: ScoreKind
    sigma: float
    norm: NormStats

    @property
    def state_dim(self) -> int:
        return len(self.norm.state_mean)

    @property
    def action_dim(self) -> int:
        return len(self.norm.action_mean)


@dataclass
class ScoreTrainConfig:
    sigma: float = DEFAULT_SIGMA
    iterations: int = DEFAULT_ITERS
    batch_size: int = DEFAULT_BATCH
    lr: float = DEFAULT_LR
    seed: int = 0

    def validate(self) -> None:
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")


def field_dims(kind: ScoreKind, state_dim: int, action_dim: int) -> list[int]:
    out = action_dim if kind is ScoreKind.ACTION else state_dim
    return [state_dim + action_dim] + HIDDEN_DIMS + [out]


def perturb_action(x: tuple[np.ndarray, np.ndarray], sigma: float, rng: Rng):
    """Gaussian-perturb the action half of one (s, a) pair.

    Returns ((s, a + sigma*z), z); the state is untouched and z is the
    standard-normal draw the reparameterized loss needs.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s, a = x
    a = np.asarray(a, dtype=np.float64)
    z = rng.normal(size=a.shape)
    return (np.asarray(s, dtype=np.float64), a + sigma * z), z


def perturb_state(x: tuple[np.ndarray, np.ndarray], sigma: float, rng: Rng):
    """State-side counterpart of perturb_action: (s + sigma*z, a), z."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s, a = x
    s = np.asarray(s, dtype=np.float64)
    z = rng.normal(size=s.shape)
    return (s + sigma * z, np.asarray(a, dtype=np.float64)), z


def _split_dims(net: MlpParams, kind: ScoreKind) -> tuple[int, int]:
    """(state_dim, action_dim) implied by the net shape and field kind."""
    if kind is ScoreKind.ACTION:
        action_dim = net.out_dim
        state_dim = net.in_dim - action_dim
    else:
        state_dim = net.out_dim
        action_dim = net.in_dim - state_dim
    if state_dim < 1 or action_dim < 1:
        raise NeuralCoreError(f"net dims {net.layer_dims} inconsistent with {kind}")
    return state_dim, action_dim


def dsm_loss_reparam_given_noise(net: MlpParams, states: np.ndarray, actions: np.ndarray,
                                 sigma: float, z: np.ndarray, kind: ScoreKind):
    """Reparameterized denoising loss for an explicit noise draw.

    loss = mean over the batch of 0.5 * ||net(x + sigma*zbar) + z/sigma||^2,
    where zbar places z on the scored coordinates. Returns (loss, grads) with
    exact reverse-mode gradients.
    """
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if kind is ScoreKind.ACTION:
        x_tilde = np.hstack([states, actions + sigma * z])
    else:
        x_tilde = np.hstack([states + sigma * z, actions])
    out, cache = forward_batch(net, x_tilde)
    resid = out + z / sigma
    n = len(resid)
    loss = 0.5 * float(np.sum(resid * resid)) / n
    grads, _ = backward_batch(net, cache, resid / n)
    return loss, grads


def dsm_loss_reparam(net: MlpParams, batch, sigma: float, rng: Rng, kind: ScoreKind):
    """Draw one noise vector per sample and evaluate the training loss.

    `batch` is (states, actions) in normalized coordinates.
    """
    states, actions = batch
    dim = actions.shape[1] if kind is ScoreKind.ACTION else states.shape[1]
    z = rng.normal(size=(len(states), dim))
    return dsm_loss_reparam_given_noise(net, states, actions, sigma, z, kind)


def dsm_loss_reference(net: MlpParams, batch_with_noise, sigma: float,
                       kind: ScoreKind) -> float:
    """Oracle form of the denoising loss, from clean and perturbed samples.

    Regresses net(x_tilde) onto the analytic Gaussian-kernel score
    -(perturbed - clean)/sigma^2 of the scored coordinates. Never used in
    training; exists to pin the training loss down exactly.
    """
    states, actions, pert = (np.asarray(v, dtype=np.float64) for v in batch_with_noise)
    if kind is ScoreKind.ACTION:
        x_tilde = np.hstack([states, pert])
        target = -(pert - actions) / sigma**2
    else:
        x_tilde = np.hstack([pert, actions])
        target = -(pert - states) / sigma**2
    out, _ = forward_batch(net, x_tilde)
    resid = out - target
    return 0.5 * float(np.sum(resid * resid)) / len(resid)


def train_score_field(dataset: Dataset, kind: ScoreKind, config: ScoreTrainConfig):
    """Adam on the reparameterized denoising loss over normalized data.

    Returns (field, loss_history); loss_history is one (step, loss) row per
    iteration. Deterministic given config.seed.
    """
    config.validate()
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    norm = dataset.norm
    states_n = norm.normalize_state(dataset.states)
    actions_n = norm.normalize_action(dataset.actions)
    rng = Rng(config.seed)
    net = mlp_init(field_dims(kind, dataset.state_dim, dataset.action_dim), LEAKY_SLOPE, rng)
    opt = AdamState.for_params(net)
    noise_dim = dataset.action_dim if kind is ScoreKind.ACTION else dataset.state_dim
    history = []
    for step in range(config.iterations):
        idx = rng.integers(len(dataset), size=config.batch_size)
        z = rng.normal(size=(config.batch_size, noise_dim))
        loss, grads = dsm_loss_reparam_given_noise(
            net, states_n[idx], actions_n[idx], config.sigma, z, kind)
        if loss < 0:
            raise NeuralCoreError(f"negative loss {loss} at step {step}")
        adam_step(opt, net, grads, config.lr)
        history.append((step, loss))
    return ScoreField(net, kind, config.sigma, norm), history


def eval_score(field: ScoreField, s: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Score at an env-unit (s, a) pair, returned in normalized coordinates.

    Consumers that need env units rescale by the embedded stats themselves;
    the controller owns that mapping.
    """
    s_n = field.norm.normalize_state(s)
    a_n = field.norm.normalize_action(a)
    out, _ = forward_batch(field.params, np.hstack([s_n, a_n])[None, :])
    return out[0]
