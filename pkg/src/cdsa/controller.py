"""Conservative action correction: joint training and the corrected controller.

The controller nudges a base policy's action toward regions the offline data
supports, using three learned pieces: an action-score field (direct gradient
step on the action), a state-score field plus an inverse dynamics model (a
desired state displacement realized as an action), and the normalization
stats they share. The correction rule is

    a <- clip(a + k1 * (action_std * g(s, a)) + k2 * I(s, s + state_step), bounds)

applied 1 + n_refine times, re-evaluating both terms at the updated action
each pass. Scores live in normalized coordinates; the k1 term is mapped back
to env units through the action std, and the inverse-dynamics term is already
an env-unit action.

A small Langevin sampler over a score function is included as a diagnostic;
the controller itself never samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, NormStats
from .envs import Env, EnvSpec, Policy
from .invdyn import (
    InvDynModel,
    InvDynTrainConfig,
    infer_action,
    invdyn_loss,
    model_dims,
)
from .invdyn import LEAKY_SLOPE as INVDYN_SLOPE
from .neuralcore import AdamState, Rng, adam_step, forward_batch, mlp_init
from .scorefield import (
    LEAKY_SLOPE as SCORE_SLOPE,
    ScoreField,
    ScoreKind,
    ScoreTrainConfig,
    dsm_loss_reparam_given_noise,
    eval_score,
    field_dims,
)

ABLATIONS = ("full", "no_a1", "no_a2", "baseline")


class ControlError(ValueError):
    """Dimension mismatch or non-finite value inside the controller."""


@dataclass
class CdsaModels:
    action_score: ScoreField
    state_score: ScoreField
    invdyn: InvDynModel
    norm: NormStats

    def validate(self) -> None:
        if self.action_score.kind is not ScoreKind.ACTION:
            raise ControlError("action_score must be an ACTION field")
        if self.state_score.kind is not ScoreKind.STATE:
            raise ControlError("state_score must be a STATE field")
        for other in (self.state_score.norm, self.invdyn.norm):
            if not self.norm.equals(other):
                raise ControlError("all models must share one set of norm stats")
        if not self.norm.equals(self.action_score.norm):
            raise ControlError("all models must share one set of norm stats")

    @property
    def state_dim(self) -> int:
        return len(self.norm.state_mean)

    @property
    def action_dim(self) -> int:
        return len(self.norm.action_mean)


@dataclass
class ControlConfig:
    k1: float
    k2: float
    action_low: np.ndarray
    action_high: np.ndarray
    n_refine: int = 1
    ablation: str = "full"

    def validate(self) -> None:
        if self.k1 < 0 or self.k2 < 0:
            raise ControlError(f"k1 and k2 must be >= 0, got {self.k1}, {self.k2}")
        if self.n_refine < 0:
            raise ControlError(f"n_refine must be >= 0, got {self.n_refine}")
        if self.ablation not in ABLATIONS:
            raise ControlError(f"ablation must be one of {ABLATIONS}")
        low = np.asarray(self.action_low, dtype=np.float64)
        high = np.asarray(self.action_high, dtype=np.float64)
        if not np.all(low < high):
            raise ControlError("action_low must be < action_high elementwise")


@dataclass
class LangevinConfig:
    alpha: float
    steps: int

    def validate(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ControlError(f"alpha must be finite and positive, got {self.alpha}")
        if self.steps < 0:
            raise ControlError(f"steps must be >= 0, got {self.steps}")


def train_cdsa(dataset: Dataset, score_cfg: ScoreTrainConfig,
               invdyn_cfg: InvDynTrainConfig,
               histories_out: dict | None = None) -> CdsaModels:
    """Train both score fields and the inverse dynamics model in one loop.

    The three models never interact during training, so one interleaved loop
    with per-model rng streams produces checkpoints bitwise identical to
    training each model alone: the action field with score_cfg.seed, the
    state field with score_cfg.seed + 1, the inverse model with
    invdyn_cfg.seed. When histories_out is given it is filled with per-step
    (step, loss) lists under keys action_score, state_score, invdyn.
    """
    score_cfg.validate()
    invdyn_cfg.validate()
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    norm = dataset.norm
    states_n = norm.normalize_state(dataset.states)
    next_n = norm.normalize_state(dataset.next_states)
    actions_n = norm.normalize_action(dataset.actions)
    ds, da = dataset.state_dim, dataset.action_dim

    rng_g = Rng(score_cfg.seed)
    rng_h = Rng(score_cfg.seed + 1)
    rng_i = Rng(invdyn_cfg.seed)
    net_g = mlp_init(field_dims(ScoreKind.ACTION, ds, da), SCORE_SLOPE, rng_g)
    net_h = mlp_init(field_dims(ScoreKind.STATE, ds, da), SCORE_SLOPE, rng_h)
    net_i = mlp_init(model_dims(ds, da), INVDYN_SLOPE, rng_i)
    opt_g = AdamState.for_params(net_g)
    opt_h = AdamState.for_params(net_h)
    opt_i = AdamState.for_params(net_i)

    hist: dict = {"action_score": [], "state_score": [], "invdyn": []}
    n = len(dataset)
    for step in range(max(score_cfg.iterations, invdyn_cfg.iterations)):
        if step < score_cfg.iterations:
            idx = rng_g.integers(n, size=score_cfg.batch_size)
            z = rng_g.normal(size=(score_cfg.batch_size, da))
            loss, grads = dsm_loss_reparam_given_noise(
                net_g, states_n[idx], actions_n[idx], score_cfg.sigma, z, ScoreKind.ACTION)
            adam_step(opt_g, net_g, grads, score_cfg.lr)
            hist["action_score"].append((step, loss))

            idx = rng_h.integers(n, size=score_cfg.batch_size)
            z = rng_h.normal(size=(score_cfg.batch_size, ds))
            loss, grads = dsm_loss_reparam_given_noise(
                net_h, states_n[idx], actions_n[idx], score_cfg.sigma, z, ScoreKind.STATE)
            adam_step(opt_h, net_h, grads, score_cfg.lr)
            hist["state_score"].append((step, loss))
        if step < invdyn_cfg.iterations:
            idx = rng_i.integers(n, size=invdyn_cfg.batch_size)
            loss, grads = invdyn_loss(net_i, states_n[idx], next_n[idx], actions_n[idx])
            adam_step(opt_i, net_i, grads, invdyn_cfg.lr)
            hist["invdyn"].append((step, loss))
    if histories_out is not None:
        histories_out.update(hist)

    models = CdsaModels(
        action_score=ScoreField(net_g, ScoreKind.ACTION, score_cfg.sigma, norm),
        state_score=ScoreField(net_h, ScoreKind.STATE, score_cfg.sigma, norm),
        invdyn=InvDynModel(net_i, norm),
        norm=norm,
    )
    models.validate()
    return models


def correct_action(models: CdsaModels, s: np.ndarray, a_o: np.ndarray,
                   cfg: ControlConfig, deltas_out: list | None = None) -> np.ndarray:
    """Apply the correction rule to one action. Result is always in bounds.

    With ablation "baseline", or k1 = k2 = 0, the original action is returned
    untouched (bitwise). Disabled terms are skipped entirely, never added as
    zeros, so ablations agree bitwise with the matching k at 0. Per-pass
    action-delta norms are appended to deltas_out when given.
    """
    cfg.validate()
    s = np.asarray(s, dtype=np.float64)
    a_o = np.asarray(a_o, dtype=np.float64)
    low = np.asarray(cfg.action_low, dtype=np.float64)
    high = np.asarray(cfg.action_high, dtype=np.float64)
    if s.shape != (models.state_dim,) or a_o.shape != (models.action_dim,):
        raise ControlError(
            f"expected state dim {models.state_dim} and action dim "
            f"{models.action_dim}, got {s.shape} and {a_o.shape}")
    use_a1 = cfg.ablation in ("full", "no_a2") and cfg.k1 != 0.0
    use_a2 = cfg.ablation in ("full", "no_a1") and cfg.k2 != 0.0
    a_cur = np.clip(a_o, low, high)
    if not (use_a1 or use_a2):
        return a_cur
    norm = models.norm
    s_n = norm.normalize_state(s)
    for _ in range(1 + cfg.n_refine):
        delta = np.zeros_like(a_cur)
        if use_a1:
            g = eval_score(models.action_score, s, a_cur)
            delta = delta + cfg.k1 * (norm.action_std * g)
        if use_a2:
            h = eval_score(models.state_score, s, a_cur)
            s_tilde = norm.denormalize_state(s_n + h)
            a2 = infer_action(models.invdyn, s, s_tilde)
            delta = delta + cfg.k2 * a2
        a_new = np.clip(a_cur + delta, low, high)
        if not np.all(np.isfinite(a_new)):
            raise ControlError("non-finite corrected action (diverged model)")
        if deltas_out is not None:
            deltas_out.append(float(np.linalg.norm(a_new - a_cur)))
        a_cur = a_new
    return a_cur


@dataclass
class Trajectory:
    """One episode's step records plus the state the episode ended in."""

    states: np.ndarray
    actions_base: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    risk_flags: np.ndarray
    dones: np.ndarray
    final_state: np.ndarray
    reached_goal: bool
    delta_norms: list

    def __len__(self) -> int:
        return len(self.rewards)

    @property
    def undiscounted_return(self) -> float:
        return float(np.sum(self.rewards))


def control_episode(spec: EnvSpec, base_policy: Policy, models: CdsaModels | None,
                    cfg: ControlConfig, rng: Rng,
                    max_steps: int | None = None) -> Trajectory:
    """Roll one episode, correcting every base action before stepping the env.

    models = None runs the base policy untouched (same as ablation
    "baseline"). max_steps overrides the env spec's budget when given; 0 yields an
    empty trajectory with return 0.
    """
    if models is not None:
        models.validate()
        if models.state_dim != spec.state_dim or models.action_dim != spec.action_dim:
            raise ControlError("model dims do not match the env spec")
    budget = spec.max_steps if max_steps is None else max_steps
    env = Env(spec, rng)
    s = env.reset()
    states, a_os, a_cs, rewards, risks, dones, deltas = [], [], [], [], [], [], []
    for _ in range(budget):
        a_o = np.clip(base_policy.act(s, env.context(), env.rng),
                      spec.action_low, spec.action_high)
        if models is None:
            a = a_o
        else:
            step_deltas: list = []
            a = correct_action(models, s, a_o, cfg, step_deltas)
            deltas.append(step_deltas)
        s2, r, done, risk = env.step(a)
        states.append(s)
        a_os.append(a_o)
        a_cs.append(a)
        rewards.append(r)
        risks.append(risk)
        dones.append(done)
        s = s2
        if done:
            break
    ctx = env.context()
    at_goal = float(np.linalg.norm(ctx.s - spec.goal)) <= spec.capture_radius
    reached = at_goal and (spec.variant != "goods" or ctx.goods_visited)
    ds, da = spec.state_dim, spec.action_dim
    return Trajectory(
        states=np.array(states, dtype=np.float64).reshape(-1, ds),
        actions_base=np.array(a_os, dtype=np.float64).reshape(-1, da),
        actions=np.array(a_cs, dtype=np.float64).reshape(-1, da),
        rewards=np.array(rewards, dtype=np.float64),
        risk_flags=np.array(risks, dtype=bool),
        dones=np.array(dones, dtype=bool),
        final_state=np.asarray(s, dtype=np.float64),
        reached_goal=bool(reached and len(rewards) > 0),
        delta_norms=deltas,
    )


def save_trajectory_csv(traj: Trajectory, path: str) -> None:
    """Write step, s..., a_o..., a..., r, risk_flag, done rows."""
    ds = traj.states.shape[1] if len(traj) else len(traj.final_state)
    da = traj.actions.shape[1] if len(traj) else 0
    cols = (["step"]
            + [f"s{i}" for i in range(ds)]
            + [f"a_o{i}" for i in range(da)]
            + [f"a{i}" for i in range(da)]
            + ["r", "risk_flag", "done"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for t in range(len(traj)):
            row = ([str(t)]
                   + [f"{v:.17g}" for v in traj.states[t]]
                   + [f"{v:.17g}" for v in traj.actions_base[t]]
                   + [f"{v:.17g}" for v in traj.actions[t]]
                   + [f"{traj.rewards[t]:.17g}",
                      str(int(traj.risk_flags[t])),
                      str(int(traj.dones[t]))])
            fh.write(",".join(row) + "\n")


def load_trajectory_csv(path: str) -> Trajectory:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    ds = sum(1 for c in header if c.startswith("s") and c != "step")
    da = sum(1 for c in header if c.startswith("a_o"))
    vals = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    if len(vals) == 0:
        vals = vals.reshape(0, len(header))
    states = vals[:, 1:1 + ds]
    a_o = vals[:, 1 + ds:1 + ds + da]
    a = vals[:, 1 + ds + da:1 + ds + 2 * da]
    r = vals[:, 1 + ds + 2 * da]
    risk = vals[:, 2 + ds + 2 * da].astype(bool)
    done = vals[:, 3 + ds + 2 * da].astype(bool)
    final = states[-1] if len(states) else np.zeros(ds)
    return Trajectory(states, a_o, a, r, risk, done, final,
                      reached_goal=False, delta_norms=[])


def langevin_sample(score_fn, x0: np.ndarray, cfg: LangevinConfig, rng: Rng) -> np.ndarray:
    """Run x <- x + alpha * score(x) + sqrt(2 alpha) * z for cfg.steps steps.

    score_fn maps an (..., d) array to same-shape score values; x0 may be a
    single point or a batch of chains. Diagnostic only.
    """
    cfg.validate()
    x = np.array(x0, dtype=np.float64)
    root = math.sqrt(2.0 * cfg.alpha)
    for t in range(cfg.steps):
        g = np.asarray(score_fn(x), dtype=np.float64)
        if g.shape != x.shape:
            raise ControlError(f"score shape {g.shape} does not match x {x.shape}")
        x = x + cfg.alpha * g + root * rng.normal(size=x.shape)
        if not np.all(np.isfinite(x)):
            raise ControlError(f"langevin iterate diverged at step {t}")
    return x


def conditional_score_fn(field: ScoreField, fixed: np.ndarray):
    """Adapt a score field to a Langevin score over its scored coordinates.

    For an action field, `fixed` is a state and the returned function maps
    normalized actions to their scores; for a state field, `fixed` is an
    action and the function maps normalized states. Inputs and outputs are in
    normalized coordinates.
    """
    if field.kind is ScoreKind.ACTION:
        fixed_n = field.norm.normalize_state(fixed)
    else:
        fixed_n = field.norm.normalize_action(fixed)

    def fn(x: np.ndarray) -> np.ndarray:
        x2 = np.atleast_2d(np.asarray(x, dtype=np.float64))
        tile = np.broadcast_to(fixed_n, (len(x2), len(fixed_n)))
        inp = (np.hstack([tile, x2]) if field.kind is ScoreKind.ACTION
               else np.hstack([x2, tile]))
        out, _ = forward_batch(field.params, inp)
        return out.reshape(np.asarray(x).shape)

    return fn
