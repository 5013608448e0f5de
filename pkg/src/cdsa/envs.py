"""Continuous 2-D navigation environments with risky regions, plus base policies.

Three environment kinds share one transition rule (clipped action times dt,
clamped to the arena): a risky point-mass arena, a risky transportation map
with river/mountain/ice rectangles and optional goods/airport task variants,
and a free linear point used for inverse-dynamics ground truth. Entering a
risk region triggers a large penalty with small probability; occupancy is
reported deterministically so risk statistics stay low-variance.

All numeric layout lives in versioned JSON spec files, not in code. Episode
bookkeeping that is not part of the observed state (step count, goods visited,
airport used) rides in EnvState so the observed state keeps the same dims
across task variants.

Base policies: a straight-to-target scripted policy, a grid-planning scripted
policy that avoids inflated risk regions (dataset generation only), a uniform
random policy, and a behavior-cloned MLP.
"""

from __future__ import annotations

import heapq
import json
import os
from dataclasses import dataclass, field, replace

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

ENV_KINDS = ("risky_pointmass", "risky_transport", "linear_point")
VARIANTS = ("pathfinding", "goods", "airport")
RISK_LABELS = ("river", "mountain", "ice", "risk_circle")

SPEC_FORMAT = "cdsa-envspec"
SPEC_VERSION = 1


class EnvError(ValueError):
    """Invalid environment spec, state, or action."""


class PlanningError(RuntimeError):
    """The grid planner found no safe route."""


@dataclass
class Region:
    """Circle or axis-aligned rectangle with a semantic label."""

    shape: str
    label: str
    center: np.ndarray | None = None
    radius: float | None = None
    rect_min: np.ndarray | None = None
    rect_max: np.ndarray | None = None

    def validate(self) -> None:
        if self.shape == "circle":
            if self.center is None or self.radius is None or self.radius <= 0:
                raise EnvError(f"circle region needs center and radius > 0: {self}")
        elif self.shape == "rect":
            if self.rect_min is None or self.rect_max is None:
                raise EnvError(f"rect region needs min and max: {self}")
            if not np.all(self.rect_min < self.rect_max):
                raise EnvError(f"rect region needs min < max elementwise: {self}")
        else:
            raise EnvError(f"unknown region shape {self.shape!r}")

    def contains(self, p: np.ndarray) -> bool:
        return bool(self.contains_many(np.asarray(p, dtype=np.float64)[None, :])[0])

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        if self.shape == "circle":
            d = pts - self.center
            return np.sum(d * d, axis=1) <= self.radius**2
        return np.all((pts >= self.rect_min) & (pts <= self.rect_max), axis=1)

    def inflated(self, margin: float) -> "Region":
        if self.shape == "circle":
            return replace(self, radius=self.radius + margin)
        return replace(self, rect_min=self.rect_min - margin, rect_max=self.rect_max + margin)

    def reference_point(self) -> np.ndarray:
        if self.shape == "circle":
            return np.array(self.center, dtype=np.float64)
        return (self.rect_min + self.rect_max) / 2.0

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == "circle":
            r = np.array([self.radius, self.radius])
            return self.center - r, self.center + r
        return self.rect_min, self.rect_max

    def to_dict(self) -> dict:
        d: dict = {"shape": self.shape, "label": self.label}
        if self.shape == "circle":
            d["center"] = [float(v) for v in self.center]
            d["radius"] = float(self.radius)
        else:
            d["min"] = [float(v) for v in self.rect_min]
            d["max"] = [float(v) for v in self.rect_max]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        shape = d.get("shape")
        if shape == "circle":
            reg = cls(shape="circle", label=d.get("label", ""),
                      center=np.asarray(d["center"], dtype=np.float64),
                      radius=float(d["radius"]))
        elif shape == "rect":
            reg = cls(shape="rect", label=d.get("label", ""),
                      rect_min=np.asarray(d["min"], dtype=np.float64),
                      rect_max=np.asarray(d["max"], dtype=np.float64))
        else:
            raise EnvError(f"unknown region shape {shape!r}")
        reg.validate()
        return reg


@dataclass
class EnvSpec:
    kind: str
    name: str
    state_dim: int
    action_dim: int
    arena_min: np.ndarray
    arena_max: np.ndarray
    dt: float
    start_min: np.ndarray
    start_max: np.ndarray
    goal: np.ndarray
    capture_radius: float
    risk_regions: list[Region]
    risk_penalty: float
    risk_prob: float
    step_cost: float
    max_steps: int
    action_low: np.ndarray
    action_high: np.ndarray
    variant: str = "pathfinding"
    goods_region: Region | None = None
    airport_region: Region | None = None
    landing_point: np.ndarray | None = None

    def validate(self) -> None:
        if self.kind not in ENV_KINDS:
            raise EnvError(f"unknown env kind {self.kind!r}")
        if self.variant not in VARIANTS:
            raise EnvError(f"unknown variant {self.variant!r}")
        if self.state_dim != 2 or self.action_dim != 2:
            raise EnvError("only 2-D navigation is supported")
        if not np.all(self.arena_min < self.arena_max):
            raise EnvError("arena_min must be < arena_max elementwise")
        if self.dt <= 0:
            raise EnvError(f"dt must be positive, got {self.dt}")
        if self.max_steps < 1:
            raise EnvError(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0.0 <= self.risk_prob <= 1.0:
            raise EnvError(f"risk_prob must be in [0, 1], got {self.risk_prob}")
        if self.risk_penalty > 0:
            raise EnvError("risk_penalty must be <= 0")
        if self.step_cost < 0:
            raise EnvError("step_cost must be >= 0")
        if self.capture_radius <= 0:
            raise EnvError("capture_radius must be positive")
        if not np.all(self.action_low < self.action_high):
            raise EnvError("action_low must be < action_high elementwise")
        if not (np.all(self.start_min <= self.start_max)
                and self._in_arena(self.start_min) and self._in_arena(self.start_max)):
            raise EnvError("start box must sit inside the arena")
        if not self._in_arena(self.goal):
            raise EnvError("goal must sit inside the arena")
        for reg in self.risk_regions:
            reg.validate()
            lo, hi = reg.bounds()
            if not (self._in_arena(lo) and self._in_arena(hi)):
                raise EnvError(f"region {reg.label} sticks out of the arena")
        if self.variant == "goods" and self.goods_region is None:
            raise EnvError("goods variant needs goods_region")
        if self.variant == "airport":
            if self.airport_region is None or self.landing_point is None:
                raise EnvError("airport variant needs airport_region and landing_point")
            if not self._in_arena(self.landing_point):
                raise EnvError("landing_point must sit inside the arena")

    def _in_arena(self, p: np.ndarray) -> bool:
        return bool(np.all(p >= self.arena_min) and np.all(p <= self.arena_max))

    def with_variant(self, variant: str) -> "EnvSpec":
        """Same geometry, different task variant; validates the switch."""
        out = replace(self, variant=variant)
        out.validate()
        return out

    def to_dict(self) -> dict:
        d = {
            "format": SPEC_FORMAT,
            "version": SPEC_VERSION,
            "kind": self.kind,
            "name": self.name,
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "arena": {"min": [float(v) for v in self.arena_min],
                      "max": [float(v) for v in self.arena_max]},
            "dt": self.dt,
            "start": {"min": [float(v) for v in self.start_min],
                      "max": [float(v) for v in self.start_max]},
            "goal": {"position": [float(v) for v in self.goal],
                     "capture_radius": self.capture_radius},
            "risk": {"penalty": self.risk_penalty, "prob": self.risk_prob,
                     "regions": [r.to_dict() for r in self.risk_regions]},
            "step_cost": self.step_cost,
            "max_steps": self.max_steps,
            "action_bounds": {"low": [float(v) for v in self.action_low],
                              "high": [float(v) for v in self.action_high]},
            "variant": self.variant,
        }
        d["goods_region"] = self.goods_region.to_dict() if self.goods_region else None
        d["airport_region"] = self.airport_region.to_dict() if self.airport_region else None
        d["landing_point"] = ([float(v) for v in self.landing_point]
                              if self.landing_point is not None else None)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnvSpec":
        if d.get("format") != SPEC_FORMAT:
            raise EnvError(f"not an env spec file (format {d.get('format')!r})")
        if d.get("version") != SPEC_VERSION:
            raise EnvError(f"unsupported env spec version {d.get('version')!r}")
        try:
            spec = cls(
                kind=d["kind"],
                name=d.get("name", d["kind"]),
                state_dim=int(d["state_dim"]),
                action_dim=int(d["action_dim"]),
                arena_min=np.asarray(d["arena"]["min"], dtype=np.float64),
                arena_max=np.asarray(d["arena"]["max"], dtype=np.float64),
                dt=float(d["dt"]),
                start_min=np.asarray(d["start"]["min"], dtype=np.float64),
                start_max=np.asarray(d["start"]["max"], dtype=np.float64),
                goal=np.asarray(d["goal"]["position"], dtype=np.float64),
                capture_radius=float(d["goal"]["capture_radius"]),
                risk_regions=[Region.from_dict(r) for r in d["risk"]["regions"]],
                risk_penalty=float(d["risk"]["penalty"]),
                risk_prob=float(d["risk"]["prob"]),
                step_cost=float(d["step_cost"]),
                max_steps=int(d["max_steps"]),
                action_low=np.asarray(d["action_bounds"]["low"], dtype=np.float64),
                action_high=np.asarray(d["action_bounds"]["high"], dtype=np.float64),
                variant=d.get("variant", "pathfinding"),
                goods_region=(Region.from_dict(d["goods_region"])
                              if d.get("goods_region") else None),
                airport_region=(Region.from_dict(d["airport_region"])
                                if d.get("airport_region") else None),
                landing_point=(np.asarray(d["landing_point"], dtype=np.float64)
                               if d.get("landing_point") is not None else None),
            )
        except KeyError as exc:
            raise EnvError(f"env spec missing field {exc}") from exc
        spec.validate()
        return spec


def load_env_spec(path: str) -> EnvSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise EnvError(f"cannot read env spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise EnvError(f"env spec {path} is not valid JSON: {exc}") from exc
    return EnvSpec.from_dict(d)


def save_env_spec(spec: EnvSpec, path: str) -> None:
    spec.validate()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2)
        fh.write("\n")


def builtin_spec_path(name: str) -> str:
    """Path of a spec file shipped with the package (pointmass, transport, linear)."""
    path = os.path.join(os.path.dirname(__file__), "envspecs", f"{name}.json")
    if not os.path.exists(path):
        raise EnvError(f"no builtin env spec named {name!r}")
    return path


def in_risk_region(spec: EnvSpec, p: np.ndarray) -> bool:
    return any(reg.contains(p) for reg in spec.risk_regions)


@dataclass
class EnvState:
    """Full per-episode state: observed position plus episode bookkeeping."""

    s: np.ndarray
    steps: int = 0
    goods_visited: bool = False
    airport_used: bool = False
    done: bool = False


def env_reset(spec: EnvSpec, rng: Rng) -> EnvState:
    s = rng.uniform(spec.start_min, spec.start_max, size=spec.state_dim)
    return EnvState(s=np.asarray(s, dtype=np.float64))


def env_step(spec: EnvSpec, st: EnvState, action: np.ndarray, rng: Rng):
    """One dynamics step. Returns (next EnvState, reward, done, risk_entered).

    The risk Bernoulli consumes exactly one uniform draw every step whether or
    not the agent occupies a risk region, so paired-seed runs stay aligned.
    """
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (spec.action_dim,) or not np.all(np.isfinite(action)):
        raise EnvError(f"action must be a finite vector of dim {spec.action_dim}")
    a = np.clip(action, spec.action_low, spec.action_high)
    pos = np.clip(st.s + a * spec.dt, spec.arena_min, spec.arena_max)
    airport_used = st.airport_used
    if (spec.variant == "airport" and not airport_used
            and spec.airport_region.contains(pos)):
        pos = np.array(spec.landing_point, dtype=np.float64)
        airport_used = True
    risk_entered = in_risk_region(spec, pos)
    fired = rng.random() < spec.risk_prob
    reward = -spec.step_cost * float(np.linalg.norm(pos - spec.goal))
    if risk_entered and fired:
        reward += spec.risk_penalty
    goods_visited = st.goods_visited or (
        spec.variant == "goods" and spec.goods_region.contains(pos))
    steps = st.steps + 1
    at_goal = float(np.linalg.norm(pos - spec.goal)) <= spec.capture_radius
    goal_counts = at_goal and (spec.variant != "goods" or goods_visited)
    done = goal_counts or steps >= spec.max_steps
    nxt = EnvState(s=pos, steps=steps, goods_visited=goods_visited,
                   airport_used=airport_used, done=done)
    return nxt, reward, done, risk_entered


class Env:
    """Stateful wrapper over the pure reset/step ops, owning one rng stream."""

    def __init__(self, spec: EnvSpec, rng: Rng):
        spec.validate()
        self.spec = spec
        self.rng = rng
        self._st: EnvState | None = None

    def reset(self) -> np.ndarray:
        self._st = env_reset(self.spec, self.rng)
        return self._st.s.copy()

    def step(self, action: np.ndarray):
        if self._st is None:
            raise EnvError("step before reset")
        self._st, reward, done, risk = env_step(self.spec, self._st, action, self.rng)
        return self._st.s.copy(), reward, done, risk

    def context(self) -> EnvState:
        if self._st is None:
            raise EnvError("context before reset")
        return self._st


class Policy:
    """Base policy interface: act(observed state, episode context, rng)."""

    kind = "abstract"

    def act(self, s: np.ndarray, ctx: EnvState, rng: Rng) -> np.ndarray:
        raise NotImplementedError


def _capped_step_toward(target: np.ndarray, s: np.ndarray, spec: EnvSpec) -> np.ndarray:
    a = (np.asarray(target, dtype=np.float64) - s) / spec.dt
    n = float(np.linalg.norm(a))
    if n > 1.0:
        a = a / n
    return np.clip(a, spec.action_low, spec.action_high)


def _current_target(spec: EnvSpec, ctx: EnvState) -> np.ndarray:
    if spec.variant == "goods" and not ctx.goods_visited:
        return spec.goods_region.reference_point()
    return spec.goal


class ScriptedDirect(Policy):
    """Unit-capped step straight at the current target, through anything."""

    kind = "direct"

    def __init__(self, spec: EnvSpec):
        self.spec = spec

    def act(self, s: np.ndarray, ctx: EnvState, rng: Rng) -> np.ndarray:
        return _capped_step_toward(_current_target(self.spec, ctx), s, self.spec)


class RandomPolicy(Policy):
    kind = "random"

    def __init__(self, spec: EnvSpec):
        self.spec = spec

    def act(self, s: np.ndarray, ctx: EnvState, rng: Rng) -> np.ndarray:
        return rng.uniform(self.spec.action_low, self.spec.action_high,
                           size=self.spec.action_dim)


class _GridField:
    """Dijkstra distance-to-target field on a uniform grid over the arena.

    Cells whose centers fall inside inflated risk regions cost extra to enter
    (factor 8), which both forbids shortcuts through them in practice and
    still defines an escape gradient if the agent is pushed inside. A second,
    free-cells-only pass is kept for reachability validation.
    """

    BLOCK_FACTOR = 8.0

    def __init__(self, spec: EnvSpec, grid_n: int, inflation: float):
        self.spec = spec
        self.n = grid_n
        self.lo = spec.arena_min
        self.cell = (spec.arena_max - spec.arena_min) / grid_n
        ij = (np.arange(grid_n) + 0.5)
        cx = spec.arena_min[0] + ij * self.cell[0]
        cy = spec.arena_min[1] + ij * self.cell[1]
        self.centers = np.stack(np.meshgrid(cx, cy, indexing="ij"), axis=-1)
        pts = self.centers.reshape(-1, 2)
        blocked = np.zeros(len(pts), dtype=bool)
        for reg in spec.risk_regions:
            blocked |= reg.inflated(inflation).contains_many(pts)
        self.blocked = blocked.reshape(grid_n, grid_n)

    def cell_of(self, p: np.ndarray) -> tuple[int, int]:
        idx = np.floor((np.asarray(p) - self.lo) / self.cell).astype(int)
        idx = np.clip(idx, 0, self.n - 1)
        return int(idx[0]), int(idx[1])

    def _target_cells(self, point: np.ndarray, region: Region | None) -> list[tuple[int, int]]:
        cells = {self.cell_of(point)}
        pts = self.centers.reshape(-1, 2)
        if region is not None:
            hit = region.contains_many(pts)
        else:
            hit = np.linalg.norm(pts - point, axis=1) <= self.spec.capture_radius
        for flat in np.flatnonzero(hit):
            cells.add((int(flat // self.n), int(flat % self.n)))
        return sorted(cells)

    def solve(self, point: np.ndarray, region: Region | None, free_only: bool) -> np.ndarray:
        dist = np.full((self.n, self.n), np.inf)
        heap = []
        for c in self._target_cells(point, region):
            dist[c] = 0.0
            heapq.heappush(heap, (0.0, c))
        diag = float(np.hypot(self.cell[0], self.cell[1]))
        straight_x = float(self.cell[0])
        straight_y = float(self.cell[1])
        while heap:
            d, (i, j) = heapq.heappop(heap)
            if d > dist[i, j]:
                continue
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ni, nj = i + di, j + dj
                    if not (0 <= ni < self.n and 0 <= nj < self.n):
                        continue
                    if free_only and self.blocked[ni, nj]:
                        continue
                    step = diag if (di and dj) else (straight_x if di else straight_y)
                    if self.blocked[ni, nj]:
                        step *= self.BLOCK_FACTOR
                    nd = d + step
                    if nd < dist[ni, nj]:
                        dist[ni, nj] = nd
                        heapq.heappush(heap, (nd, (ni, nj)))
        return dist


class ScriptedRiskAvoiding(Policy):
    """Greedy descent on a grid-planned distance field around inflated risks.

    Used for dataset generation only. Optional Gaussian execution noise on the
    action spreads the data tube; guidance re-plans every step so the agent
    still converges on the target.
    """

    kind = "risk-avoiding"

    def __init__(self, spec: EnvSpec, grid_n: int = 40, inflation: float = 0.08,
                 exec_noise: float = 0.0):
        spec.validate()
        self.spec = spec
        self.exec_noise = exec_noise
        self._grid = _GridField(spec, grid_n, inflation)
        self._goal_field = self._grid.solve(spec.goal, None, free_only=False)
        self._goal_reach = self._grid.solve(spec.goal, None, free_only=True)
        self._goods_field = None
        if spec.variant == "goods":
            self._goods_field = self._grid.solve(
                spec.goods_region.reference_point(), spec.goods_region, free_only=False)
        mid = (spec.start_min + spec.start_max) / 2.0
        c = self._grid.cell_of(mid)
        if self._grid.blocked[c] or not np.isfinite(self._goal_reach[c]):
            raise PlanningError("no safe route from the start box to the goal")

    def _field_and_target(self, ctx: EnvState):
        if self._goods_field is not None and not ctx.goods_visited:
            return self._goods_field, self.spec.goods_region.reference_point()
        return self._goal_field, self.spec.goal

    def act(self, s: np.ndarray, ctx: EnvState, rng: Rng) -> np.ndarray:
        fieldv, target = self._field_and_target(ctx)
        g = self._grid
        i, j = g.cell_of(s)
        if fieldv[i, j] == 0.0:
            a = _capped_step_toward(target, s, self.spec)
        else:
            best, best_val = None, fieldv[i, j]
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ni, nj = i + di, j + dj
                    if (di == 0 and dj == 0) or not (0 <= ni < g.n and 0 <= nj < g.n):
                        continue
                    if fieldv[ni, nj] < best_val:
                        best, best_val = (ni, nj), fieldv[ni, nj]
            if best is None:
                a = _capped_step_toward(target, s, self.spec)
            else:
                waypoint = g.centers[best]
                d = waypoint - s
                n = float(np.linalg.norm(d))
                a = d / n if n > 0 else d
        if self.exec_noise > 0:
            a = a + self.exec_noise * rng.normal(size=self.spec.action_dim)
        return np.clip(a, self.spec.action_low, self.spec.action_high)


class BehaviorCloned(Policy):
    """Deterministic MLP regression policy in normalized coordinates."""

    kind = "bc"

    def __init__(self, params: MlpParams, norm: NormStats,
                 action_low: np.ndarray, action_high: np.ndarray):
        self.params = params
        self.norm = norm
        self.action_low = np.asarray(action_low, dtype=np.float64)
        self.action_high = np.asarray(action_high, dtype=np.float64)

    def act(self, s: np.ndarray, ctx: EnvState, rng: Rng) -> np.ndarray:
        out, _ = forward_batch(self.params, self.norm.normalize_state(s)[None, :])
        a = self.norm.denormalize_action(out[0])
        return np.clip(a, self.action_low, self.action_high)


BC_HIDDEN_DIMS = [128, 128, 128]
BC_LEAKY_SLOPE = 0.2


@dataclass
class BcTrainConfig:
    iterations: int = 10000
    batch_size: int = 256
    lr: float = 1e-3
    seed: int = 0

    def validate(self) -> None:
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")


def bc_loss(net: MlpParams, states: np.ndarray, actions: np.ndarray):
    """Mean squared error of predicted vs dataset actions, with gradients."""
    out, cache = forward_batch(net, states)
    resid = out - actions
    n = len(resid)
    loss = float(np.sum(resid * resid)) / n
    grads, _ = backward_batch(net, cache, 2.0 * resid / n)
    return loss, grads


def train_bc_policy(dataset: Dataset, config: BcTrainConfig,
                    action_low: np.ndarray, action_high: np.ndarray):
    """Behavior cloning by Adam regression from states to actions.

    Returns (policy, loss_history). Deterministic given config.seed.
    """
    config.validate()
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    norm = dataset.norm
    states_n = norm.normalize_state(dataset.states)
    actions_n = norm.normalize_action(dataset.actions)
    rng = Rng(config.seed)
    dims = [dataset.state_dim] + BC_HIDDEN_DIMS + [dataset.action_dim]
    net = mlp_init(dims, BC_LEAKY_SLOPE, rng)
    opt = AdamState.for_params(net)
    history = []
    for step in range(config.iterations):
        idx = rng.integers(len(dataset), size=config.batch_size)
        loss, grads = bc_loss(net, states_n[idx], actions_n[idx])
        adam_step(opt, net, grads, config.lr)
        history.append((step, loss))
    return BehaviorCloned(net, norm, action_low, action_high), history
