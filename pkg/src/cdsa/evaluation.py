"""Batch rollouts, value-at-risk statistics, and report emission.

Baseline and corrected controllers are compared under paired seeds: episode i
of either arm draws from the rng substream (base_seed, i), so both arms see
identical start states and risk events and every difference is attributable
to the correction. VaR uses the linear-interpolation percentile (index
(n-1)*p/100 into the ascending sort), which is nondecreasing in p by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controller import CdsaModels, ControlConfig, Trajectory, control_episode
from .envs import EnvSpec, Policy
from .neuralcore import Rng
from . import svgplot


class EvalError(ValueError):
    """Invalid evaluation input."""


@dataclass
class EpisodeStats:
    undiscounted_return: float
    discounted_return: float
    steps: int
    risk_entries: int
    reached_goal: bool
    seed: int

    def validate(self, max_steps: int) -> None:
        if self.steps > max_steps:
            raise EvalError(f"steps {self.steps} exceed budget {max_steps}")
        if self.risk_entries > self.steps:
            raise EvalError("risk_entries cannot exceed steps")


def stats_from_trajectory(traj: Trajectory, seed: int, gamma: float) -> EpisodeStats:
    rewards = traj.rewards
    disc = float(np.sum(rewards * gamma ** np.arange(len(rewards))))
    return EpisodeStats(
        undiscounted_return=float(np.sum(rewards)),
        discounted_return=disc,
        steps=len(traj),
        risk_entries=int(np.sum(traj.risk_flags)),
        reached_goal=traj.reached_goal,
        seed=seed,
    )


def rollout_batch(env_spec: EnvSpec, base_policy: Policy,
                  models: CdsaModels | None, cfg: ControlConfig,
                  episodes: int, base_seed: int, gamma: float = 1.0,
                  trajectories_out: list | None = None,
                  max_trajectories: int = 0) -> list[EpisodeStats]:
    """Run `episodes` paired-seed episodes; episode i uses substream (base_seed, i).

    models = None rolls the base policy uncorrected. The first
    max_trajectories trajectories are appended to trajectories_out when given.
    """
    if episodes < 1:
        raise EvalError(f"episodes must be >= 1, got {episodes}")
    root = Rng(base_seed)
    out = []
    for i in range(episodes):
        traj = control_episode(env_spec, base_policy, models, cfg, root.substream(i))
        st = stats_from_trajectory(traj, i, gamma)
        st.validate(env_spec.max_steps)
        out.append(st)
        if trajectories_out is not None and i < max_trajectories:
            trajectories_out.append(traj)
    return out


def var_at(returns, percentile: float) -> float:
    """Linear-interpolation percentile of the ascending sort of returns."""
    arr = np.asarray(list(returns), dtype=np.float64)
    if len(arr) == 0:
        raise EvalError("var_at needs a nonempty list of returns")
    if not 0.0 <= percentile <= 100.0:
        raise EvalError(f"percentile must be in [0, 100], got {percentile}")
    return float(np.percentile(arr, percentile, method="linear"))


def risk_entry_rate(stats: list[EpisodeStats]) -> float:
    """Mean over episodes of (risk-occupied steps / total steps)."""
    fracs = [s.risk_entries / s.steps if s.steps > 0 else 0.0 for s in stats]
    return float(np.mean(fracs)) if fracs else 0.0


@dataclass
class Report:
    percentile_grid: list
    episodes: dict
    mean_return: dict
    std_return: dict
    risk_rate: dict
    goal_rate: dict
    var_curve: dict
    deltas: dict
    config_echo: dict
    warnings: list
    spec: EnvSpec | None = None
    trajectories: dict = field(default_factory=dict)


def summarize(stats_baseline: list[EpisodeStats], stats_corrected: list[EpisodeStats],
              percentile_grid, config_echo: dict | None = None,
              spec: EnvSpec | None = None, trajectories: dict | None = None) -> Report:
    """Aggregate the two arms into a Report; deterministic fold."""
    if not stats_baseline or not stats_corrected:
        raise EvalError("summarize needs nonempty stats for both arms")
    grid = [float(p) for p in percentile_grid]
    warnings = []
    if len(stats_baseline) != len(stats_corrected):
        warnings.append(
            f"episode counts differ: baseline {len(stats_baseline)}, "
            f"corrected {len(stats_corrected)}")
    arms = {"baseline": stats_baseline, "corrected": stats_corrected}
    returns = {k: [s.undiscounted_return for s in v] for k, v in arms.items()}
    report = Report(
        percentile_grid=grid,
        episodes={k: len(v) for k, v in arms.items()},
        mean_return={k: float(np.mean(r)) for k, r in returns.items()},
        std_return={k: float(np.std(r)) for k, r in returns.items()},
        risk_rate={k: risk_entry_rate(v) for k, v in arms.items()},
        goal_rate={k: float(np.mean([s.reached_goal for s in v])) for k, v in arms.items()},
        var_curve={k: [var_at(r, p) for p in grid] for k, r in returns.items()},
        deltas={},
        config_echo=dict(config_echo or {}),
        warnings=warnings,
        spec=spec,
        trajectories=dict(trajectories or {}),
    )
    report.deltas["mean_return"] = (report.mean_return["corrected"]
                                    - report.mean_return["baseline"])
    report.deltas["risk_rate"] = (report.risk_rate["corrected"]
                                  - report.risk_rate["baseline"])
    for i, p in enumerate(grid):
        report.deltas[f"var@{p:g}"] = (report.var_curve["corrected"][i]
                                       - report.var_curve["baseline"][i])
    return report


def _csv_rows(report: Report):
    rows = []
    for key, val in sorted(report.config_echo.items()):
        rows.append(("config", str(key), "", str(val)))
    for arm in ("baseline", "corrected"):
        rows.append(("episodes", arm, "", f"{report.episodes[arm]}"))
        rows.append(("mean_return", arm, "", f"{report.mean_return[arm]:.17g}"))
        rows.append(("std_return", arm, "", f"{report.std_return[arm]:.17g}"))
        rows.append(("risk_rate", arm, "", f"{report.risk_rate[arm]:.17g}"))
        rows.append(("goal_rate", arm, "", f"{report.goal_rate[arm]:.17g}"))
        for p, v in zip(report.percentile_grid, report.var_curve[arm]):
            rows.append(("var", arm, f"{p:g}", f"{v:.17g}"))
    for key in ("mean_return", "risk_rate"):
        rows.append((key, "delta", "", f"{report.deltas[key]:.17g}"))
    for p in report.percentile_grid:
        rows.append(("var", "delta", f"{p:g}", f"{report.deltas[f'var@{p:g}']:.17g}"))
    for w in report.warnings:
        rows.append(("warning", "", "", w.replace(",", ";")))
    return rows


def emit_report(report: Report, csv_path: str, svg_path: str | None = None) -> None:
    """Write the report CSV and, when the report carries a spec, the scene SVG."""
    try:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("metric,arm,percentile,value\n")
            for row in _csv_rows(report):
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise EvalError(f"cannot write report CSV {csv_path}: {exc}") from exc
    if svg_path is not None:
        if report.spec is None:
            raise EvalError("report has no env spec; cannot draw the scene SVG")
        try:
            svgplot.write_svg(
                svgplot.render_scene(report.spec, report.trajectories), svg_path)
        except OSError as exc:
            raise EvalError(f"cannot write report SVG {svg_path}: {exc}") from exc


def load_report_csv(path: str) -> dict:
    """Parse an emitted report CSV into {(metric, arm, percentile): value}.

    Numeric values come back as floats (17 significant digits round-trip
    float64 exactly); config and warning rows stay strings.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "metric,arm,percentile,value":
            raise EvalError(f"unexpected report CSV header: {header!r}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            metric, arm, pct, value = line.split(",", 3)
            key = (metric, arm, pct)
            if metric in ("config", "warning"):
                out[key] = value
            elif metric == "episodes":
                out[key] = int(value)
            else:
                out[key] = float(value)
    return out
