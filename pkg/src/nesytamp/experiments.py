"""Monte-Carlo sweeps over placement noise, CSV/SVG output and grounder calibration.

Every episode draws from its own seed sequence keyed by
``(master_seed, method, mode, sigma index, episode index)``, so results do
not depend on how many episodes run, in which order, or in how many worker
processes.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from ._validation import check_count, check_nonnegative, check_positive
from .belief import GrounderConfig, TargetAimGrounder, TargetClearGrounder
from .executor import Configs, EpisodeResult, ExecutorConfig, run_baseline_episode, run_episode
from .pddl import Domain, Problem
from .planner import PlannerConfig
from .simworld import Obstacle, WorldParams, WorldState, ctl_approach, ctl_mate, observe

__all__ = [
    "Mode",
    "Method",
    "ObstacleKind",
    "SceneParams",
    "ExperimentConfig",
    "SweepRow",
    "SweepResult",
    "CalibrationReport",
    "CSV_HEADER",
    "episode_seed",
    "generate_scene",
    "run_sweep",
    "format_csv",
    "emit_csv",
    "emit_plot",
    "labeled_observations",
    "calibrate",
]

CSV_HEADER = ("sigma", "episodes", "successes", "sr", "mean_steps", "mean_replans", "push_freq")


class Mode(str, enum.Enum):
    NO_OBSTACLES = "no_obstacles"
    WITH_OBSTACLES = "with_obstacles"


class Method(str, enum.Enum):
    NEUROSYMBOLIC = "neurosymbolic"
    BASELINE = "baseline"


_MODE_KEYS = {Mode.NO_OBSTACLES: 0, Mode.WITH_OBSTACLES: 1}
_METHOD_KEYS = {Method.NEUROSYMBOLIC: 0, Method.BASELINE: 1}


@dataclass(frozen=True)
class ObstacleKind:
    name: str
    radius: float
    movable: bool = True


DEFAULT_OBSTACLES = (
    ObstacleKind("bolt", 5.0),
    ObstacleKind("nut", 4.0),
    ObstacleKind("wood_block", 20.0),
)


@dataclass(frozen=True)
class SceneParams:
    workspace_size: float = 200.0
    obstacle_sigma_scale: float = 7.0
    obstacle_kinds: tuple[ObstacleKind, ...] = DEFAULT_OBSTACLES

    def __post_init__(self):
        check_positive(self.workspace_size, "workspace_size")
        check_nonnegative(self.obstacle_sigma_scale, "obstacle_sigma_scale")
        if not self.obstacle_kinds:
            raise ValueError("at least one obstacle kind is required")


@dataclass(frozen=True)
class ExperimentConfig:
    sigma_list: tuple[float, ...] = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0)
    episodes_per_sigma: int = 200
    mode: Mode = Mode.NO_OBSTACLES
    method: Method = Method.NEUROSYMBOLIC
    master_seed: int = 0
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    executor: ExecutorConfig = field(default_factory=ExecutorConfig)
    grounder: GrounderConfig = field(default_factory=GrounderConfig)
    world: WorldParams = field(default_factory=WorldParams)
    scene: SceneParams = field(default_factory=SceneParams)

    def __post_init__(self):
        object.__setattr__(self, "sigma_list", tuple(float(s) for s in self.sigma_list))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "method", Method(self.method))
        if not self.sigma_list:
            raise ValueError("sigma_list must not be empty")
        for s in self.sigma_list:
            check_positive(s, "sigma")
        check_count(self.episodes_per_sigma, "episodes_per_sigma", minimum=1)
        check_count(self.master_seed, "master_seed")

    @property
    def configs(self) -> Configs:
        return Configs(self.planner, self.executor, self.grounder)


def episode_seed(master_seed: int, method: Method, mode: Mode, sigma_index: int,
                 episode_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        master_seed,
        spawn_key=(_METHOD_KEYS[Method(method)], _MODE_KEYS[Mode(mode)], sigma_index, episode_index),
    )


def generate_scene(sigma: float, mode: Mode | str, rng: np.random.Generator,
                   params: WorldParams | None = None, scene: SceneParams | None = None) -> WorldState:
    """Random bolt, a noisy pose estimate and, in obstacle mode, one nearby obstacle."""
    check_positive(sigma, "sigma")
    mode = Mode(mode)
    scene = scene or SceneParams()
    bx, by = rng.uniform(0.0, scene.workspace_size, size=2)
    ex, ey = rng.normal(0.0, sigma, size=2)
    obstacles = ()
    if mode is Mode.WITH_OBSTACLES:
        kind = scene.obstacle_kinds[int(rng.integers(len(scene.obstacle_kinds)))]
        ox, oy = rng.normal(0.0, sigma * scene.obstacle_sigma_scale, size=2)
        obstacles = (Obstacle(float(bx + ox), float(by + oy), kind.radius, kind.movable, kind.name),)
    return WorldState.create((bx, by, 0.0), (bx + ex, by + ey, 0.0), obstacles, params)


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepRow:
    sigma: float
    episodes: int
    successes: int
    mean_steps: float
    mean_replans: float
    push_frequency: float

    @property
    def sr(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0

    @property
    def ci_halfwidth(self) -> float:
        """Normal-approximation 95% half-width of the success rate."""
        if not self.episodes:
            return 0.0
        return 1.96 * math.sqrt(self.sr * (1.0 - self.sr) / self.episodes)


@dataclass(frozen=True)
class SweepResult:
    method: Method
    mode: Mode
    rows: tuple[SweepRow, ...]

    @property
    def sigmas(self) -> list[float]:
        return [r.sigma for r in self.rows]

    @property
    def success_rates(self) -> list[float]:
        return [r.sr for r in self.rows]


def _one_episode(args) -> tuple[bool, int, int, bool]:
    cfg, domain, problem, sigma_index, episode_index = args
    seq = episode_seed(cfg.master_seed, cfg.method, cfg.mode, sigma_index, episode_index)
    scene_seq, run_seq = seq.spawn(2)
    world = generate_scene(cfg.sigma_list[sigma_index], cfg.mode,
                           np.random.default_rng(scene_seq), cfg.world, cfg.scene)
    run_rng = np.random.default_rng(run_seq)
    if cfg.method is Method.BASELINE:
        res: EpisodeResult = run_baseline_episode(world, run_rng)
    else:
        res = run_episode(domain, problem, world, cfg.configs, run_rng)
    return res.success, res.steps_executed, res.replans, "Push" in res.actions


def _aggregate(sigma: float, outcomes: Sequence[tuple[bool, int, int, bool]]) -> SweepRow:
    n = len(outcomes)
    return SweepRow(
        sigma=sigma,
        episodes=n,
        successes=sum(o[0] for o in outcomes),
        mean_steps=sum(o[1] for o in outcomes) / n,
        mean_replans=sum(o[2] for o in outcomes) / n,
        push_frequency=sum(o[3] for o in outcomes) / n,
    )


def run_sweep(cfg: ExperimentConfig, domain: Domain | None = None, problem: Problem | None = None,
              jobs: int = 1) -> SweepResult:
    """Run ``episodes_per_sigma`` episodes for every sigma and aggregate them."""
    if domain is None or problem is None:
        from .assets import load_bolt_domain, load_bolt_problem

        domain = domain or load_bolt_domain()
        problem = problem or load_bolt_problem(domain)
    tasks = [
        (cfg, domain, problem, si, ei)
        for si in range(len(cfg.sigma_list))
        for ei in range(cfg.episodes_per_sigma)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_one_episode, tasks, chunksize=64))
    else:
        outcomes = [_one_episode(t) for t in tasks]
    n = cfg.episodes_per_sigma
    rows = tuple(
        _aggregate(sigma, outcomes[i * n:(i + 1) * n]) for i, sigma in enumerate(cfg.sigma_list)
    )
    return SweepResult(cfg.method, cfg.mode, rows)


def _g6(x: float) -> str:
    return f"{x:.6g}"


def format_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in result.rows:
        writer.writerow([_g6(r.sigma), r.episodes, r.successes, _g6(r.sr),
                         _g6(r.mean_steps), _g6(r.mean_replans), _g6(r.push_frequency)])
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(format_csv(result))
    return path


# --------------------------------------------------------------------------
# plots

_W, _H = 480, 320
_LEFT, _RIGHT, _TOP, _BOTTOM = 60, 20, 20, 50
_COLOURS = ("#1f77b4", "#d62728")


def emit_plot(neurosymbolic: SweepResult, baseline: SweepResult, path, metric: str = "sr") -> Path:
    """Two polylines of ``metric`` ("sr" or "steps") against sigma, as standalone SVG."""
    if neurosymbolic.sigmas != baseline.sigmas:
        raise ValueError("both sweeps must share the same sigma list")
    if metric == "sr":
        values = [neurosymbolic.success_rates, baseline.success_rates]
        y_max, y_label = 1.0, "success rate"
    elif metric == "steps":
        values = [[r.mean_steps for r in s.rows] for s in (neurosymbolic, baseline)]
        y_max, y_label = max(1.0, math.ceil(max(max(v) for v in values))), "mean steps"
    else:
        raise ValueError(f"unknown metric {metric!r}")
    x_max = max(neurosymbolic.sigmas) if neurosymbolic.rows else 1.0
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(x: float) -> float:
        return _LEFT + pw * x / x_max

    def sy(y: float) -> float:
        return _TOP + ph * (1.0 - y / y_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" data-x-max="{x_max:g}" data-y-max="{y_max:g}">',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        parts.append(f'<text x="{sx(frac * x_max):.2f}" y="{_H - _BOTTOM + 16}" font-size="11" '
                     f'text-anchor="middle">{frac * x_max:g}</text>')
        parts.append(f'<text x="{_LEFT - 6}" y="{sy(frac * y_max) + 4:.2f}" font-size="11" '
                     f'text-anchor="end">{frac * y_max:g}</text>')
    parts.append(f'<text x="{_LEFT + pw / 2}" y="{_H - 8}" font-size="12" '
                 f'text-anchor="middle">sigma (mm)</text>')
    parts.append(f'<text x="14" y="{_TOP + ph / 2}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 14 {_TOP + ph / 2})">{escape(y_label)}</text>')
    labels = (Method.NEUROSYMBOLIC.value, Method.BASELINE.value)
    for i, (series, label) in enumerate(zip(values, labels)):
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(neurosymbolic.sigmas, series))
        parts.append(f'<polyline class="series" data-label="{label}" points="{points}" fill="none" '
                     f'stroke="{_COLOURS[i]}" stroke-width="2"/>')
        ly = _TOP + 14 + 16 * i
        parts.append(f'<line x1="{_LEFT + pw - 120}" y1="{ly}" x2="{_LEFT + pw - 100}" y2="{ly}" '
                     f'stroke="{_COLOURS[i]}" stroke-width="2"/>')
        parts.append(f'<text x="{_LEFT + pw - 95}" y="{ly + 4}" font-size="11">{label}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path


# --------------------------------------------------------------------------
# grounder calibration

@dataclass(frozen=True)
class CalibrationReport:
    samples: int
    aim_accuracy: float
    clear_accuracy: float
    aim_target: tuple[float, float] = (0.96, 1.0)
    clear_target: tuple[float, float] = (0.94, 0.98)

    @property
    def aim_ok(self) -> bool:
        return self.aim_target[0] <= self.aim_accuracy <= self.aim_target[1]

    @property
    def clear_ok(self) -> bool:
        return self.clear_target[0] <= self.clear_accuracy <= self.clear_target[1]


def labeled_observations(n: int, cfg: ExperimentConfig, rng: np.random.Generator):
    """Noisy (e, d) observations with true labels from obstacle-mode scenes.

    The nutrunner is placed where the executor actually looks: at its home
    pose, after Approach, or after Mate, with equal probability. Labels use
    the grounders' own boundaries: aligned when ``e <= e0``, clear when
    ``d >= d0``.
    """
    e_obs, d_obs, aim_true, clear_true = (np.empty(n) for _ in range(4))
    for i in range(n):
        sigma = cfg.sigma_list[int(rng.integers(len(cfg.sigma_list)))]
        world = generate_scene(sigma, Mode.WITH_OBSTACLES, rng, cfg.world, cfg.scene)
        phase = int(rng.integers(3))
        if phase >= 1:
            world = ctl_approach(world).new_world
        if phase == 2:
            outcome = ctl_mate(world, rng)
            world = outcome.new_world
        e_obs[i], d_obs[i] = observe(world, rng)
        aim_true[i] = world.alignment_error <= cfg.grounder.aim_threshold_e0
        clear_true[i] = world.clearance >= cfg.grounder.clear_threshold_d0
    return e_obs, d_obs, aim_true.astype(bool), clear_true.astype(bool)


def calibrate(cfg: ExperimentConfig | None = None, samples: int = 10_000, seed: int | None = None) -> CalibrationReport:
    cfg = cfg or ExperimentConfig()
    rng = np.random.default_rng(cfg.grounder.rng_seed if seed is None else seed)
    e, d, aim_y, clear_y = labeled_observations(samples, cfg, rng)
    aim = TargetAimGrounder.from_config(cfg.grounder, random_state=rng).fit(e[:, None])
    clear = TargetClearGrounder.from_config(cfg.grounder, random_state=rng).fit(d[:, None])
    return CalibrationReport(
        samples=samples,
        aim_accuracy=float(aim.score(e[:, None], aim_y)),
        clear_accuracy=float(clear.score(d[:, None], clear_y)),
    )
