"""Neurosymbolic task and motion planning for robotic bolt removal."""
from .belief import (
    BeliefState,
    GrounderConfig,
    TargetAimGrounder,
    TargetClearGrounder,
    assert_literal,
    refresh,
)
from .executor import Configs, EpisodeResult, ExecutorConfig, run_baseline_episode, run_episode
from .pddl import Atom, Domain, Literal, Problem, format_domain, parse_domain, parse_problem
from .planner import NoPlanFound, Plan, PlannerConfig, ground_actions, plan, satisfaction
from .simworld import Obstacle, WorldParams, WorldState

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "BeliefState",
    "Configs",
    "Domain",
    "EpisodeResult",
    "ExecutorConfig",
    "GrounderConfig",
    "Literal",
    "NoPlanFound",
    "Obstacle",
    "Plan",
    "PlannerConfig",
    "Problem",
    "TargetAimGrounder",
    "TargetClearGrounder",
    "WorldParams",
    "WorldState",
    "assert_literal",
    "format_domain",
    "ground_actions",
    "parse_domain",
    "parse_problem",
    "plan",
    "refresh",
    "run_baseline_episode",
    "run_episode",
    "satisfaction",
]
