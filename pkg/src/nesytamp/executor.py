"""Closed-loop execution: plan, act, re-ground, check, replan.

After every primitive the perception atoms are refreshed from the world and
the primitive's effects are checked against the refreshed belief. A failed
check or a controller fault triggers a fresh plan from the current belief.

When a primitive ran cleanly but a perception effect did not materialise,
that effect is *pinned*: later searches in the same episode do not expect
the primitive to deliver it again. This is what makes the planner reach for
Mate after Approach left the socket misaligned instead of repeating
Approach, which would fly back to the same coarse pose. If the pins leave no
plan at all they are dropped and the search is repeated once without them.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field


from ._validation import check_count, check_probability
from .belief import BeliefState, GrounderConfig, as_generator, assert_literal, refresh
from .pddl import Atom, Domain, Problem
from .planner import GroundAction, NoPlanFound, PlannerConfig, ground_actions, plan, satisfaction
from .simworld import CONTROLLERS, EpisodeTrace, WorldState

__all__ = [
    "ExecutorConfig",
    "EpisodeResult",
    "FailureReason",
    "Configs",
    "BASELINE_SEQUENCE",
    "run_episode",
    "run_baseline_episode",
]

BASELINE_SEQUENCE = ("Approach", "Insert", "Disassemble")


class FailureReason(str, enum.Enum):
    NO_PLAN = "no_plan"
    REPLAN_BUDGET_EXHAUSTED = "replan_budget_exhausted"
    CONTROLLER_FAULT_UNRECOVERABLE = "controller_fault_unrecoverable"


@dataclass(frozen=True)
class ExecutorConfig:
    replan_budget: int = 10
    verify_threshold: float = 0.5

    def __post_init__(self):
        check_count(self.replan_budget, "replan_budget")
        check_probability(self.verify_threshold, "verify_threshold")


@dataclass(frozen=True)
class Configs:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    executor: ExecutorConfig = field(default_factory=ExecutorConfig)
    grounder: GrounderConfig = field(default_factory=GrounderConfig)


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    replans: int
    actions: tuple[str, ...]
    failure_reason: FailureReason | None = None
    final_world: WorldState | None = field(default=None, compare=False, repr=False)
    trace: EpisodeTrace | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.success and self.failure_reason is not None:
            raise ValueError("a successful episode has no failure reason")

    @property
    def steps_executed(self) -> int:
        return len(self.actions)

    def to_record(self) -> str:
        reason = self.failure_reason.value if self.failure_reason else "-"
        return (f"success={str(self.success).lower()} steps={self.steps_executed} "
                f"replans={self.replans} actions={','.join(self.actions) or '-'} "
                f"failure_reason={reason}")


def _controller(action: GroundAction):
    try:
        return CONTROLLERS[action.name.lower()]
    except KeyError:
        raise KeyError(f"no controller registered for action {action.name!r}") from None


def _failed_effects(belief: BeliefState, action: GroundAction, threshold: float) -> list[Atom]:
    bad = []
    for lit in action.eff:
        p = belief.prob(lit.atom)
        if (lit.negated and p > 1.0 - threshold) or (not lit.negated and p < threshold):
            bad.append(lit.atom)
    return bad


def run_episode(domain: Domain, problem: Problem, world: WorldState,
                cfgs: Configs | None = None, seed=None) -> EpisodeResult:
    """Drive ``world`` to the problem goal, replanning on any surprise."""
    cfgs = cfgs or Configs()
    pcfg, xcfg, gcfg = cfgs.planner, cfgs.executor, cfgs.grounder
    rng = as_generator(seed)
    goal = problem.goal
    actions = ground_actions(domain)
    trace = EpisodeTrace(world.params)

    belief = refresh(BeliefState.from_literals(problem.init), world, gcfg, rng)
    pins: dict[str, set[Atom]] = {}
    queue: deque[GroundAction] = deque()
    executed: list[str] = []
    replans = 0

    def finish(success: bool, reason: FailureReason | None = None) -> EpisodeResult:
        return EpisodeResult(success, replans, tuple(executed), reason, world, trace)

    while True:
        if satisfaction(belief, goal) >= pcfg.goal_threshold:
            return finish(True)

        if not queue:
            try:
                found = plan(domain, belief, goal, pcfg, pinned=pins, actions=actions)
            except NoPlanFound:
                if not pins:
                    return finish(False, FailureReason.NO_PLAN)
                pins.clear()
                try:
                    found = plan(domain, belief, goal, pcfg, actions=actions)
                except NoPlanFound:
                    return finish(False, FailureReason.NO_PLAN)
            queue.extend(found.steps)

        action = queue.popleft()
        sat = satisfaction(belief, action.pre)
        if sat < pcfg.prune_threshold:
            # the belief drifted away from what the current plan assumed
            ok, fault = False, False
        else:
            outcome = _controller(action)(world, rng)
            trace.record(str(action), world, outcome, sat)
            executed.append(str(action))
            world = outcome.new_world
            if outcome.succeeded:
                for lit in action.eff:
                    if not domain.is_neural(lit.atom):
                        belief = assert_literal(belief, lit)
            belief = refresh(belief, world, gcfg, rng)
            ok, fault = outcome.succeeded, not outcome.succeeded
            if ok:
                missed = _failed_effects(belief, action, xcfg.verify_threshold)
                if missed:
                    ok = False
                    pins.setdefault(action.name, set()).update(
                        a for a in missed if domain.is_neural(a))

        if ok:
            continue
        queue.clear()
        if replans == xcfg.replan_budget:
            reason = (FailureReason.CONTROLLER_FAULT_UNRECOVERABLE if fault
                      else FailureReason.REPLAN_BUDGET_EXHAUSTED)
            return finish(False, reason)
        replans += 1


def run_baseline_episode(world: WorldState, seed=None,
                         sequence: tuple[str, ...] = BASELINE_SEQUENCE) -> EpisodeResult:
    """Open-loop reference: run a fixed primitive sequence and stop at the first fault."""
    rng = as_generator(seed)
    trace = EpisodeTrace(world.params)
    executed: list[str] = []
    for name in sequence:
        outcome = CONTROLLERS[name.lower()](world, rng)
        trace.record(name, world, outcome)
        executed.append(name)
        world = outcome.new_world
        if not outcome.succeeded:
            return EpisodeResult(False, 0, tuple(executed),
                                 FailureReason.CONTROLLER_FAULT_UNRECOVERABLE, world, trace)
    return EpisodeResult(world.disassembled, 0, tuple(executed),
                         None if world.disassembled else FailureReason.NO_PLAN, world, trace)
