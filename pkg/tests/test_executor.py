import math
from dataclasses import replace

import numpy as np
import pytest

from nesytamp.belief import TARGET_AIM, TARGET_CLEAR, BeliefState, GrounderConfig, refresh
from nesytamp.executor import (
    Configs,
    EpisodeResult,
    ExecutorConfig,
    FailureReason,
    run_baseline_episode,
    run_episode,
)
from nesytamp.planner import PlannerConfig
from nesytamp.simworld import Obstacle, WorldState, ctl_approach, ctl_mate, ctl_push
from scenarios import BOLT, run_scenario


def test_nominal_episode(domain, problem):
    res = run_scenario("nominal", 0, domain, problem)
    assert res.success
    assert res.actions == ("Approach", "Insert", "Disassemble")
    assert res.replans == 0 and res.failure_reason is None
    assert res.final_world.disassembled


def test_misaligned_adds_mate(domain, problem):
    runs = [run_scenario("misaligned", s, domain, problem) for s in range(200)]
    with_mate = sum(r.actions.count("Mate") == 1 for r in runs)
    assert with_mate / len(runs) >= 0.95
    assert all(r.success for r in runs)
    assert sum(r.actions == ("Approach", "Mate", "Insert", "Disassemble") for r in runs) >= 180


def test_blocked_adds_mate_and_push(domain, problem):
    runs = [run_scenario("blocked", s, domain, problem) for s in range(200)]
    both = sum("Mate" in r.actions and "Push" in r.actions for r in runs)
    assert both / len(runs) >= 0.9
    assert sum(r.success for r in runs) / len(runs) >= 0.95


def test_replay_is_deterministic(domain, problem):
    a = run_scenario("blocked", 5, domain, problem)
    b = run_scenario("blocked", 5, domain, problem)
    assert a == b
    assert a.trace.lines() == b.trace.lines()


def test_every_executed_step_met_threshold(domain, problem):
    cfg = PlannerConfig()
    for s in range(100):
        res = run_scenario("blocked", s, domain, problem)
        for rec in res.trace.records:
            assert rec.sat is not None and rec.sat >= cfg.prune_threshold


def test_replans_within_budget(domain, problem):
    # an immovable obstacle on the axis can never be cleared
    for budget in (0, 1, 4):
        cfgs = Configs(executor=ExecutorConfig(replan_budget=budget))
        world = WorldState.create(BOLT, obstacles=[Obstacle(BOLT[0], BOLT[1], 5, movable=False)])
        res = run_episode(domain, problem, world, cfgs, seed=1)
        assert not res.success
        assert res.replans <= budget
        assert res.failure_reason in (FailureReason.REPLAN_BUDGET_EXHAUSTED,
                                      FailureReason.CONTROLLER_FAULT_UNRECOVERABLE)


def test_unsolvable_problem_reports_no_plan(domain, problem):
    from nesytamp.pddl import Problem

    stuck = Problem(init=(), goal=problem.goal)
    res = run_episode(domain, stuck, WorldState.create(BOLT), seed=0)
    assert not res.success and res.failure_reason is FailureReason.NO_PLAN
    assert res.actions == ()


def test_goal_already_met(domain, problem):
    from nesytamp.pddl import Problem

    done = Problem(init=problem.goal, goal=problem.goal)
    res = run_episode(domain, done, WorldState.create(BOLT), seed=0)
    assert res.success and res.actions == ()


def test_result_record_format(domain, problem):
    res = run_scenario("nominal", 0, domain, problem)
    assert res.to_record() == ("success=true steps=3 replans=0 "
                               "actions=Approach,Insert,Disassemble failure_reason=-")
    with pytest.raises(ValueError):
        EpisodeResult(True, 0, (), FailureReason.NO_PLAN)


def test_executor_config_validation():
    with pytest.raises(ValueError):
        ExecutorConfig(replan_budget=-1)
    with pytest.raises(ValueError):
        ExecutorConfig(verify_threshold=1.5)


def test_baseline_nominal():
    res = run_baseline_episode(WorldState.create(BOLT), seed=0)
    assert res.success and res.actions == ("Approach", "Insert", "Disassemble")


def test_baseline_misaligned_faults():
    world = WorldState.create(BOLT, (BOLT[0] + 4.5, BOLT[1], 0.0))
    res = run_baseline_episode(world, seed=0)
    assert not res.success
    assert res.actions == ("Approach", "Insert")
    assert res.trace.records[-1].outcome == "torque_exceeded"


def test_baseline_matches_compliance_rule():
    # success iff the pose error is inside the compliance radius
    rng = np.random.default_rng(0)
    for _ in range(300):
        dx, dy = rng.normal(0, 4, size=2)
        world = WorldState.create(BOLT, (BOLT[0] + dx, BOLT[1] + dy, 0.0))
        assert run_baseline_episode(world, seed=0).success == (math.hypot(dx, dy) <= 4.0)


def _false_positive_rate(world, controller, atom, n=4000):
    rng = np.random.default_rng(3)
    cfg = GrounderConfig()
    hits = 0
    for _ in range(n):
        out = controller(world, rng)
        if out.succeeded:
            continue
        belief = refresh(BeliefState(), out.new_world, cfg, rng)
        hits += belief.prob(atom) > 0.5
    return hits / n


def _always_blocked_mate(world, rng):
    return ctl_mate(replace(world, params=replace(world.params, mate_block_rate=1.0)), rng)


def test_verification_soundness_after_mate_fault():
    world = ctl_approach(WorldState.create(BOLT, (BOLT[0] + 5, BOLT[1], 0.0),
                                           [Obstacle(BOLT[0] + 1, BOLT[1], 4)])).new_world
    rate = _false_positive_rate(world, _always_blocked_mate, TARGET_AIM)
    assert rate <= 0.02 + 3 * math.sqrt(0.02 * 0.98 / 4000)


def test_verification_soundness_after_push_fault():
    world = ctl_approach(WorldState.create(
        BOLT, obstacles=[Obstacle(BOLT[0] + 7, BOLT[1], 4, movable=False)])).new_world
    rate = _false_positive_rate(world, ctl_push, TARGET_CLEAR)
    assert rate <= 0.04 + 3 * math.sqrt(0.04 * 0.96 / 4000)


def test_no_shared_state_between_episodes(domain, problem):
    first = run_scenario("misaligned", 3, domain, problem)
    for s in range(5):
        run_scenario("blocked", s, domain, problem)
    assert run_scenario("misaligned", 3, domain, problem) == first
