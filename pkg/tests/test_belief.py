import math
from dataclasses import replace

import numpy as np
import pytest

from nesytamp.belief import (
    TARGET_AIM,
    TARGET_CLEAR,
    BeliefState,
    GrounderConfig,
    TargetAimGrounder,
    TargetClearGrounder,
    assert_literal,
    ground_target_aim,
    ground_target_clear,
    refresh,
)
from nesytamp.pddl import Atom, Literal
from nesytamp.simworld import Obstacle, WorldParams, WorldState
from oracles import logistic

NO_SWAP = GrounderConfig(aim_error_rate=0.0, clear_error_rate=0.0)


def rng(seed=0):
    return np.random.default_rng(seed)


def test_belief_closed_world():
    b = BeliefState({Atom("p"): 0.7, Atom("q"): 0.0})
    assert b.prob(Atom("p")) == 0.7
    assert b[Atom("q")] == 0.0
    assert b.prob(Atom("never_mentioned")) == 0.0
    assert len(b) == 1


def test_belief_rejects_bad_probability():
    with pytest.raises(ValueError):
        BeliefState({Atom("p"): 1.5})
    with pytest.raises(ValueError):
        BeliefState({Atom("p"): -0.1})


def test_belief_equality_and_hash():
    a = BeliefState({Atom("p"): 0.3, Atom("q"): 1.0})
    b = BeliefState([(Atom("q"), 1.0), (Atom("p"), 0.3), (Atom("r"), 0.0)])
    assert a == b and hash(a) == hash(b)
    assert a != BeliefState({Atom("p"): 0.3})


def test_distribution_sums_to_one():
    b = BeliefState({Atom("p"): 0.123})
    assert sum(b.distribution(Atom("p"))) == pytest.approx(1.0, abs=1e-12)


def test_updated_is_persistent():
    a = BeliefState({Atom("p"): 0.3})
    b = a.updated({Atom("p"): 1.0})
    assert a.prob(Atom("p")) == 0.3 and b.prob(Atom("p")) == 1.0


def test_assert_literal_and_signature():
    b = BeliefState.from_literals([Literal(Atom("p"))])
    b = assert_literal(b, Literal(Atom("q"), negated=True))
    b = b.updated({Atom("r"): 0.5, Atom("s"): 0.49})
    assert b.signature() == frozenset({Atom("p"), Atom("r")})


def test_aim_at_zero_error():
    # 1 / (1 + e^-4)
    out = ground_target_aim(0.0, NO_SWAP, rng())
    assert out.p_true == pytest.approx(logistic(4.0), abs=1e-12)
    assert out.p_true == pytest.approx(0.982, abs=5e-4)


def test_midpoints_are_one_half():
    assert ground_target_aim(2.0, NO_SWAP, rng()).p_true == pytest.approx(0.5)
    assert ground_target_clear(12.0, NO_SWAP, rng()).p_true == pytest.approx(0.5)


def test_clear_without_obstacles():
    out = ground_target_clear(math.inf, GrounderConfig(), rng())
    assert out.p_true == pytest.approx(0.96)


@pytest.mark.parametrize("fn", [ground_target_aim, ground_target_clear])
def test_negative_observation_rejected(fn):
    with pytest.raises(ValueError):
        fn(-0.1, GrounderConfig(), rng())


def test_monotone_without_swap():
    es = np.linspace(0, 10, 50)
    aims = [ground_target_aim(e, NO_SWAP, rng()).p_true for e in es]
    clears = [ground_target_clear(d, NO_SWAP, rng()).p_true for d in es * 3]
    assert all(a >= b for a, b in zip(aims, aims[1:]))
    assert all(a <= b for a, b in zip(clears, clears[1:]))


def test_outputs_sum_to_one():
    g = rng(3)
    for x in g.uniform(0, 30, 200):
        for fn in (ground_target_aim, ground_target_clear):
            out = fn(float(x), GrounderConfig(), g)
            assert sum(out.distribution) == pytest.approx(1.0, abs=1e-12)
            assert 0.0 <= out.p_true <= 1.0


def test_seeded_determinism():
    a = [ground_target_aim(1.0, GrounderConfig(), rng(9)).p_true for _ in range(3)]
    assert len(set(a)) == 1


def test_swap_rate_matches_error_rate():
    cfg = GrounderConfig(aim_error_rate=0.1)
    g = rng(4)
    p0 = logistic(4.0)
    swapped = sum(ground_target_aim(0.0, cfg, g).p_true < 0.5 for _ in range(20_000))
    assert swapped / 20_000 == pytest.approx(0.1, abs=0.01)
    assert p0 > 0.5


def test_config_validation():
    with pytest.raises(ValueError):
        GrounderConfig(aim_steepness_k=0.0)
    with pytest.raises(ValueError):
        GrounderConfig(clear_error_rate=0.5)


def test_refresh_overwrites_only_perception_atoms():
    world = WorldState.create((50, 50, 0), params=WorldParams(obs_sigma=0.0))
    world = replace(world, nutrunner=(50.0, 50.0, 30.0))
    base = BeliefState({Atom("above_bolt", ("sensor",)): 1.0, TARGET_AIM: 0.1})
    out = refresh(base, world, NO_SWAP, rng())
    assert out.prob(Atom("above_bolt", ("sensor",))) == 1.0
    assert out.prob(TARGET_AIM) == pytest.approx(logistic(4.0))
    assert out.prob(TARGET_CLEAR) == pytest.approx(1.0)


def test_refresh_sees_blocking_obstacle():
    world = WorldState.create((50, 50, 0), obstacles=[Obstacle(52, 50, 4)],
                              params=WorldParams(obs_sigma=0.0))
    out = refresh(BeliefState(), world, NO_SWAP, rng())
    assert out.prob(TARGET_CLEAR) < 0.01


def test_estimators_match_scalar_grounders():
    cfg = GrounderConfig()
    xs = np.array([0.0, 0.5, 2.0, 3.3, 7.0, 12.0, 20.0])
    for cls, fn in ((TargetAimGrounder, ground_target_aim), (TargetClearGrounder, ground_target_clear)):
        est = cls.from_config(cfg).fit(xs[:, None])
        g1, g2 = rng(5), rng(5)
        proba = est.predict_proba(xs[:, None], rng=g1)
        assert list(est.classes_) == [True, False]
        expected = [fn(float(x), cfg, g2).p_true for x in xs]
        assert proba[:, 0] == pytest.approx(expected, abs=1e-12)
        assert np.allclose(proba.sum(axis=1), 1.0)


def test_clear_estimator_at_infinity():
    est = TargetClearGrounder.from_config(GrounderConfig()).fit([[1.0]])
    assert est.predict_proba([[np.inf]], rng=rng())[0, 0] == pytest.approx(0.96)
    assert est.predict([[np.inf]], rng=rng())[0]


def test_estimator_rejects_bad_input():
    est = TargetAimGrounder().fit(np.zeros((3, 1)))
    with pytest.raises(ValueError):
        est.predict_proba(np.array([[-1.0]]))
    with pytest.raises(ValueError):
        est.predict_proba(np.zeros((2, 2)))


def test_estimator_follows_sklearn_conventions():
    from sklearn.base import clone

    est = TargetClearGrounder(threshold=8.0)
    assert clone(est).get_params()["threshold"] == 8.0
    assert est.fit(np.ones((2, 1))) is est
