import pytest

from nesytamp.config import ConfigError, dump_config, dumps_config, load_config, loads_config
from nesytamp.experiments import ExperimentConfig, Method, Mode, ObstacleKind, SceneParams
from nesytamp.simworld import WorldParams


def test_defaults_from_empty_file():
    assert loads_config("") == ExperimentConfig()


def test_round_trip(tmp_path):
    cfg = ExperimentConfig(
        sigma_list=(0.25, 3.0), episodes_per_sigma=17, mode=Mode.WITH_OBSTACLES,
        method=Method.BASELINE, master_seed=2 ** 63 - 1,
        world=WorldParams(compliance_radius=3.5, home=(0.0, 1.0, 2.0)),
        scene=SceneParams(obstacle_kinds=(ObstacleKind("pin", 1.5, False),)),
    )
    assert loads_config(dumps_config(cfg)) == cfg
    assert load_config(dump_config(cfg, tmp_path / "c.ini")) == cfg


def test_partial_sections():
    cfg = loads_config("[planner]\nprune_threshold = 0.3\n[world]\ntorque_cutoff = 6\n")
    assert cfg.planner.prune_threshold == 0.3
    assert cfg.world.torque_cutoff == 6.0
    assert cfg.executor.replan_budget == 10


@pytest.mark.parametrize("text", [
    "[planer]\nmax_depth = 3\n",
    "[planner]\nmax_dept = 3\n",
    "[experiment]\nmode = sideways\n",
    "[experiment]\nsigma_list = 1, -2\n",
    "[executor]\nreplan_budget = many\n",
    "[scene]\nobstacle_kinds = nut\n",
    "not an ini file",
])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        loads_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")
