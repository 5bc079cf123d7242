import math

import numpy as np
import pytest

import uavslice


def small_config(**extra):
    overrides = {
        "scenario.n_uavs": 2,
        "scenario.ue_min": 20,
        "scenario.ue_max": 20,
        "scenario.churn_arrival_prob": 0,
        "scenario.churn_departure_prob": 0,
    }
    overrides.update(extra)
    return uavslice.Config(overrides)


def test_config_round_trip_and_errors():
    config = small_config()
    assert config.get("scenario.n_uavs") == "2"
    assert uavslice.Config.parse(config.serialize()).hash() == config.hash()
    with pytest.raises(uavslice.ConfigError):
        uavslice.Config({"scenario.no_such_key": 1})
    with pytest.raises(uavslice.ConfigError):
        config.set("reward.alpha", "-1")


def test_channel_values():
    assert uavslice.channel.los_probability(4.88) == pytest.approx(1 / 5.88, rel=1e-12)
    assert uavslice.channel.throughput_bps(0.0, 5.0) == 0.0
    assert uavslice.channel.throughput_bps(1e6, 1.0) == pytest.approx(1e6, rel=1e-12)
    with pytest.raises(uavslice.DomainError):
        uavslice.channel.los_probability(0.0)


def test_fairness_identities():
    assert uavslice.fairness_index([0.4] * 7) == 1.0
    assert uavslice.fairness_index([0, 0, 3.0, 0]) == 0.25
    assert uavslice.fairness_index([0.0, 0.0]) == 1.0


def test_environment_step_with_baselines():
    env = uavslice.Environment(small_config())
    obs = env.reset(7)
    assert obs.shape == (2, uavslice.OBS_WIDTH)
    assert np.all(np.isfinite(obs))
    for kind in ("random", "coverage", "qos"):
        actions = uavslice.baseline_actions(env, kind, seed=3)
        assert actions.shape == (2, uavslice.ACTION_WIDTH)
        obs, reward, info = env.step(actions)
        parts = info["reward"]
        assert math.isclose(reward, 2.0 * parts["qos"] - 0.8 * parts["energy"] + 0.5 * parts["fairness"],
                            abs_tol=1e-9)
        assert env.constraint_violations() == []
        assert all(sum(rbs) == 1667 for rbs in env.uav_resource_blocks())
    with pytest.raises(ValueError):
        env.step(np.zeros((2, 5)))


def test_environment_is_seed_deterministic():
    a = uavslice.Environment(small_config())
    b = uavslice.Environment(small_config())
    assert np.array_equal(a.reset(11), b.reset(11))
    actions = np.zeros((2, uavslice.ACTION_WIDTH))
    assert np.array_equal(a.step(actions)[0], b.step(actions)[0])


def test_short_training_and_evaluation(tmp_path):
    out = tmp_path / "run"
    config = small_config(**{
        "run.out_dir": str(out),
        "run.steps": 30,
        "run.episode_length": 10,
        "run.eval_every": 0,
        "run.eval_episodes": 1,
        "run.eval_rollout_steps": 5,
        "run.checkpoint_every": 0,
        "learner.batch_size": 8,
        "learner.buffer_capacity": 64,
    })
    uavslice.train(config)
    assert (out / "train.csv").exists()
    assert (out / "checkpoint" / "manifest.json").exists()
    config.set("run.out_dir", str(tmp_path / "eval"))
    reward = uavslice.evaluate(config, checkpoint=out)
    assert math.isfinite(reward)
    config.set("run.out_dir", str(tmp_path / "random"))
    assert math.isfinite(uavslice.baseline(config, "random"))
    uavslice.export_figures([tmp_path / "eval" / "eval.csv"], tmp_path / "fig", 3)
    assert (tmp_path / "fig" / "figure_reward.csv").exists()
