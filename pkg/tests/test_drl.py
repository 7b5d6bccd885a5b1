import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from sfwnav.controller import SFW_WEIGHTS, CostWeights
from sfwnav.geometry import Pose2D
from sfwnav.drl.checkpoint import (MAGIC, CheckpointError, infer_weights, load_checkpoint, read_arrays,
                                   save_checkpoint, write_arrays)
from sfwnav.drl.env import WeightEnv
from sfwnav.drl.nets import MLP, Adam, polyak
from sfwnav.drl.observation import (ACTION_ORDER, OBS_DIM, PERSON_PADDING, ActionSpec, action_from_weights,
                                    build_observation, people_features, weights_from_action)
from sfwnav.drl.replay import ReplayBuffer
from sfwnav.drl.reward import (COLLISION_PENALTY, RewardCoefficients, combine, heading_reward, obstacle_reward,
                               proxemics_penalty, reward, velocity_reward)
from sfwnav.drl.sac import Batch, SACAgent, SACConfig, sac_update
from sfwnav.drl.train import TrainConfig, Trainer, episode_seed, random_action_probability, read_log, train
from sfwnav.world import World, load_scenario

from .oracles import golden_observation, sac_gradient_errors

DATA = Path(__file__).parent / "data"

ROOM = """
[world]
size 14 10
border
[robot]
start 4 5 0
goal 12 5
"""

TINY = dict(hidden=(8, 8), batch_size=8)


def room_world(peds=""):
    s, g = load_scenario(ROOM + peds)
    return World(s, g)


def ped_block(x, y, wx=None, wy=None, speed=0.0):
    block = f"[pedestrian]\nstart {x} {y}\nspeed {speed}\n"
    if wx is not None:
        block += f"waypoint {wx} {wy}\n"
    return block


class TestObservation:
    def test_layout(self):
        obs = build_observation(room_world(), SFW_WEIGHTS, waypoint=(6.0, 5.0))
        assert obs.shape == (OBS_DIM,) == (59,)
        assert obs[0] == 0.0 and obs[1] == pytest.approx(2.0)
        assert list(obs[2:7]) == [1.0, 0.6, 0.8, 2.0, 2.0]  # w_d, w_h, w_v, w_o, w_s
        assert list(obs[7:23]) == list(PERSON_PADDING) * 4
        assert np.all(obs[23:] == 3.0)

    def test_goal_to_the_left(self):
        obs = build_observation(room_world(), SFW_WEIGHTS, waypoint=(4.0, 6.5))
        assert obs[0] == pytest.approx(math.pi / 2) and obs[1] == pytest.approx(1.5)

    def test_nearest_four_sorted(self):
        peds = "".join(ped_block(4 + d, 5 + (0.6 if i % 2 else -0.6)) for i, d in enumerate([4.0, 1.5, 3.0, 2.0, 2.5]))
        w = room_world(peds)
        feats = people_features(w.robot, w.pedestrians).reshape(4, 4)
        expected = sorted(math.hypot(d, 0.6) for d in [4.0, 1.5, 3.0, 2.0, 2.5])[:4]
        assert feats[:, 1] == pytest.approx(expected)

    def test_out_of_range_is_padding(self):
        w = room_world(ped_block(10.0, 5.0))
        assert list(people_features(w.robot, w.pedestrians)) == list(PERSON_PADDING) * 4

    def test_person_fields(self):
        w = room_world(ped_block(5.0, 6.0))
        w.pedestrians[0].velocity[:] = (0.0, -0.5)
        ang, dist, speed, heading = people_features(w.robot, w.pedestrians)[:4]
        assert ang == pytest.approx(math.pi / 4) and dist == pytest.approx(math.sqrt(2))
        assert speed == pytest.approx(0.5) and heading == pytest.approx(-math.pi / 2)

    def test_golden_vector(self):
        pinned = [float.fromhex(v) for v in json.loads((DATA / "golden_observation.json").read_text())["values"]]
        obs = golden_observation(DATA / "golden_world.scn")
        assert obs.tobytes() == np.array(pinned).tobytes()

    def test_deterministic(self):
        a = golden_observation(DATA / "golden_world.scn")
        b = golden_observation(DATA / "golden_world.scn")
        assert a.tobytes() == b.tobytes()


class TestActionSpec:
    def test_table_ranges(self):
        spec = ActionSpec()
        assert ACTION_ORDER == ("w_d", "w_h", "w_v", "w_o", "w_s")
        assert spec.low == (0.1, 0.1, 0.1, 0.5, 0.5) and spec.high == (1.5, 1.0, 1.0, 3.0, 3.0)
        assert ActionSpec.uniform().low == (0.1,) * 5 and ActionSpec.uniform().high == (5.0,) * 5

    def test_round_trip(self):
        w = CostWeights(w_s=1.0, w_o=2.0, w_v=0.3, w_d=0.4, w_h=0.5)
        assert weights_from_action(action_from_weights(w)) == w
        spec = ActionSpec()
        a = np.array([0.3, -0.2, 0.9, -1.0, 1.0])
        assert spec.to_unit(spec.from_unit(a)) == pytest.approx(a)


class TestReward:
    def test_heading_closed_form(self):
        assert heading_reward(0.0) == 1.0
        assert heading_reward(math.pi) == pytest.approx(-1.0, abs=1e-12)
        assert heading_reward(-math.pi) == pytest.approx(-1.0, abs=1e-12)
        assert heading_reward(math.pi / 4) == pytest.approx(0.0, abs=1e-12)

    def test_velocity_and_obstacle(self):
        assert velocity_reward(0.6) == 0.0 and velocity_reward(0.0) == -1.0
        assert obstacle_reward(3.0) == 0.0 and obstacle_reward(0.0) == -1.0 and obstacle_reward(9.0) == 0.0

    def test_proxemics(self):
        assert proxemics_penalty(math.inf) == 0.0 and proxemics_penalty(5.5) == 0.0
        assert proxemics_penalty(2.0) == 0.5 and proxemics_penalty(0.05) == 5.0

    def test_open_space_example(self):
        r = reward(Pose2D(0, 0, 0), Pose2D(0.25, 0, 0), (2.0, 0.0), 0.6, np.full(36, 3.0), math.inf, 0.0, False)
        assert r.r_d == pytest.approx(0.25) and r.r_h == 1.0
        assert r.total == pytest.approx(10 * 0.25 + 0.4 * 1 + 0 + 0 - 0 - 0)
        assert r.total == pytest.approx(2.9)

    def test_signs_and_collision(self):
        coef = RewardCoefficients()
        r = combine(0.1, 0.5, -0.2, -0.3, 0.8, 0.7, True, coef)
        expected = 10 * 0.1 + 0.4 * 0.5 + 1.0 * -0.2 + 2.0 * -0.3 - 2.0 * 0.8 - 2.5 * 0.7 - 400
        assert r.total == pytest.approx(expected) and r.r_c == COLLISION_PENALTY == -400.0


class TestNets:
    def test_polyak(self):
        rng = np.random.default_rng(0)
        a, b = MLP((3, 4, 2), rng), MLP((3, 4, 2), rng)
        keep = [p.copy() for p in a.params]
        polyak(a, b, 0.0)
        assert all(np.array_equal(x, y) for x, y in zip(a.params, keep))
        polyak(a, b, 1.0)
        assert all(np.array_equal(x, y) for x, y in zip(a.params, b.params))

    def test_non_finite_raises(self):
        net = MLP((2, 3, 1), np.random.default_rng(0))
        net.params[0][0, 0] = np.inf
        with pytest.raises(FloatingPointError):
            net.forward(np.ones((1, 2)))

    def test_adam_first_step(self):
        p = [np.array([1.0, -1.0])]
        Adam(p, lr=0.1).step(p, [np.array([0.5, -2.0])])
        assert p[0] == pytest.approx([0.9, -0.9])


class TestPolicy:
    def test_zero_network_midpoint(self):
        agent = SACAgent(0, zero_init=True)
        w, _ = agent.policy_forward(np.ones(OBS_DIM), deterministic=True)
        assert w == pytest.approx(ActionSpec().midpoint)
        assert w == pytest.approx([0.8, 0.55, 0.55, 1.75, 1.75])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.floats(-50, 50))
    def test_samples_in_range(self, seed, shift):
        agent = SACAgent(seed % 7, SACConfig(hidden=(8, 8)))
        agent.actor.params[-1] += shift
        obs = np.random.default_rng(seed).normal(size=(16, OBS_DIM))
        for spec in (ActionSpec(), ActionSpec.uniform()):
            agent.spec = spec
            w, logp = agent.policy_forward(obs)
            assert np.all(w >= spec.low_array) and np.all(w <= spec.high_array)

    def test_deterministic_log_density(self):
        agent = SACAgent(3, SACConfig(hidden=(8, 8)))
        obs = np.random.default_rng(1).normal(size=OBS_DIM)
        _, logp = agent.policy_forward(obs, deterministic=True)
        mean, log_std, _ = agent.policy_heads(agent.normalize(obs)[None])
        mean, std = mean[0], np.exp(np.clip(log_std[0], -20, 2))
        hw = ActionSpec().half_width
        # density of w = mid + hw * tanh(u) at u = mean by change of variables
        expected = np.sum(norm.logpdf(mean, mean, std) - np.log(hw) - np.log(1 - np.tanh(mean) ** 2))
        assert logp == pytest.approx(expected, rel=1e-10)

    def test_deterministic_ignores_sampler(self):
        agent = SACAgent(3, SACConfig(hidden=(8, 8)))
        obs = np.ones(OBS_DIM)
        state = agent.rng.bit_generator.state
        a, _ = agent.policy_forward(obs, deterministic=True)
        assert agent.rng.bit_generator.state == state
        b, _ = agent.policy_forward(obs, deterministic=True)
        assert np.array_equal(a, b)


class TestSAC:
    def batch(self, n=8, done=0.0, seed=0):
        rng = np.random.default_rng(seed)
        return Batch(rng.normal(size=(n, OBS_DIM)), rng.uniform(-1, 1, (n, 5)), rng.normal(size=n),
                     rng.normal(size=(n, OBS_DIM)), np.full(n, done))

    @pytest.mark.parametrize("draw", range(5))
    def test_gradients(self, draw):
        assert max(sac_gradient_errors(draw)) < 1e-4

    def test_terminal_target_is_reward(self):
        agent = SACAgent(0, SACConfig(**TINY))
        b = self.batch(done=1.0)
        y = agent.critic_target(b, np.random.default_rng(0).normal(size=(8, 5)))
        assert np.array_equal(y, b.rew)

    def test_zero_lr_keeps_parameters(self):
        agent = SACAgent(0, SACConfig(lr=0.0, **TINY))
        before = {k: [p.copy() for p in n.params] for k, n in agent.networks().items()}
        alpha = agent.log_alpha.copy()
        sac_update(agent, self.batch())
        for k in ("actor", "q1", "q2"):
            assert all(np.array_equal(a, b) for a, b in zip(before[k], agent.networks()[k].params))
        assert agent.log_alpha.tobytes() == alpha.tobytes()

    def test_update_reduces_critic_loss(self):
        agent = SACAgent(0, SACConfig(lr=1e-3, **TINY))
        b = self.batch(n=32, done=1.0)
        first = agent.update(b)["critic_loss"]
        for _ in range(200):
            last = agent.update(b)["critic_loss"]
        assert last < first

    def test_empty_batch(self):
        agent = SACAgent(0, SACConfig(**TINY))
        with pytest.raises(ValueError):
            agent.update(Batch(np.zeros((0, OBS_DIM)), np.zeros((0, 5)), np.zeros(0), np.zeros((0, OBS_DIM)),
                               np.zeros(0)))


class TestReplay:
    def test_fifo(self):
        buf = ReplayBuffer(3, 2, 1)
        for i in range(5):
            buf.add([i, i], [i], float(i), [i + 1, i + 1], i == 4)
        assert len(buf) == 3
        assert list(buf.rew[buf.ordered_indices()]) == [2.0, 3.0, 4.0]

    def test_sample_and_empty(self, tmp_path):
        buf = ReplayBuffer(4, 2, 1)
        with pytest.raises(ValueError):
            buf.sample(np.random.default_rng(0), 2)
        for i in range(6):
            buf.add([i, 0], [0.1 * i], float(i), [i, 1], False)
        b = buf.sample(np.random.default_rng(0), 10)
        assert set(b.rew) <= {2.0, 3.0, 4.0, 5.0}
        buf.save(tmp_path / "r.npz")
        again = ReplayBuffer.load(tmp_path / "r.npz")
        assert np.array_equal(again.obs, buf.obs) and (again.head, again.size) == (buf.head, buf.size)


class TestCheckpoint:
    def trained_agent(self):
        agent = SACAgent(5, SACConfig(**TINY))
        agent.update(TestSAC().batch())
        return agent

    def test_round_trip(self, tmp_path):
        agent = self.trained_agent()
        save_checkpoint(agent, tmp_path / "a.ckpt", {"note": 1})
        loaded, man = load_checkpoint(tmp_path / "a.ckpt")
        assert man["note"] == 1 and loaded.updates == 1
        for k, net in agent.networks().items():
            assert all(np.array_equal(a, b) for a, b in zip(net.params, loaded.networks()[k].params))
        obs = np.linspace(-1, 1, OBS_DIM)
        assert infer_weights(loaded, obs) == infer_weights(tmp_path / "a.ckpt", obs)
        assert infer_weights(agent, obs) == infer_weights(loaded, obs)
        # continuing both gives identical parameters
        b = TestSAC().batch(seed=3)
        agent.update(b)
        loaded.update(b)
        assert np.array_equal(agent.actor.params[0], loaded.actor.params[0])

    def test_corruption(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(self.trained_agent(), path)
        raw = path.read_bytes()
        for name, data in [("magic", b"XXXXXXXX" + raw[8:]), ("truncated", raw[:-9]), ("trailing", raw + b"\0"),
                           ("version", raw[:8] + (99).to_bytes(4, "little") + raw[12:]), ("header", raw[:10])]:
            bad = tmp_path / f"{name}.ckpt"
            bad.write_bytes(data)
            (tmp_path / f"{name}.ckpt.json").write_text((tmp_path / "a.ckpt.json").read_text())
            with pytest.raises(CheckpointError):
                load_checkpoint(bad)
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "missing.ckpt")

    def test_non_finite_rejected(self, tmp_path):
        write_arrays(tmp_path / "n.bin", [np.array([1.0, np.nan])])
        with pytest.raises(CheckpointError):
            read_arrays(tmp_path / "n.bin")
        assert (tmp_path / "n.bin").read_bytes().startswith(MAGIC)


class TestEnv:
    def test_episode_runs_and_terminates(self):
        env = WeightEnv("free_space")
        obs = env.reset(0)
        assert obs.shape == (OBS_DIM,)
        assert list(obs[2:7]) == list(action_from_weights(SFW_WEIGHTS))
        done, n = False, 0
        while not done:
            res = env.step(action_from_weights(SFW_WEIGHTS))
            done, n = res.done, n + 1
            assert res.done == (res.status != "running")
        assert res.status == "success" and n <= 120

    def test_prev_weights_in_observation(self):
        env = WeightEnv("crossing")
        env.reset(1)
        a = np.array([0.2, 0.3, 0.4, 0.6, 0.7])
        assert list(env.step(a).obs[2:7]) == list(a)


TRAIN = dict(scenarios=["free_space"], episodes=3, warmup_steps=20, checkpoint_every=2, sac=dict(**TINY))


class TestTraining:
    def test_exploration_schedule(self):
        cfg = TrainConfig()
        assert random_action_probability(cfg, 0) == 0.3
        assert random_action_probability(cfg, 50) == pytest.approx(0.3 / math.e)
        assert episode_seed(1, 2) != episode_seed(2, 1)

    def test_config_strict(self, tmp_path):
        with pytest.raises(ValueError):
            TrainConfig.from_dict({"bogus": 1})
        with pytest.raises(ValueError):
            TrainConfig.from_dict({"sac": {"bogus": 1}})
        with pytest.raises(ValueError):
            TrainConfig.from_dict({"action_range": "huge"})
        cfg = TrainConfig.from_dict(TRAIN)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg

    def test_warmup_actions_in_range(self, tmp_path):
        trainer = Trainer(TrainConfig.from_dict(TRAIN), tmp_path)
        for _ in range(50):
            a = trainer.choose(np.zeros(OBS_DIM), 0.0)
            assert np.all(np.abs(a) <= 1) and trainer.spec.contains(trainer.spec.from_unit(a))

    def test_deterministic(self, tmp_path):
        a = train(TRAIN, tmp_path / "a")
        b = train(TRAIN, tmp_path / "b")
        assert a == b
        assert (tmp_path / "a" / "ckpt_00003.ckpt").read_bytes() == (tmp_path / "b" / "ckpt_00003.ckpt").read_bytes()
        log = read_log(tmp_path / "a" / "train_log.csv")
        assert [r["episode"] for r in log] == ["0", "1", "2"]
        assert set(log[0]) == {"episode", "steps", "return", "outcome", "mean_alpha", "actor_loss", "critic_loss"}

    def test_resume_matches_uninterrupted(self, tmp_path):
        full = train(TRAIN, tmp_path / "full")
        train(dict(TRAIN, episodes=2), tmp_path / "part")
        resumed = train(TRAIN, tmp_path / "part", resume=True)
        assert resumed == full
        assert (tmp_path / "full" / "ckpt_00003.ckpt").read_bytes() == \
            (tmp_path / "part" / "ckpt_00003.ckpt").read_bytes()

    def test_resume_without_checkpoint(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            train(TRAIN, tmp_path / "none", resume=True)
