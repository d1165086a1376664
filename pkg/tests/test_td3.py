import numpy as np
import pytest

from tradelab.agents import (
    DecaySchedule,
    Td3Agent,
    Td3Config,
    Transition,
    actor_gradient,
    td3_critic_target,
    td3_select_action,
    td3_target_action,
    train,
)
from tradelab.env import EnvConfig
from tradelab.neuralnet import create_mlp, forward, get_params, set_params

from conftest import alternating_series
from oracles import finite_difference_grads, rel_close


def small_config(**overrides):
    defaults = dict(
        batch_size=8,
        warmup_episodes=1,
        buffer_capacity=500,
        actor_hidden=(8,),
        critic_hidden=(8,),
        exploration_noise=DecaySchedule(0.3, 0.05, 5.0),
        policy_noise=DecaySchedule(0.2, 0.1, 5.0),
        noise_clip=DecaySchedule(0.5, 0.2, 5.0),
    )
    defaults.update(overrides)
    return Td3Config(**defaults)


def zero_actor(window):
    net = create_mlp((window, 4, 1), np.random.default_rng(0), output_activation="tanh")
    set_params(net, [np.zeros_like(p) for p in get_params(net)])
    return net


class StubRng:
    """Feeds a fixed normal draw; only what td3_target_action touches."""

    def __init__(self, draw):
        self.draw = draw

    def normal(self, loc, scale):
        return self.draw


class TestSelectAction:
    def test_noiseless_is_policy_output(self, rng):
        actor = create_mlp((3, 4, 1), rng, output_activation="tanh")
        state = rng.normal(size=3)
        expected = float(forward(actor, state)[0])
        assert td3_select_action(actor, state, 0.0, rng) == expected

    def test_zero_network_acts_zero(self, rng):
        assert td3_select_action(zero_actor(3), [1.0, 2.0, 3.0], 0.0, rng) == 0.0

    def test_noise_is_centered(self):
        actor = zero_actor(2)
        gen = np.random.default_rng(99)
        draws = [td3_select_action(actor, [0.0, 0.0], 0.2, gen) for _ in range(10_000)]
        assert abs(float(np.mean(draws))) < 0.01

    def test_clamped_to_unit_interval(self):
        actor = zero_actor(1)
        gen = np.random.default_rng(5)
        draws = [td3_select_action(actor, [0.0], 5.0, gen) for _ in range(500)]
        assert all(-1.0 <= a <= 1.0 for a in draws)
        assert any(abs(a) == 1.0 for a in draws)


class TestTargetAction:
    def test_noiseless(self, rng):
        actor = create_mlp((2, 3, 1), rng, output_activation="tanh")
        state = [0.5, -0.5]
        expected = float(np.clip(forward(actor, state)[0], -0.9, 0.8))
        assert td3_target_action(actor, state, 0.0, 0.4, -0.9, 0.8, rng) == expected

    def test_zero_clip_kills_noise(self, rng):
        actor = zero_actor(2)
        got = td3_target_action(actor, [1.0, 1.0], 0.3, 0.0, -1.0, 1.0, np.random.default_rng(1))
        assert got == 0.0

    def test_double_clip_hand_example(self):
        # policy output 0.9, raw draw +0.5 clipped to +0.3, sum clipped to 1.0
        actor = zero_actor(1)
        actor.biases[-1][:] = np.arctanh(0.9)
        got = td3_target_action(actor, [0.0], 0.2, 0.3, -1.0, 1.0, StubRng(0.5))
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_noise_stays_within_clip(self):
        actor = zero_actor(1)
        gen = np.random.default_rng(2)
        for _ in range(2000):
            a = td3_target_action(actor, [0.0], 1.0, 0.25, -1.0, 1.0, gen)
            assert -0.25 <= a <= 0.25


class TestCriticTarget:
    def test_terminal_is_reward(self):
        assert td3_critic_target(0.05, True, 0.99, 3.0, 4.0) == 0.05

    def test_min_of_twin_critics(self):
        assert td3_critic_target(0.1, False, 0.99, 1.0, 0.8) == pytest.approx(0.892)

    def test_equal_critics_reduce(self):
        assert td3_critic_target(0.2, False, 0.9, 0.7, 0.7) == pytest.approx(0.2 + 0.9 * 0.7)

    def test_min_bound_property(self, rng):
        for _ in range(200):
            r, q1, q2 = rng.normal(size=3)
            y = td3_critic_target(r, False, 0.99, q1, q2)
            assert y <= r + 0.99 * q1 + 1e-12
            assert y <= r + 0.99 * q2 + 1e-12


def fill_buffer(agent, rng, n=32, window=3):
    for _ in range(n):
        agent.store(Transition(
            state=rng.normal(size=window),
            action=float(rng.uniform(-1, 1)),
            reward=float(rng.normal(scale=0.01)),
            next_state=rng.normal(size=window),
            terminal=False,
        ))


class TestUpdate:
    def test_delayed_actor_and_targets(self, rng):
        agent = Td3Agent(3, small_config(policy_delay=3), seed=1)
        fill_buffer(agent, rng)
        before_actor = [p.copy() for p in get_params(agent.actor)]
        before_targets = [p.copy() for p in get_params(agent.critic1_target)]
        gen = np.random.default_rng(0)
        d1 = agent.update(0, gen)
        d2 = agent.update(0, gen)
        assert not d1["actor_updated"] and not d2["actor_updated"]
        for a, b in zip(before_actor, get_params(agent.actor)):
            assert np.array_equal(a, b)
        for a, b in zip(before_targets, get_params(agent.critic1_target)):
            assert np.array_equal(a, b)
        d3 = agent.update(0, gen)
        assert d3["actor_updated"]
        assert any(not np.array_equal(a, b)
                   for a, b in zip(before_actor, get_params(agent.actor)))

    def test_critics_move_every_update(self, rng):
        agent = Td3Agent(3, small_config(), seed=2)
        fill_buffer(agent, rng)
        before = [p.copy() for p in get_params(agent.critic1)]
        agent.update(0, np.random.default_rng(0))
        assert any(not np.array_equal(a, b) for a, b in zip(before, get_params(agent.critic1)))

    def test_underfilled_buffer_rejected(self, rng):
        agent = Td3Agent(3, small_config(batch_size=16), seed=0)
        fill_buffer(agent, rng, n=4)
        with pytest.raises(ValueError, match="batch size"):
            agent.update(0, np.random.default_rng(0))

    def test_overfits_single_terminal_transition(self, rng):
        agent = Td3Agent(2, small_config(batch_size=4, policy_delay=2), seed=3)
        fixed = Transition(
            state=np.array([1.0, -1.0]),
            action=0.5,
            reward=0.07,
            next_state=np.array([0.0, 0.0]),
            terminal=True,
        )
        for _ in range(agent.config.batch_size):
            agent.store(fixed)
        gen = np.random.default_rng(1)
        loss = None
        for _ in range(3000):
            loss = agent.update(0, gen)["critic1_loss"]
        assert loss < 1e-6

    def test_actor_gradient_matches_finite_differences(self, rng):
        actor = create_mlp((2, 3, 1), rng, output_activation="tanh")
        critic = create_mlp((3, 4, 1), rng)
        states = rng.normal(size=(6, 2))
        grads, _ = actor_gradient(actor, critic, states)

        def objective():
            actions = forward(actor, states)
            q = forward(critic, np.hstack([states, actions]))
            return float(np.mean(q))

        fd = finite_difference_grads(objective, get_params(actor))
        for got, want in zip(grads, fd):
            for g, w in zip(got.ravel(), want.ravel()):
                assert rel_close(g, w)


class TestTraining:
    def test_two_runs_are_bit_identical(self):
        series = alternating_series(40)
        cfg = small_config(warmup_episodes=2)
        env_cfg = EnvConfig(window=3, initial_cash=1000.0)
        params = []
        for _ in range(2):
            agent = Td3Agent(3, cfg, seed=11)
            train(agent, series, env_cfg, episodes=4, seed=11)
            params.append([p.copy() for p in get_params(agent.actor)])
        for a, b in zip(*params):
            assert np.array_equal(a, b)

    def test_warmup_only_leaves_params_untouched(self):
        series = alternating_series(40)
        cfg = small_config(warmup_episodes=3)
        agent = Td3Agent(3, cfg, seed=5)
        before = [p.copy() for p in get_params(agent.actor)]
        log = train(agent, series, EnvConfig(window=3), episodes=3, seed=5)
        assert all(rec["warmup"] for rec in log)
        for a, b in zip(before, get_params(agent.actor)):
            assert np.array_equal(a, b)
        assert len(agent.buffer) > 0

    def test_learns_alternating_pattern_single_seed(self):
        series = alternating_series(160)
        env_cfg = EnvConfig(window=2, initial_cash=1000.0)
        cfg = small_config(
            warmup_episodes=3,
            batch_size=32,
            actor_hidden=(16, 8),
            critic_hidden=(16, 8),
            exploration_noise=DecaySchedule(0.5, 0.05, 5.0),
        )
        agent = Td3Agent(2, cfg, seed=0)
        train(agent, series, env_cfg, episodes=15, seed=0)
        # the learned policy should long after a down day and short after an up day
        up_state = np.array([-1.0, 1.0])   # newest move was +1%
        down_state = np.array([1.0, -1.0])
        assert agent.policy(up_state) < 0
        assert agent.policy(down_state) > 0


class TestCheckpoint:
    def test_roundtrip(self, tmp_path, rng):
        agent = Td3Agent(3, small_config(), seed=7)
        fill_buffer(agent, rng)
        agent.update(0, np.random.default_rng(0))
        agent.episodes_trained = 9
        path = tmp_path / "agent.npz"
        agent.save(path)
        twin = Td3Agent(3, small_config(), seed=99)
        twin.load(path)
        assert twin.episodes_trained == 9
        for a, b in zip(get_params(agent.actor), get_params(twin.actor)):
            assert np.array_equal(a, b)
        for a, b in zip(get_params(agent.critic2_target), get_params(twin.critic2_target)):
            assert np.array_equal(a, b)

    def test_config_mismatch_rejected(self, tmp_path):
        agent = Td3Agent(3, small_config(), seed=7)
        path = tmp_path / "agent.npz"
        agent.save(path)
        other = Td3Agent(3, small_config(gamma=0.5), seed=7)
        with pytest.raises(ValueError, match="different configuration"):
            other.load(path)


class TestConfig:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Td3Config(gamma=1.0)
        with pytest.raises(ValueError):
            Td3Config(action_low=0.5, action_high=0.5)
        with pytest.raises(ValueError):
            Td3Config(action_high=1.5)

    def test_hash_is_stable_and_sensitive(self):
        assert Td3Config().hash() == Td3Config().hash()
        assert Td3Config().hash() != Td3Config(tau=0.01).hash()
