import dataclasses

import numpy as np
import pytest

from dqmnav import UsageError
from dqmnav.agent import Action, Agent, Hyperparams, ReplayBuffer, Transition, env_step
from dqmnav.modulation import PidGains, PidState, reward, state_error
from dqmnav.qnet import QNetwork, forward


def rigged_agent(q, epsilon=1.0, **kw):
    agent = Agent(Hyperparams(epsilon=epsilon, **kw))
    net = QNetwork.zeros()
    net.b2 = np.array(q, dtype=float)
    agent.eval_net = net
    agent.target_net = net.copy()
    return agent


def tr(tag, n_states=6):
    return Transition(np.full(n_states, float(tag)), tag % 2, float(tag), np.full(n_states, -float(tag)))


def test_hyperparams_defaults():
    h = Hyperparams()
    assert (h.batch_size, h.lr, h.epsilon, h.gamma) == (32, 0.001, 0.9, 0.9)
    assert (h.target_replace_iter, h.memory_capacity, h.n_actions, h.n_states) == (100, 2000, 2, 6)
    assert (h.kp, h.ki, h.kd, h.reward_kind, h.episodes) == (1.0, 0.5, 0.2, "sigmoid", 20)


def test_hyperparams_aliases_and_validation():
    h = Hyperparams.from_dict({"BATCH_SIZE": 8, "GAMMA": 0.5, "kp": 2.0})
    assert (h.batch_size, h.gamma, h.gains) == (8, 0.5, PidGains(2.0, 0.5, 0.2))
    with pytest.raises(UsageError):
        Hyperparams.from_dict({"bogus": 1})
    with pytest.raises(UsageError):
        Hyperparams(epsilon=1.5)
    with pytest.raises(UsageError):
        Hyperparams(n_states=9)
    with pytest.raises(UsageError):
        Hyperparams(reward_kind="cubic")


def test_greedy_picks_larger_q():
    agent = rigged_agent([0.2, 0.7])
    assert all(agent.choose_action(np.zeros(6)) == Action.NO_ADJUST for _ in range(100))


def test_greedy_tie_goes_to_adjust():
    agent = rigged_agent([0.5, 0.5])
    assert all(agent.choose_action(np.zeros(6)) == Action.ADJUST for _ in range(100))


def test_uniform_exploration_frequency():
    agent = rigged_agent([0.0, 1.0], epsilon=0.0)
    picks = [agent.choose_action(np.zeros(6)) for _ in range(10_000)]
    freq = np.mean([a == Action.ADJUST for a in picks])
    # binomial(10000, 0.5) sd = 0.005, so +-0.02 is a 4-sigma band
    assert 0.48 <= freq <= 0.52


def test_env_step_no_adjust():
    states = np.arange(18.0).reshape(3, 6)
    pid = PidState()
    res = env_step(1, Action.NO_ADJUST, states, pid, PidGains(), 0.01, "sigmoid")
    np.testing.assert_array_equal(res.next_state, states[2])
    assert (res.reward, res.error) == (1.0, 1.0)
    assert res.pid is pid


def test_env_step_adjust_identity_first_call():
    states = np.array([[1.0, 2, 3, 4, 5, 6]] * 2)
    res = env_step(0, Action.ADJUST, states, PidState(), PidGains(1.0, 0.5, 0.2), 0.005, "sigmoid")
    assert res.error == 0.0
    assert res.reward == pytest.approx(0.5, abs=1e-9)


def test_env_step_adjust_chain():
    gains = PidGains(1.0, 0.5, 0.2)
    states = np.ones((3, 6))
    states[2] = [2.0, 0, 1, 1, 1, 1]
    first = env_step(0, Action.ADJUST, states, PidState(), gains, 1.0, "sigmoid")
    second = env_step(1, Action.ADJUST, states, first.pid, gains, 1.0, "sigmoid")
    np.testing.assert_array_equal(second.next_state, np.full(6, 1.5))
    # (0.5^2 + 1.5^2 + 4 * 0.5^2) / 6
    assert second.error == pytest.approx((0.25 + 2.25 + 4 * 0.25) / 6, abs=1e-15)
    assert second.reward == reward("sigmoid", second.error)


def test_env_step_final_index_is_error():
    with pytest.raises(UsageError):
        env_step(2, Action.NO_ADJUST, np.zeros((3, 6)), PidState(), PidGains(), 0.01, "sigmoid")


def test_buffer_ring_arithmetic():
    buf = ReplayBuffer(2000)
    for k in range(1, 6):
        buf.store(tr(k))
    assert len(buf) == 5
    for k in range(6, 2002):
        buf.store(tr(k))
    assert len(buf) == 2000
    assert buf[0].reward == 2001.0
    assert 1.0 not in set(buf.rewards.tolist())
    for k in range(2002, 5001):
        buf.store(tr(k))
    assert len(buf) == 2000


def test_buffer_fifo_holds_last_capacity():
    buf = ReplayBuffer(50)
    for k in range(1, 138):
        buf.store(tr(k))
    assert sorted(buf.rewards.tolist()) == [float(k) for k in range(88, 138)]
    stored = buf[5]
    assert stored.action == int(stored.reward) % 2
    np.testing.assert_array_equal(stored.next_state, -stored.state)


def test_sample_batch():
    buf = ReplayBuffer(2000)
    for k in range(31):
        buf.store(tr(k))
    assert buf.sample_batch(32, np.random.default_rng(0)) is None
    for k in range(31, 2000):
        buf.store(tr(k))
    s, a, r, s2 = buf.sample_batch(32, np.random.default_rng(0))
    assert s.shape == (32, 6) and a.shape == r.shape == (32,)
    assert set(r.tolist()) <= set(buf.rewards.tolist())
    s_b, _, r_b, _ = buf.sample_batch(32, np.random.default_rng(0))
    assert r.tobytes() == r_b.tobytes()


def test_learn_not_ready_leaves_state():
    agent = Agent(Hyperparams())
    for k in range(10):
        agent.store(tr(k))
    before_eval, before_target = agent.eval_net.copy(), agent.target_net.copy()
    assert agent.learn() is None
    assert agent.learn_counter == 0
    assert agent.eval_net.bit_equal(before_eval) and agent.target_net.bit_equal(before_target)


def test_learn_after_full_switch():
    agent = Agent(Hyperparams(learn_after_full=True, memory_capacity=64))
    for k in range(63):
        agent.store(tr(k))
    assert agent.learn() is None
    agent.store(tr(63))
    assert agent.learn() is not None


def test_td_target_value():
    # zero eval net, target net outputs [2, 1]: y = 1 + 0.9 * 2 = 2.8, loss = 2.8^2
    agent = Agent(Hyperparams(batch_size=1, gamma=0.9, target_replace_iter=10**6))
    agent.eval_net = QNetwork.zeros()
    agent.learn_counter = 1
    agent.target_net = QNetwork.zeros()
    agent.target_net.b2 = np.array([2.0, 1.0])
    agent.store(Transition(np.zeros(6), 0, 1.0, np.zeros(6)))
    loss = agent.learn()
    assert loss == pytest.approx(2.8**2, rel=1e-15)


def test_target_sync_and_constancy(rng):
    agent = Agent(Hyperparams(target_replace_iter=100))
    for k in range(200):
        agent.store(Transition(rng.normal(size=6), int(k % 2), 1.0, rng.normal(size=6)))
    probe = rng.normal(size=(5, 6))
    target_before = agent.target_net.copy()
    for _ in range(350):
        counter = agent.learn_counter
        eval_before = agent.eval_net.copy()
        agent.learn()
        if counter % 100 == 0:
            assert agent.target_net.bit_equal(eval_before)
            target_before = agent.target_net.copy()
        else:
            assert agent.target_net.bit_equal(target_before)
            assert forward(agent.target_net, probe).tobytes() == forward(target_before, probe).tobytes()
    assert agent.learn_counter == 350
