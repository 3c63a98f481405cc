"""Double-DQN link-selection agent.

The critic scores a (observation, one-hot action) pair, so choosing an
action means evaluating all eight concatenations.  The online network picks
the next action for the bootstrap target and the target network, a hard
copy refreshed every ``target_sync`` timesteps, evaluates it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .env import N_ACTIONS, OBS_SIZE, BackhaulEnv, FailureCause
from .neural import AdamState, QNetwork, adam_update, copy_weights, init_weights

log = logging.getLogger(__name__)

INPUT_SIZE = OBS_SIZE + N_ACTIONS
_ONE_HOT = np.eye(N_ACTIONS)


@dataclass
class AgentConfig:
    learning_rate: float = 1e-3
    gamma: float = 0.99
    epsilon: float = 0.99
    epsilon_decay: float = 0.01
    batch_size: int = 64
    buffer_size: int = 20000
    target_sync: int = 4
    epsilon_floor: float = 0.01
    hidden: tuple[int, ...] = (80,)
    seed: int = 0
    # False: the transition closing an interval is a bootstrap cut
    bootstrap_across_intervals: bool = False

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0.0 <= self.epsilon_floor <= self.epsilon <= 1.0:
            raise ValueError("need 0 <= epsilon_floor <= epsilon <= 1")
        if self.batch_size < 1 or self.buffer_size < self.batch_size or self.target_sync < 1:
            raise ValueError("need 1 <= batch_size <= buffer_size and target_sync >= 1")

    @property
    def layer_sizes(self) -> list[int]:
        return [INPUT_SIZE, *self.hidden, 1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class Experience:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest experience is overwritten first."""

    def __init__(self, capacity: int, obs_size: int = OBS_SIZE):
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_size))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, obs_size))
        self.terminal = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self):
        return self._size

    def add(self, s, a, r, s_next, terminal):
        i = self._next
        self.s[i], self.a[i], self.r[i] = s, a, r
        self.s_next[i], self.terminal[i] = s_next, terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample_indices(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if m > self._size:
            raise ValueError(f"cannot draw {m} distinct samples from {self._size}")
        return rng.choice(self._size, size=m, replace=False)

    def __getitem__(self, i) -> Experience:
        return Experience(self.s[i], int(self.a[i]), float(self.r[i]), self.s_next[i],
                          bool(self.terminal[i]))


def q_table(net: QNetwork, observations) -> np.ndarray:
    """Q-values of every action for each observation row, shape (B, 8)."""
    obs = np.atleast_2d(observations)
    b = obs.shape[0]
    x = np.empty((b * N_ACTIONS, INPUT_SIZE))
    x[:, :OBS_SIZE] = np.repeat(obs, N_ACTIONS, axis=0)
    x[:, OBS_SIZE:] = np.tile(_ONE_HOT, (b, 1))
    return net.forward(x).reshape(b, N_ACTIONS)


def q_values(net: QNetwork, observation) -> np.ndarray:
    observation = np.asarray(observation, dtype=np.float64)
    if observation.shape != (OBS_SIZE,):
        raise ValueError(f"observation must have {OBS_SIZE} elements")
    return q_table(net, observation)[0]


def select_action(net: QNetwork, observation, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(q_values(net, observation)))


def compute_target(exp: Experience, online: QNetwork, target: QNetwork, gamma: float) -> float:
    if exp.terminal:
        return float(exp.r)
    a_next = int(np.argmax(q_values(online, exp.s_next)))
    return float(exp.r + gamma * q_values(target, exp.s_next)[a_next])


def compute_targets(r, s_next, terminal, online: QNetwork, target: QNetwork, gamma: float):
    """Batched double-Q targets (same rule as ``compute_target``)."""
    a_next = np.argmax(q_table(online, s_next), axis=1)
    q_next = q_table(target, s_next)[np.arange(len(a_next)), a_next]
    return np.where(terminal, r, r + gamma * q_next)


def encode(observations, actions) -> np.ndarray:
    obs = np.atleast_2d(observations)
    return np.hstack([obs, _ONE_HOT[np.asarray(actions).reshape(-1)]])


class DDQNAgent:
    def __init__(self, config: AgentConfig):
        self.config = config
        self.rng = np.random.default_rng([config.seed, 0])
        self.online = init_weights(config.layer_sizes, np.random.default_rng([config.seed, 1]))
        self.target = self.online.copy()
        self.adam = AdamState.for_network(self.online)
        self.buffer = ReplayBuffer(config.buffer_size)
        self.epsilon = config.epsilon
        self.timesteps = 0

    def act(self, observation, greedy: bool = False) -> int:
        return select_action(self.online, observation, 0.0 if greedy else self.epsilon, self.rng)

    def train_step(self, s, a, r, s_next, terminal, tick: bool = True) -> float | None:
        """Store one transition and learn from a minibatch.

        A timestep is one traffic interval, i.e. one placement per slice;
        ``tick`` marks the transition that closes it.  Target sync and
        epsilon decay count timesteps, not individual placements.  The
        ledger is rebuilt at every interval, so the next interval's value
        is the same whatever action closed this one; unless
        ``bootstrap_across_intervals`` is set, the target stops there.
        Returns the minibatch loss, or None while the buffer is warming up.
        """
        cfg = self.config
        cut = terminal or (tick and not cfg.bootstrap_across_intervals)
        self.buffer.add(s, a, r, s_next, cut)
        loss = None
        if len(self.buffer) >= cfg.batch_size:
            idx = self.buffer.sample_indices(cfg.batch_size, self.rng)
            buf = self.buffer
            y = compute_targets(buf.r[idx], buf.s_next[idx], buf.terminal[idx],
                                self.online, self.target, cfg.gamma)
            loss, grads = self.online.backward(encode(buf.s[idx], buf.a[idx]), y)
            adam_update(self.online, self.adam, grads, cfg.learning_rate)
        if tick:
            self.timesteps += 1
            if self.timesteps % cfg.target_sync == 0:
                copy_weights(self.online, self.target)
            self.epsilon = max(cfg.epsilon_floor, self.epsilon * (1.0 - cfg.epsilon_decay))
        return loss


@dataclass
class EpisodeStats:
    episode: int
    reward: int
    moving_avg: float
    epsilon: float
    loss_mean: float
    failures: dict[str, int]
    failures_by_slice: dict[int, int]
    # actions[sid][a] = times action a was chosen for slice sid
    actions: dict[int, list[int]]


@dataclass
class TrainingResult:
    net: QNetwork
    agent: DDQNAgent
    trace: list[EpisodeStats]
    converged: bool
    optimum: int
    target_reward: float
    episodes: int = field(init=False)

    def __post_init__(self):
        self.episodes = len(self.trace)

    @property
    def rewards(self) -> list[int]:
        return [e.reward for e in self.trace]


def moving_average(values, window: int = 10) -> float:
    tail = values[-window:]
    return float(np.mean(tail)) if tail else 0.0


def run_episode(env: BackhaulEnv, agent: DDQNAgent, episode: int, recent: list[int],
                part: str = "train", window: int = 10, steps: list | None = None) -> EpisodeStats:
    obs = env.reset(part)
    sids = [s.sid for s in env.scenario.slices]
    failures = {c.value: 0 for c in FailureCause if c is not FailureCause.NONE}
    by_slice = {sid: 0 for sid in sids}
    actions = {sid: [0] * N_ACTIONS for sid in sids}
    total, losses = 0, []
    for n in range(env.episode_length):
        a = agent.act(obs)
        out = env.step(a)
        loss = agent.train_step(obs, a, out.reward, out.observation, out.terminal,
                                tick=out.interval_end)
        if loss is not None:
            losses.append(loss)
        actions[out.sid][a] += 1
        if steps is not None:
            steps.append((episode, StepRecord(n, out.t, out.sid, a, out.reward,
                                              out.failure_cause.value, out.dl_latency_ms,
                                              out.ul_latency_ms)))
        if not out.reward:
            failures[out.failure_cause.value] += 1
            by_slice[out.sid] += 1
        total += out.reward
        obs = out.observation
    recent.append(total)
    return EpisodeStats(episode, total, moving_average(recent, window), agent.epsilon,
                        float(np.mean(losses)) if losses else math.nan,
                        failures, by_slice, actions)


def run_training(env: BackhaulEnv, config: AgentConfig, threshold: float = 0.97,
                 episode_cap: int = 500, optimum: int | None = None, window: int = 10,
                 callback=None, steps: list | None = None) -> TrainingResult:
    """Train until the ``window``-episode moving average reaches
    ``threshold * optimum`` or ``episode_cap`` episodes have run.

    Pass a list as ``steps`` to collect ``(episode, StepRecord)`` pairs."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    if optimum is None:
        optimum = env.max_episode_reward("train")
    goal = threshold * optimum
    agent = DDQNAgent(config)
    trace: list[EpisodeStats] = []
    rewards: list[int] = []
    converged = False
    for episode in range(1, episode_cap + 1):
        stats = run_episode(env, agent, episode, rewards, window=window, steps=steps)
        trace.append(stats)
        if callback is not None:
            callback(stats)
        log.debug("episode %d reward %d avg %.1f eps %.3f", episode, stats.reward,
                  stats.moving_avg, stats.epsilon)
        if len(rewards) >= window and stats.moving_avg >= goal:
            converged = True
            break
    return TrainingResult(agent.online, agent, trace, converged, optimum, goal)


@dataclass
class StepRecord:
    step: int
    t: int
    sid: int
    action: int
    reward: int
    failure_cause: str
    dl_latency_ms: float
    ul_latency_ms: float


@dataclass
class Evaluation:
    total: int
    trace: list[StepRecord]


def evaluate(net: QNetwork, env: BackhaulEnv, split_part: str) -> Evaluation:
    """One greedy pass over a split; no exploration and no learning."""
    obs = env.reset(split_part)
    trace, total, step = [], 0, 0
    while not env.done:
        a = int(np.argmax(q_values(net, obs)))
        out = env.step(a)
        trace.append(StepRecord(step, out.t, out.sid, a, out.reward, out.failure_cause.value,
                                out.dl_latency_ms, out.ul_latency_ms))
        total += out.reward
        step += 1
        obs = out.observation
    return Evaluation(total, trace)
