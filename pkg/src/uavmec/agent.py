"""Self-contained DQN (dense Q-network, replay, target net) and baselines.

The network is plain numpy: rectifier hidden layers, linear output head,
stochastic gradient descent with a global-norm gradient clip. Keeping the
optimizer this simple lets every gradient be checked against central finite
differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .environment import MecEnvironment, STAY

# Fraction tuples (x_uav, x_cloud, w_uav, w_cloud) for the fixed baselines:
# the UAV-heavy policy pushes work to the (centrally parked) UAV, the
# cloud-heavy policy pushes it through to the cloud.
UAV_HEAVY_FRACS = (0.6, 0.3, 0.6, 0.3)
CLOUD_HEAVY_FRACS = (0.6, 0.6, 0.3, 0.6)

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    discount: float = 0.95
    learning_rate: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 10000
    target_sync_period: int = 200
    eps_start: float = 1.0
    eps_end: float = 0.05
    episodes: int = 200
    grad_clip: float = 10.0
    hidden_sizes: tuple = (64, 64)
    reward_scale: float = 1e5

    @classmethod
    def from_sim_config(cls, cfg: SimConfig) -> "TrainConfig":
        return cls(discount=cfg.discount, learning_rate=cfg.learning_rate,
                   batch_size=cfg.batch_size,
                   buffer_capacity=cfg.buffer_capacity,
                   target_sync_period=cfg.target_sync_period,
                   eps_start=cfg.eps_start, eps_end=cfg.eps_end,
                   episodes=cfg.episodes, grad_clip=cfg.grad_clip,
                   hidden_sizes=tuple(cfg.hidden_sizes),
                   reward_scale=cfg.reward_scale)


class QNetwork:
    """Dense rectifier network mapping observations to per-action values."""

    def __init__(self, input_size, hidden_sizes, output_size, rng=None):
        rng = rng if rng is not None else np.random.default_rng()
        sizes = [input_size] + list(hidden_sizes) + [output_size]
        self.sizes = sizes
        self.weights = []
        self.biases = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            scale = math.sqrt(2.0 / fan_in)
            w = rng.standard_normal((fan_in, fan_out)) * scale
            if i == len(sizes) - 2:
                # Zero output head: untried actions start at Q = 0 instead of
                # random optimistic values, which matters for wide catalogs.
                w = np.zeros((fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def input_size(self) -> int:
        return self.sizes[0]

    @property
    def output_size(self) -> int:
        return self.sizes[-1]

    def parameters(self):
        return self.weights + self.biases

    def copy(self) -> "QNetwork":
        other = QNetwork.__new__(QNetwork)
        other.sizes = list(self.sizes)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def forward_cached(self, x: np.ndarray):
        """Batched forward pass keeping post-activation layers for backprop."""
        activations = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            activations.append(h)
        return h, activations


def forward(net: QNetwork, obs: np.ndarray) -> np.ndarray:
    """Action values for one observation or a batch of observations."""
    x = np.atleast_2d(np.asarray(obs, dtype=float))
    if x.shape[1] != net.input_size:
        raise ValueError(f"observation width {x.shape[1]} does not match "
                         f"network input size {net.input_size}")
    out, _ = net.forward_cached(x)
    return out[0] if np.ndim(obs) == 1 else out


def _q_values_single(net: QNetwork, obs: np.ndarray) -> np.ndarray:
    """Forward pass for one observation without batching overhead."""
    h = obs
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if i < last:
            np.maximum(h, 0.0, out=h)
    return h


def select_action(net: QNetwork, obs: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy over the catalog; argmax ties break to the lowest index."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(net.output_size))
    if obs.shape[0] != net.input_size:
        raise ValueError(f"observation width {obs.shape[0]} does not match "
                         f"network input size {net.input_size}")
    return int(np.argmax(_q_values_single(net, np.asarray(obs, dtype=float))))


def sync_target(net: QNetwork, target_net: QNetwork) -> None:
    """Overwrite the target parameters with an exact copy of the online ones."""
    for tw, w in zip(target_net.weights, net.weights):
        tw[...] = w
    for tb, b in zip(target_net.biases, net.biases):
        tb[...] = b


class ReplayBuffer:
    """Uniform-sampling ring buffer of flat transitions."""

    def __init__(self, capacity: int, obs_size: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_size))
        self.next_obs = np.zeros((capacity, obs_size))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._ptr = 0

    def push(self, obs, action, reward, next_obs, done) -> None:
        i = self._ptr
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = done
        self._ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int):
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return (self.obs[idx], self.actions[idx], self.rewards[idx],
                self.next_obs[idx], self.dones[idx])


def train_step(net: QNetwork, target_net: QNetwork, batch,
               config: TrainConfig) -> float:
    """One TD update: targets from the frozen net, MSE loss, clipped SGD.

    Returns the pre-update loss; a non-finite loss raises before any weight
    is touched.
    """
    obs, actions, rewards, next_obs, dones = batch
    n = len(actions)
    next_q, _ = target_net.forward_cached(next_obs)
    targets = rewards + config.discount * np.max(next_q, axis=1) * (~dones)

    # Forward through the hidden stack; only the chosen outputs are needed.
    num_layers = len(net.weights)
    acts = [obs]
    h = obs
    for i in range(num_layers - 1):
        h = np.maximum(h @ net.weights[i] + net.biases[i], 0.0)
        acts.append(h)
    w_out, b_out = net.weights[-1], net.biases[-1]
    w_cols = w_out[:, actions]                      # (hidden, n)
    q_sa = np.einsum("nh,hn->n", h, w_cols) + b_out[actions]
    err = q_sa - targets
    loss = float(np.mean(err ** 2))
    if not math.isfinite(loss):
        raise RuntimeError(f"non-finite TD loss {loss}; training diverged")

    # Backprop: the loss touches only the chosen action's output unit, so
    # the output-layer gradient lives on the selected columns alone and is
    # kept in compact form (one column per distinct action in the batch).
    dq = 2.0 * err / n                              # (n,)
    uniq, inverse = np.unique(actions, return_inverse=True)
    gw_out = np.zeros((w_out.shape[0], len(uniq)))
    np.add.at(gw_out.T, inverse, dq[:, None] * h)
    gb_out = np.zeros(len(uniq))
    np.add.at(gb_out, inverse, dq)
    grads_w = [None] * (num_layers - 1)
    grads_b = [None] * (num_layers - 1)
    delta = (dq[:, None] * w_cols.T) * (h > 0.0)    # into the last hidden layer
    for i in range(num_layers - 2, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (acts[i] > 0.0)

    norm_sq = float(np.sum(gw_out * gw_out)) + float(np.sum(gb_out * gb_out))
    norm_sq += sum(float(np.sum(g * g)) for g in grads_w + grads_b)
    norm = math.sqrt(norm_sq)
    scale = config.grad_clip / norm if norm > config.grad_clip else 1.0
    lr = config.learning_rate
    w_out[:, uniq] -= lr * scale * gw_out
    b_out[uniq] -= lr * scale * gb_out
    for w, g in zip(net.weights[:-1], grads_w):
        w -= lr * scale * g
    for b, g in zip(net.biases[:-1], grads_b):
        b -= lr * scale * g
    return loss


def td_loss(net: QNetwork, target_net: QNetwork, batch,
            config: TrainConfig) -> float:
    """Loss of train_step without the parameter update (finite-difference aid)."""
    obs, actions, rewards, next_obs, dones = batch
    next_q, _ = target_net.forward_cached(next_obs)
    targets = rewards + config.discount * np.max(next_q, axis=1) * (~dones)
    out, _ = net.forward_cached(obs)
    q_sa = out[np.arange(len(actions)), actions]
    return float(np.mean((q_sa - targets) ** 2))


# -- policies ---------------------------------------------------------------

@dataclass
class Policy:
    """Maps observations to catalog indices; kind selects the strategy."""
    kind: str
    n_actions: int
    net: QNetwork = None
    fixed_index: int = None

    def __post_init__(self):
        if self.kind not in ("dqn", "random", "uav_heavy", "cloud_heavy"):
            raise ValueError(f"unknown policy kind {self.kind!r}")


def _fixed_catalog_index(env: MecEnvironment, fracs: tuple) -> int:
    target = tuple(fracs for _ in range(env.config.num_devices))
    for i, a in enumerate(env.catalog):
        if a.device_fractions == target and a.move == STAY:
            return i
    raise ValueError(f"fraction tuple {fracs} not present in the catalog")


def make_policy(kind: str, env: MecEnvironment, net: QNetwork = None) -> Policy:
    n = len(env.catalog)
    if kind == "dqn":
        if net is None:
            raise ValueError("dqn policy requires a trained network")
        return Policy(kind=kind, n_actions=n, net=net)
    if kind == "uav_heavy":
        return Policy(kind=kind, n_actions=n,
                      fixed_index=_fixed_catalog_index(env, UAV_HEAVY_FRACS))
    if kind == "cloud_heavy":
        return Policy(kind=kind, n_actions=n,
                      fixed_index=_fixed_catalog_index(env, CLOUD_HEAVY_FRACS))
    return Policy(kind=kind, n_actions=n)


def baseline_action(policy: Policy, obs: np.ndarray,
                    rng: np.random.Generator) -> int:
    """Action choice for any policy kind (greedy for dqn)."""
    if policy.kind == "dqn":
        return select_action(policy.net, obs, 0.0, rng)
    if policy.kind == "random":
        return int(rng.integers(policy.n_actions))
    return policy.fixed_index


def normalize_observation(obs: np.ndarray, config: SimConfig) -> np.ndarray:
    """Scale queue levels into [0, 1]; appended UAV coordinates already are."""
    out = np.asarray(obs, dtype=float).copy()
    nq = 3 * config.num_devices
    out[..., :nq] /= config.queue_levels - 1
    return out


# -- training loop ----------------------------------------------------------

@dataclass
class TrainResult:
    net: QNetwork
    episode_rewards: list
    losses: list = field(default_factory=list)


def train(make_env, tconfig: TrainConfig, seed=0) -> TrainResult:
    """Full DQN training run; fully reproducible from the seed."""
    ss = np.random.SeedSequence(seed)
    init_ss, action_ss, sample_ss, env_root = ss.spawn(4)
    env = make_env()
    cfg = env.config
    rng_actions = np.random.default_rng(action_ss)
    rng_sample = np.random.default_rng(sample_ss)

    obs_size = len(normalize_observation(env.observe(), cfg))
    net = QNetwork(obs_size, tconfig.hidden_sizes, len(env.catalog),
                   rng=np.random.default_rng(init_ss))
    target_net = net.copy()
    buffer = ReplayBuffer(tconfig.buffer_capacity, obs_size)

    total_steps = tconfig.episodes * cfg.n_intervals
    decay_horizon = max(1, total_steps // 2)
    episode_seeds = env_root.spawn(tconfig.episodes)

    episode_rewards = []
    losses = []
    t = 0
    for ep in range(tconfig.episodes):
        obs = normalize_observation(env.reset(episode_seeds[ep]), cfg)
        ep_reward = 0.0
        while not env.done:
            frac = min(1.0, t / decay_horizon)
            eps = tconfig.eps_start + (tconfig.eps_end - tconfig.eps_start) * frac
            action = select_action(net, obs, eps, rng_actions)
            tr = env.step(action)
            next_obs = normalize_observation(tr.next_observation, cfg)
            buffer.push(obs, action, tr.reward / tconfig.reward_scale,
                        next_obs, tr.done)
            obs = next_obs
            ep_reward += tr.reward
            if buffer.size >= tconfig.batch_size:
                batch = buffer.sample(rng_sample, tconfig.batch_size)
                losses.append(train_step(net, target_net, batch, tconfig))
            t += 1
            if t % tconfig.target_sync_period == 0:
                sync_target(net, target_net)
        episode_rewards.append(ep_reward)
    return TrainResult(net=net, episode_rewards=episode_rewards, losses=losses)


# -- checkpoints ------------------------------------------------------------

def save_checkpoint(net: QNetwork, path: str) -> None:
    """Serialize layer sizes and parameters; round-trips bit-exactly."""
    arrays = {"version": np.array(CHECKPOINT_VERSION),
              "sizes": np.array(net.sizes, dtype=np.int64)}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path: str) -> QNetwork:
    with open(path, "rb") as fh:
        data = np.load(fh)
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        sizes = [int(s) for s in data["sizes"]]
        net = QNetwork.__new__(QNetwork)
        net.sizes = sizes
        net.weights = [data[f"w{i}"] for i in range(len(sizes) - 1)]
        net.biases = [data[f"b{i}"] for i in range(len(sizes) - 1)]
    return net
