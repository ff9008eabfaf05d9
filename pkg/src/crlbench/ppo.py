"""PPO with generalized advantage estimation, plus the masked variant that
ignores spurious observation dimensions by construction, and a minimal
advantage actor-critic used to collect dynamics-model transitions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as T
from .envs.core import Environment
from .nn import MlpSpec, Params, init_mlp_params, mlp_forward
from .optim import AdamState, adam_step, clip_grad_norm, zero_grads
from .rng import Rng


@dataclass(frozen=True)
class PpoConfig:
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    batch_size: int = 64
    epochs_per_iter: int = 4
    rollout_steps: int = 2048
    total_steps: int = 50_000
    learning_rate: float = 3e-4
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    hidden_sizes: tuple[int, ...] = (64, 64)
    advantage_norm: bool = True
    max_episode_steps: int = 500

    def __post_init__(self):
        if not (0.0 < self.clip_epsilon < 1.0):
            raise ValueError("clip_epsilon must be in (0, 1)")
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gamma and gae_lambda must be in [0, 1]")


@dataclass(frozen=True)
class FeatureMask:
    kept: tuple[int, ...]

    def apply(self, obs: np.ndarray) -> np.ndarray:
        return np.asarray(obs)[..., list(self.kept)]


CORE_FEATURES = FeatureMask((0, 1, 2, 3))


def gae(rewards, values, dones, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Backward GAE recursion. values must carry one bootstrap entry beyond
    the rewards; returns (advantages, returns)."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    n = len(rewards)
    if len(values) != n + 1 or len(dones) != n:
        raise ValueError("expected len(values) == len(rewards)+1 == len(dones)+1")
    adv = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        cont = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * values[t + 1] * cont - values[t]
        running = delta + gamma * lam * cont * running
        adv[t] = running
    return adv, adv + values[:-1]


def ppo_clip_loss(ratios, advantages, clip_epsilon: float) -> float:
    """Mean clipped surrogate: -E[min(r A, clip(r) A)]."""
    r = np.asarray(ratios, dtype=np.float64)
    a = np.asarray(advantages, dtype=np.float64)
    if r.shape != a.shape:
        raise ValueError("ratios and advantages must be parallel")
    clipped = np.clip(r, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    return float(-np.mean(np.minimum(r * a, clipped * a)))


class ActorCritic:
    """Categorical policy and value MLPs over a shared observation layout."""

    def __init__(self, obs_dim: int, n_actions: int, hidden: tuple[int, ...], rng: Rng):
        self.n_actions = n_actions
        self.policy_spec = MlpSpec((obs_dim, *hidden, n_actions), "tanh", "identity")
        self.value_spec = MlpSpec((obs_dim, *hidden, 1), "tanh", "identity")
        self.policy_params: Params = init_mlp_params(self.policy_spec, rng.split(0))
        self.value_params: Params = init_mlp_params(self.value_spec, rng.split(1))

    def action_probs(self, obs: np.ndarray) -> np.ndarray:
        with T.no_grad():
            logits = mlp_forward(self.policy_spec, self.policy_params, obs)
            return T.softmax(logits).data

    def values(self, obs: np.ndarray) -> np.ndarray:
        with T.no_grad():
            out = mlp_forward(self.value_spec, self.value_params, obs)
        return out.data.reshape(-1) if out.data.ndim > 1 else out.data

    def act(self, obs: np.ndarray, gen: np.random.Generator) -> tuple[int, float]:
        probs = self.action_probs(obs)
        action = int(gen.choice(self.n_actions, p=probs / probs.sum()))
        return action, float(np.log(probs[action]))

    def greedy(self, obs: np.ndarray) -> int:
        return int(np.argmax(self.action_probs(obs)))


@dataclass
class IterationMetrics:
    step: int
    mean_return: float
    mean_score: float | None
    episodes: int
    policy_loss: float
    value_loss: float


def _finite_or_raise(value: float, what: str):
    if not np.isfinite(value):
        raise FloatingPointError(f"{what} diverged (non-finite)")


class PpoTrainer:
    """Collect-then-update PPO. With a feature mask, both networks see only
    the kept observation dimensions, in collection and updates alike."""

    def __init__(self, env_factory, cfg: PpoConfig, seed: int,
                 mask: FeatureMask | None = None):
        self.cfg = cfg
        self.env: Environment = env_factory()
        self.mask = mask
        if mask is not None and max(mask.kept) >= self.env.observation_dim:
            raise ValueError("feature mask exceeds observation dimension")
        obs_dim = len(mask.kept) if mask else self.env.observation_dim
        rng = Rng(seed)
        self.ac = ActorCritic(obs_dim, self.env.num_actions, cfg.hidden_sizes, rng.split(10))
        self.adam_pi = AdamState(cfg.learning_rate)
        self.adam_v = AdamState(cfg.learning_rate)
        self._act_gen = rng.split(11).generator()
        self._shuffle_gen = rng.split(12).generator()
        self._seed_gen = rng.split(13).generator()
        self.metrics: list[IterationMetrics] = []
        self._obs = None
        self._ep_steps = 0
        self._ep_return = 0.0

    def _net_obs(self, obs: np.ndarray) -> np.ndarray:
        return self.mask.apply(obs) if self.mask else obs

    def _reset_env(self) -> np.ndarray:
        self._ep_steps = 0
        self._ep_return = 0.0
        return self.env.reset(int(self._seed_gen.integers(2**62)))

    def train(self) -> list[IterationMetrics]:
        steps_done = 0
        self._obs = self._reset_env()
        while steps_done < self.cfg.total_steps:
            budget = min(self.cfg.rollout_steps, self.cfg.total_steps - steps_done)
            batch, ep_returns, ep_scores = self._collect(budget)
            steps_done += budget
            pi_loss, v_loss = self._update(batch)
            self.metrics.append(IterationMetrics(
                step=steps_done,
                mean_return=float(np.mean(ep_returns)) if ep_returns else float("nan"),
                mean_score=float(np.mean(ep_scores)) if ep_scores else None,
                episodes=len(ep_returns),
                policy_loss=pi_loss,
                value_loss=v_loss,
            ))
        return self.metrics

    def _collect(self, budget: int):
        obs_buf, act_buf, logp_buf, rew_buf, done_buf = [], [], [], [], []
        ep_returns, ep_scores = [], []
        for _ in range(budget):
            net_obs = self._net_obs(self._obs)
            action, logp = self.ac.act(net_obs, self._act_gen)
            step = self.env.step(action)
            self._ep_steps += 1
            self._ep_return += step.reward
            truncated = self._ep_steps >= self.cfg.max_episode_steps
            done = step.done or truncated
            obs_buf.append(net_obs)
            act_buf.append(action)
            logp_buf.append(logp)
            rew_buf.append(step.reward)
            done_buf.append(done)
            if done:
                ep_returns.append(self._ep_return)
                if "score" in step.info:
                    ep_scores.append(step.info["score"])
                self._obs = self._reset_env()
            else:
                self._obs = step.observation
        obs_arr = np.asarray(obs_buf)
        values = self.ac.values(obs_arr)
        bootstrap = 0.0 if done_buf[-1] else float(self.ac.values(self._net_obs(self._obs)[None, :])[0])
        values_ext = np.append(values, bootstrap)
        batch = dict(
            obs=obs_arr,
            actions=np.asarray(act_buf, dtype=np.intp),
            logp_old=np.asarray(logp_buf),
            rewards=np.asarray(rew_buf),
            dones=np.asarray(done_buf, dtype=bool),
            values=values_ext,
        )
        return batch, ep_returns, ep_scores

    def _update(self, batch) -> tuple[float, float]:
        cfg = self.cfg
        adv, rets = gae(batch["rewards"], batch["values"], batch["dones"],
                        cfg.gamma, cfg.gae_lambda)
        if cfg.advantage_norm:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        n = len(adv)
        last_pi = last_v = 0.0
        for _ in range(cfg.epochs_per_iter):
            order = self._shuffle_gen.permutation(n)
            for lo in range(0, n, cfg.batch_size):
                idx = order[lo:lo + cfg.batch_size]
                last_pi, last_v = self._minibatch_step(
                    batch["obs"][idx], batch["actions"][idx],
                    batch["logp_old"][idx], adv[idx], rets[idx])
        return last_pi, last_v

    def _minibatch_step(self, obs, actions, logp_old, adv, rets) -> tuple[float, float]:
        cfg = self.cfg
        logits = mlp_forward(self.ac.policy_spec, self.ac.policy_params, obs)
        logp_all = T.log_softmax(logits)
        logp = T.gather_rows(logp_all, actions)
        ratio = T.exp(logp - T.Tensor(logp_old))
        adv_t = T.Tensor(adv)
        surrogate = T.minimum(ratio * adv_t,
                              T.clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv_t)
        policy_loss = -T.tmean(surrogate)
        probs = T.softmax(logits)
        entropy = -T.tmean(T.tsum(probs * logp_all, axis=1))

        v_out = mlp_forward(self.ac.value_spec, self.ac.value_params, obs)
        value_loss = T.tmean(T.square(v_out - T.Tensor(rets[:, None])))

        total = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy
        _finite_or_raise(float(total.data), "PPO loss")
        zero_grads(self.ac.policy_params)
        zero_grads(self.ac.value_params)
        T.backward(total)
        clip_grad_norm(self.ac.policy_params, 0.5)
        clip_grad_norm(self.ac.value_params, 0.5)
        adam_step(self.adam_pi, self.ac.policy_params)
        adam_step(self.adam_v, self.ac.value_params)
        return float(policy_loss.data), float(value_loss.data)


def train_standard_ppo(env_factory, cfg: PpoConfig, seed: int) -> tuple[PpoTrainer, list[IterationMetrics]]:
    trainer = PpoTrainer(env_factory, cfg, seed)
    return trainer, trainer.train()


def train_causal_ppo(env_factory, cfg: PpoConfig, seed: int,
                     mask: FeatureMask = CORE_FEATURES) -> tuple[PpoTrainer, list[IterationMetrics]]:
    trainer = PpoTrainer(env_factory, cfg, seed, mask=mask)
    return trainer, trainer.train()


def evaluate_policy(env_factory, act_fn, n_episodes: int, seed: int,
                    max_steps: int = 500) -> tuple[float, float | None, list[float]]:
    """Greedy-style evaluation: act_fn(obs) -> action. Returns
    (mean return, mean score or None, per-episode returns)."""
    env = env_factory()
    seed_gen = Rng(seed).split(20).generator()
    returns, scores = [], []
    for _ in range(n_episodes):
        obs = env.reset(int(seed_gen.integers(2**62)))
        total = 0.0
        for _ in range(max_steps):
            step = env.step(act_fn(obs))
            total += step.reward
            obs = step.observation
            if step.done:
                if "score" in step.info:
                    scores.append(step.info["score"])
                break
        returns.append(total)
    mean_score = float(np.mean(scores)) if scores else None
    return float(np.mean(returns)), mean_score, returns


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    done: bool


def train_a2c(env_factory, cfg: PpoConfig, seed: int,
              n_step: int = 32) -> tuple[ActorCritic, list[Transition], list[IterationMetrics]]:
    """Single-step advantage actor-critic; returns every visited transition
    for downstream dynamics-model training."""
    env: Environment = env_factory()
    rng = Rng(seed)
    ac = ActorCritic(env.observation_dim, env.num_actions, cfg.hidden_sizes, rng.split(10))
    adam_pi = AdamState(cfg.learning_rate)
    adam_v = AdamState(cfg.learning_rate)
    act_gen = rng.split(11).generator()
    seed_gen = rng.split(13).generator()

    transitions: list[Transition] = []
    metrics: list[IterationMetrics] = []
    obs = env.reset(int(seed_gen.integers(2**62)))
    ep_ret, ep_steps = 0.0, 0
    ep_returns: list[float] = []
    buf: list[Transition] = []
    for step_i in range(cfg.total_steps):
        action, _ = ac.act(obs, act_gen)
        step = env.step(action)
        ep_ret += step.reward
        ep_steps += 1
        done = step.done or ep_steps >= cfg.max_episode_steps
        tr = Transition(obs, action, step.reward, step.observation, done)
        transitions.append(tr)
        buf.append(tr)
        obs = step.observation
        if done:
            ep_returns.append(ep_ret)
            obs = env.reset(int(seed_gen.integers(2**62)))
            ep_ret, ep_steps = 0.0, 0
        if len(buf) >= n_step:
            pi_l, v_l = _a2c_update(ac, adam_pi, adam_v, cfg, buf)
            buf = []
            if (step_i + 1) % cfg.rollout_steps == 0 or step_i + 1 == cfg.total_steps:
                metrics.append(IterationMetrics(
                    step=step_i + 1,
                    mean_return=float(np.mean(ep_returns[-20:])) if ep_returns else float("nan"),
                    mean_score=None,
                    episodes=len(ep_returns),
                    policy_loss=pi_l,
                    value_loss=v_l,
                ))
    return ac, transitions, metrics


def _a2c_update(ac: ActorCritic, adam_pi: AdamState, adam_v: AdamState,
                cfg: PpoConfig, buf: list[Transition]) -> tuple[float, float]:
    obs = np.asarray([t.obs for t in buf])
    next_obs = np.asarray([t.next_obs for t in buf])
    actions = np.asarray([t.action for t in buf], dtype=np.intp)
    rewards = np.asarray([t.reward for t in buf])
    cont = np.asarray([0.0 if t.done else 1.0 for t in buf])

    v_next = ac.values(next_obs)
    targets = rewards + cfg.gamma * v_next * cont
    v_now = ac.values(obs)
    adv = targets - v_now

    logits = mlp_forward(ac.policy_spec, ac.policy_params, obs)
    logp_all = T.log_softmax(logits)
    logp = T.gather_rows(logp_all, actions)
    probs = T.softmax(logits)
    entropy = -T.tmean(T.tsum(probs * logp_all, axis=1))
    policy_loss = -T.tmean(logp * T.Tensor(adv)) - cfg.entropy_coef * entropy

    v_out = mlp_forward(ac.value_spec, ac.value_params, obs)
    value_loss = T.tmean(T.square(v_out - T.Tensor(targets[:, None])))

    total = policy_loss + cfg.value_coef * value_loss
    _finite_or_raise(float(total.data), "A2C loss")
    zero_grads(ac.policy_params)
    zero_grads(ac.value_params)
    T.backward(total)
    clip_grad_norm(ac.policy_params, 0.5)
    clip_grad_norm(ac.value_params, 0.5)
    adam_step(adam_pi, ac.policy_params)
    adam_step(adam_v, ac.value_params)
    return float(policy_loss.data), float(value_loss.data)
