"""Counterfactual advantage estimation for hidden per-episode confounders.

A recurrent classifier reads the trajectory so far and produces the belief
p(U=1 | trajectory); the policy and value function receive that belief as an
extra input, which deconfounds credit assignment: the value conditioned on
the inferred episode context no longer averages over incompatible episodes.

Three training modes share one loop:
  inferred -- the full algorithm (classifier trained online, belief fed in)
  true     -- oracle upper bound (reads the privileged confounder)
  frozen   -- ablation (belief pinned at 0.5; collapses to standard PPO
              with one constant extra input)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .envs.core import Environment, InfoAudit
from .nn import (
    GruSpec,
    Params,
    gru_forward_batch,
    gru_init_hidden,
    gru_step,
    init_gru_params,
    mlp_forward,
)
from .optim import AdamState, adam_step, clip_grad_norm, zero_grads
from .ppo import ActorCritic, IterationMetrics, PpoConfig, gae, _finite_or_raise
from .rng import Rng

CONDITION_MODES = ("inferred", "true", "frozen")
PRIOR_BELIEF = 0.5


class ConfounderClassifier:
    """2-layer GRU over per-step (observation, one-hot action, reward)
    features with a sigmoid head; the empty trajectory maps to the prior."""

    def __init__(self, obs_dim: int, n_actions: int, rng: Rng,
                 hidden_size: int = 32, num_layers: int = 2):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.spec = GruSpec(obs_dim + n_actions + 1, hidden_size, num_layers)
        self.params: Params = init_gru_params(self.spec, rng.split(0))
        gen = rng.split(1).generator()
        bound = 1.0 / np.sqrt(hidden_size)
        self.params["head_w"] = T.Tensor(gen.uniform(-bound, bound, size=(hidden_size, 1)),
                                         requires_grad=True)
        self.params["head_b"] = T.Tensor(np.zeros(1), requires_grad=True)

    def features(self, obs: np.ndarray, action: int, reward: float) -> np.ndarray:
        onehot = np.zeros(self.n_actions)
        onehot[action] = 1.0
        return np.concatenate([obs, onehot, [reward]])

    def init_hidden(self) -> list[np.ndarray]:
        return gru_init_hidden(self.spec)

    def advance(self, hidden: list[np.ndarray], feat: np.ndarray) -> list[np.ndarray]:
        return gru_step(self.spec, self.params, hidden, feat)

    def belief_from_hidden(self, hidden: list[np.ndarray]) -> float:
        with T.no_grad():
            logit = hidden[-1] @ self.params["head_w"].data + self.params["head_b"].data
        return float(1.0 / (1.0 + np.exp(-logit[0])))

    def logits_batch(self, sequences: np.ndarray) -> T.Tensor:
        final_hidden = gru_forward_batch(self.spec, self.params, sequences)
        return T.matmul(final_hidden, self.params["head_w"]) + self.params["head_b"]

    def logits_per_prefix(self, sequences: np.ndarray) -> list[T.Tensor]:
        """Head output after every step: one (batch, 1) logit tensor per
        prefix length. Supervising all prefixes keeps the beliefs the policy
        consumes mid-episode calibrated, not just the final one."""
        seqs = np.asarray(sequences, dtype=np.float64)
        batch, time, _ = seqs.shape
        from .nn import _gru_cell
        hs = [T.Tensor(np.zeros((batch, self.spec.hidden_size)))
              for _ in range(self.spec.num_layers)]
        logits = []
        for t in range(time):
            inp: T.Tensor = T.Tensor(seqs[:, t, :])
            for layer in range(self.spec.num_layers):
                hs[layer] = _gru_cell(self.params, layer, inp, hs[layer])
                inp = hs[layer]
            logits.append(T.matmul(hs[-1], self.params["head_w"]) + self.params["head_b"])
        return logits

    def predict_sequences(self, sequences: np.ndarray) -> np.ndarray:
        with T.no_grad():
            logits = self.logits_batch(sequences)
        return 1.0 / (1.0 + np.exp(-logits.data.reshape(-1)))


def infer_confounder(classifier: ConfounderClassifier,
                     trajectory_prefix: list[tuple[np.ndarray, int, float]]) -> float:
    """p(U=1) from a prefix of (observation, action, reward) steps.

    The empty prefix is the defined prior 0.5; otherwise the belief comes
    from the final hidden state and is deterministic given parameters.
    """
    if not trajectory_prefix:
        return PRIOR_BELIEF
    hidden = classifier.init_hidden()
    for obs, action, reward in trajectory_prefix:
        hidden = classifier.advance(hidden, classifier.features(obs, action, reward))
    return classifier.belief_from_hidden(hidden)


def counterfactual_advantage(q_estimate: float, v_conditioned: float) -> float:
    """Belief-conditioned advantage: how much better this action is than the
    conditioned baseline."""
    return q_estimate - v_conditioned


def causal_advantages(rewards, values_at_final_belief, dones,
                      gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """GAE where every value evaluation receives the episode's final belief."""
    return gae(rewards, values_at_final_belief, dones, gamma, lam)


@dataclass
class _Episode:
    obs: np.ndarray            # (T, obs_dim)
    actions: np.ndarray        # (T,)
    rewards: np.ndarray        # (T,)
    logp: np.ndarray           # (T,)
    beliefs: np.ndarray        # (T,) belief used at each sampling step
    final_belief: float
    true_u: int
    score: float | None


class CaePpoTrainer:
    """Joint loop: belief-conditioned PPO plus online BCE classifier training."""

    def __init__(self, env_factory, cfg: PpoConfig, seed: int,
                 condition: str = "inferred",
                 classifier_lr: float = 5e-3,
                 classifier_batch: int = 16,
                 audit: InfoAudit | None = None):
        if condition not in CONDITION_MODES:
            raise ValueError(f"condition must be one of {CONDITION_MODES}")
        self.cfg = cfg
        self.condition = condition
        self.env: Environment = env_factory()
        self.audit = audit
        rng = Rng(seed)
        self.ac = ActorCritic(self.env.observation_dim + 1, self.env.num_actions,
                              cfg.hidden_sizes, rng.split(10))
        self.classifier = ConfounderClassifier(self.env.observation_dim,
                                               self.env.num_actions, rng.split(30))
        self.adam_pi = AdamState(cfg.learning_rate)
        self.adam_v = AdamState(cfg.learning_rate)
        self.adam_clf = AdamState(classifier_lr)
        self.classifier_batch = classifier_batch
        self._act_gen = rng.split(11).generator()
        self._shuffle_gen = rng.split(12).generator()
        self._seed_gen = rng.split(13).generator()
        self.metrics: list[IterationMetrics] = []
        self.classifier_accuracy: list[float] = []

    # -- belief plumbing ---------------------------------------------------

    def _episode_start_belief(self, reset_info) -> float:
        if self.condition == "true":
            if self.audit is not None:
                with self.audit.phase("action"):
                    return float(self.audit.wrap(reset_info)["true_U"])
            return float(reset_info["true_U"])
        return PRIOR_BELIEF

    def _net_input(self, obs: np.ndarray, belief: float) -> np.ndarray:
        return np.concatenate([obs, [belief]])

    # -- main loop ----------------------------------------------------------

    def train(self) -> list[IterationMetrics]:
        steps_done = 0
        while steps_done < self.cfg.total_steps:
            episodes, used = self._collect(min(self.cfg.rollout_steps,
                                               self.cfg.total_steps - steps_done))
            steps_done += used
            if self.condition == "inferred":
                self._update_classifier(episodes)
            pi_loss, v_loss = self._update_ppo(episodes)
            scores = [e.score for e in episodes if e.score is not None]
            acc = float(np.mean([(e.final_belief > 0.5) == e.true_u for e in episodes]))
            self.classifier_accuracy.append(acc)
            self.metrics.append(IterationMetrics(
                step=steps_done,
                mean_return=float(np.mean([e.rewards.sum() for e in episodes])),
                mean_score=float(np.mean(scores)) if scores else None,
                episodes=len(episodes),
                policy_loss=pi_loss,
                value_loss=v_loss,
            ))
        return self.metrics

    def _collect(self, budget: int) -> tuple[list[_Episode], int]:
        episodes: list[_Episode] = []
        used = 0
        while used < budget:
            ep = self._run_episode()
            episodes.append(ep)
            used += len(ep.actions)
        return episodes, used

    def _run_episode(self) -> _Episode:
        env = self.env
        obs = env.reset(int(self._seed_gen.integers(2**62)))
        reset_info = env.reset_info() if hasattr(env, "reset_info") else {}
        belief = self._episode_start_belief(reset_info)
        hidden = self.classifier.init_hidden()

        obs_list, act_list, rew_list, logp_list, belief_list = [], [], [], [], []
        info = {}
        for _ in range(self.cfg.max_episode_steps):
            action, logp = self.ac.act(self._net_input(obs, belief), self._act_gen)
            step = env.step(action)
            obs_list.append(obs)
            act_list.append(action)
            rew_list.append(step.reward)
            logp_list.append(logp)
            belief_list.append(belief)
            hidden = self.classifier.advance(
                hidden, self.classifier.features(obs, action, step.reward))
            if self.condition == "inferred":
                belief = self.classifier.belief_from_hidden(hidden)
            obs = step.observation
            info = step.info
            if step.done:
                break

        if self.condition == "inferred":
            final_belief = self.classifier.belief_from_hidden(hidden)
        elif self.condition == "true":
            final_belief = belief
        else:
            final_belief = PRIOR_BELIEF

        wrapped = self.audit.wrap(info) if self.audit is not None else info
        if self.audit is not None:
            with self.audit.phase("loss"):
                true_u = int(wrapped["true_U"]) if "true_U" in info else 0
        else:
            true_u = int(info.get("true_U", 0))
        score = info.get("score")
        return _Episode(
            obs=np.asarray(obs_list),
            actions=np.asarray(act_list, dtype=np.intp),
            rewards=np.asarray(rew_list),
            logp=np.asarray(logp_list),
            beliefs=np.asarray(belief_list),
            final_belief=final_belief,
            true_u=true_u,
            score=score,
        )

    # -- updates -------------------------------------------------------------

    def _update_classifier(self, episodes: list[_Episode]):
        by_len: dict[int, list[_Episode]] = {}
        for ep in episodes:
            by_len.setdefault(len(ep.actions), []).append(ep)
        order = self._shuffle_gen.permutation(sorted(by_len))
        for length in order:
            group = by_len[int(length)]
            seqs = np.asarray([
                [self.classifier.features(ep.obs[t], ep.actions[t], ep.rewards[t])
                 for t in range(len(ep.actions))]
                for ep in group
            ])
            labels = np.asarray([ep.true_u for ep in group], dtype=np.float64)
            for lo in range(0, len(group), self.classifier_batch):
                idx = slice(lo, lo + self.classifier_batch)
                self._classifier_step(seqs[idx], labels[idx])

    def _classifier_step(self, seqs: np.ndarray, labels: np.ndarray):
        per_prefix = self.classifier.logits_per_prefix(seqs)
        y = T.Tensor(labels[:, None])
        one = T.Tensor(1.0)
        total = None
        for logits in per_prefix:
            p = T.clamp(T.sigmoid(logits), 1e-7, 1.0 - 1e-7)
            term = -T.tmean(y * T.log(p) + (one - y) * T.log(one - p))
            total = term if total is None else total + term
        bce = total * T.Tensor(1.0 / len(per_prefix))
        _finite_or_raise(float(bce.data), "classifier BCE")
        zero_grads(self.classifier.params)
        T.backward(bce)
        clip_grad_norm(self.classifier.params, 1.0)
        adam_step(self.adam_clf, self.classifier.params)

    def _update_ppo(self, episodes: list[_Episode]) -> tuple[float, float]:
        cfg = self.cfg
        pol_in, val_in, actions, logp_old, adv_all, ret_all = [], [], [], [], [], []
        for ep in episodes:
            n = len(ep.actions)
            val_obs = np.column_stack([ep.obs, np.full(n, ep.final_belief)])
            values = self.ac.values(val_obs)
            dones = np.zeros(n, dtype=bool)
            dones[-1] = True
            adv, rets = causal_advantages(ep.rewards, np.append(values, 0.0), dones,
                                          cfg.gamma, cfg.gae_lambda)
            pol_in.append(np.column_stack([ep.obs, ep.beliefs]))
            val_in.append(val_obs)
            actions.append(ep.actions)
            logp_old.append(ep.logp)
            adv_all.append(adv)
            ret_all.append(rets)

        pol_in = np.concatenate(pol_in)
        val_in = np.concatenate(val_in)
        actions = np.concatenate(actions)
        logp_old = np.concatenate(logp_old)
        adv = np.concatenate(adv_all)
        rets = np.concatenate(ret_all)
        if cfg.advantage_norm:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)

        n = len(adv)
        last_pi = last_v = 0.0
        for _ in range(cfg.epochs_per_iter):
            order = self._shuffle_gen.permutation(n)
            for lo in range(0, n, cfg.batch_size):
                idx = order[lo:lo + cfg.batch_size]
                last_pi, last_v = self._minibatch(pol_in[idx], val_in[idx], actions[idx],
                                                  logp_old[idx], adv[idx], rets[idx])
        return last_pi, last_v

    def _minibatch(self, pol_obs, val_obs, actions, logp_old, adv, rets):
        cfg = self.cfg
        logits = mlp_forward(self.ac.policy_spec, self.ac.policy_params, pol_obs)
        logp_all = T.log_softmax(logits)
        logp = T.gather_rows(logp_all, actions)
        ratio = T.exp(logp - T.Tensor(logp_old))
        adv_t = T.Tensor(adv)
        surrogate = T.minimum(
            ratio * adv_t,
            T.clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv_t)
        policy_loss = -T.tmean(surrogate)
        probs = T.softmax(logits)
        entropy = -T.tmean(T.tsum(probs * logp_all, axis=1))

        v_out = mlp_forward(self.ac.value_spec, self.ac.value_params, val_obs)
        value_loss = T.tmean(T.square(v_out - T.Tensor(rets[:, None])))

        total = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy
        _finite_or_raise(float(total.data), "CAE-PPO loss")
        zero_grads(self.ac.policy_params)
        zero_grads(self.ac.value_params)
        T.backward(total)
        clip_grad_norm(self.ac.policy_params, 0.5)
        clip_grad_norm(self.ac.value_params, 0.5)
        adam_step(self.adam_pi, self.ac.policy_params)
        adam_step(self.adam_v, self.ac.value_params)
        return float(policy_loss.data), float(value_loss.data)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, env_factory, n_episodes: int, seed: int) -> dict:
        """Greedy evaluation; returns mean score, classifier accuracy, and
        per-prefix-length accuracy over the evaluation episodes."""
        env = env_factory()
        seed_gen = Rng(seed).split(21).generator()
        scores, returns = [], []
        full_correct = []
        prefix_correct: dict[int, list[bool]] = {}
        for _ in range(n_episodes):
            obs = env.reset(int(seed_gen.integers(2**62)))
            reset_info = env.reset_info() if hasattr(env, "reset_info") else {}
            belief = self._episode_start_belief(reset_info)
            hidden = self.classifier.init_hidden()
            total = 0.0
            info = {}
            for t in range(self.cfg.max_episode_steps):
                action = int(np.argmax(self.ac.action_probs(self._net_input(obs, belief))))
                step = env.step(action)
                total += step.reward
                hidden = self.classifier.advance(
                    hidden, self.classifier.features(obs, action, step.reward))
                if self.condition == "inferred":
                    belief = self.classifier.belief_from_hidden(hidden)
                if self.condition == "inferred" or self.condition == "frozen":
                    pred = self.classifier.belief_from_hidden(hidden)
                    prefix_correct.setdefault(t + 1, []).append(
                        (pred > 0.5) == bool(step.info.get("true_U", 0)))
                obs = step.observation
                info = step.info
                if step.done:
                    break
            returns.append(total)
            if "score" in info:
                scores.append(info["score"])
            if "true_U" in info:
                final_pred = self.classifier.belief_from_hidden(hidden)
                full_correct.append((final_pred > 0.5) == bool(info["true_U"]))
        return {
            "mean_score": float(np.mean(scores)) if scores else None,
            "mean_return": float(np.mean(returns)),
            "classifier_accuracy": float(np.mean(full_correct)) if full_correct else None,
            "prefix_accuracy": {k: float(np.mean(v)) for k, v in sorted(prefix_correct.items())},
        }


def train_cae_ppo(env_factory, cfg: PpoConfig, seed: int,
                  audit: InfoAudit | None = None) -> tuple[CaePpoTrainer, list[IterationMetrics]]:
    trainer = CaePpoTrainer(env_factory, cfg, seed, condition="inferred", audit=audit)
    return trainer, trainer.train()


def train_oracle_ppo(env_factory, cfg: PpoConfig, seed: int,
                     audit: InfoAudit | None = None) -> tuple[CaePpoTrainer, list[IterationMetrics]]:
    trainer = CaePpoTrainer(env_factory, cfg, seed, condition="true", audit=audit)
    return trainer, trainer.train()
