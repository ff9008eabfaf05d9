"""Learned cart-pole dynamics model with gradient-based feature attribution,
counterfactual next-state queries, and explanation-stability measurement
against a random-attribution baseline."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as T
from .nn import MlpSpec, Params, init_mlp_params, mlp_forward
from .optim import AdamState, adam_step, zero_grads
from .ppo import Transition
from .rng import Rng

FEATURE_NAMES = ("cart_position", "cart_velocity", "pole_angle", "pole_angular_velocity")


@dataclass(frozen=True)
class DynamicsConfig:
    hidden_sizes: tuple[int, ...] = (128, 128)
    epochs: int = 60
    batch_size: int = 256
    learning_rate: float = 1e-3
    holdout_fraction: float = 0.2


@dataclass
class DynamicsModel:
    """s' = f(s, a) regressor over standardized inputs/outputs."""

    spec: MlpSpec
    params: Params
    in_mean: np.ndarray
    in_std: np.ndarray
    out_mean: np.ndarray
    out_std: np.ndarray
    n_actions: int
    holdout_r: np.ndarray  # per-dimension Pearson r on held-out transitions

    def _encode(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        onehot = np.eye(self.n_actions)[np.asarray(actions, dtype=int)]
        raw = np.column_stack([np.atleast_2d(states), onehot])
        return (raw - self.in_mean) / self.in_std

    def predict(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        x = self._encode(states, actions)
        with T.no_grad():
            out = mlp_forward(self.spec, self.params, x)
        return out.data * self.out_std + self.out_mean

    def input_jacobian(self, state: np.ndarray, action: int) -> np.ndarray:
        """d s'_j / d s_i as a (state_dim, state_dim) matrix in raw units."""
        x = T.Tensor(self._encode(state[None, :], [action])[0], requires_grad=True)
        state_dim = len(state)
        rows = []
        for j in range(state_dim):
            out = mlp_forward(self.spec, self.params, x)
            picked = T.tsum(out * T.Tensor(np.eye(state_dim)[j]))
            x.zero_grad()
            T.backward(picked)
            # chain rule through the affine standardization
            rows.append(x.grad[:state_dim] * self.out_std[j] / self.in_std[:state_dim])
        return np.asarray(rows)


def train_dynamics(transitions: list[Transition], cfg: DynamicsConfig,
                   seed: int, n_actions: int = 2) -> DynamicsModel:
    """Fit the next-state regressor on replay transitions; the held-out split
    is carved off before training and scored as per-dimension Pearson r."""
    states = np.asarray([t.obs for t in transitions])
    actions = np.asarray([t.action for t in transitions], dtype=int)
    targets = np.asarray([t.next_obs for t in transitions])

    rng = Rng(seed)
    order = rng.split(50).generator().permutation(len(states))
    n_hold = max(1, int(len(states) * cfg.holdout_fraction))
    hold, train = order[:n_hold], order[n_hold:]

    onehot = np.eye(n_actions)[actions]
    raw_in = np.column_stack([states, onehot])
    in_mean = raw_in[train].mean(axis=0)
    in_std = raw_in[train].std(axis=0) + 1e-8
    out_mean = targets[train].mean(axis=0)
    out_std = targets[train].std(axis=0) + 1e-8
    x = (raw_in - in_mean) / in_std
    y = (targets - out_mean) / out_std

    state_dim = states.shape[1]
    spec = MlpSpec((x.shape[1], *cfg.hidden_sizes, state_dim), "tanh", "identity")
    params = init_mlp_params(spec, rng.split(51))
    adam = AdamState(cfg.learning_rate)
    shuffle = rng.split(52).generator()
    for _ in range(cfg.epochs):
        perm = shuffle.permutation(len(train))
        for lo in range(0, len(train), cfg.batch_size):
            idx = train[perm[lo:lo + cfg.batch_size]]
            out = mlp_forward(spec, params, x[idx])
            loss = T.tmean(T.square(out - T.Tensor(y[idx])))
            if not np.isfinite(loss.data):
                raise FloatingPointError("dynamics training diverged")
            zero_grads(params)
            T.backward(loss)
            adam_step(adam, params)

    model = DynamicsModel(spec, params, in_mean, in_std, out_mean, out_std,
                          n_actions, holdout_r=np.zeros(state_dim))
    preds = model.predict(states[hold], actions[hold])
    rs = np.array([_pearson(preds[:, j], targets[hold][:, j]) for j in range(state_dim)])
    model.holdout_r = rs
    return model


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt((a * a).sum() * (b * b).sum())
    return float((a * b).sum() / denom) if denom > 0 else 0.0


def feature_importance(model: DynamicsModel, states: np.ndarray) -> np.ndarray:
    """Mean |d s'_j / d s_i| over states, output dims, and both actions,
    max-normalized so the dominant feature scores 1."""
    states = np.atleast_2d(states)
    total = np.zeros(states.shape[1])
    for s in states:
        for a in range(model.n_actions):
            total += np.abs(model.input_jacobian(s, a)).mean(axis=0)
    total /= states.shape[0] * model.n_actions
    peak = total.max()
    if peak <= 0:
        raise ValueError("all-zero jacobian; attribution undefined")
    return total / peak


def counterfactual_next(model: DynamicsModel, state: np.ndarray, action: int) -> np.ndarray:
    """Predicted next state under an alternative action (plain forward pass)."""
    return model.predict(state[None, :], [action])[0]


def stability(model: DynamicsModel, anchor_states: np.ndarray, sigma: float,
              n_perturb: int, seed: int) -> float:
    """Mean over anchors of the per-feature variance of attribution vectors
    across Gaussian-perturbed copies of each anchor."""
    if sigma <= 0 or n_perturb < 2:
        raise ValueError("need sigma > 0 and n_perturb >= 2")
    gen = Rng(seed).split(60).generator()
    anchors = np.atleast_2d(anchor_states)
    variances = []
    for s in anchors:
        noisy = s[None, :] + gen.normal(0.0, sigma, size=(n_perturb, len(s)))
        attrs = np.asarray([feature_importance(model, p[None, :]) for p in noisy])
        variances.append(attrs.var(axis=0, ddof=0).mean())
    return float(np.mean(variances))


def random_baseline(state_dim: int, n_anchors: int, n_perturb: int, seed: int) -> float:
    """Uninformed attributor: an independent uniform draw per perturbed state,
    max-normalized like the real attribution."""
    gen = Rng(seed).split(61).generator()
    variances = []
    for _ in range(n_anchors):
        attrs = gen.uniform(0.0, 1.0, size=(n_perturb, state_dim))
        attrs = attrs / attrs.max(axis=1, keepdims=True)
        variances.append(attrs.var(axis=0, ddof=0).mean())
    return float(np.mean(variances))


def explanation_report(model: DynamicsModel, states: np.ndarray, sigma: float = 0.05,
                       n_perturb: int = 50, n_anchors: int = 20, seed: int = 0,
                       feature_names: tuple[str, ...] = FEATURE_NAMES) -> dict:
    importances = feature_importance(model, states)
    anchors = states[:n_anchors]
    causal_var = stability(model, anchors, sigma, n_perturb, seed)
    random_var = random_baseline(len(feature_names), len(anchors), n_perturb, seed)
    return {
        "feature_names": list(feature_names),
        "importances": importances.tolist(),
        "stability_causal": causal_var,
        "stability_random": random_var,
        "dynamics_r": model.holdout_r.tolist(),
    }


def save_report(path, report: dict):
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True))
