"""MLP and GRU models over the autodiff tensors.

Parameters live in flat string-keyed dicts so the optimizer and checkpoint
code can treat every model uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .rng import Rng

Params = dict[str, T.Tensor]

_ACTIVATIONS = {"tanh": T.tanh, "relu": T.relu}
_OUTPUT_ACTIVATIONS = {"identity": lambda x: x, "sigmoid": T.sigmoid, "softmax": T.softmax}


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple[int, ...]
    activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("MlpSpec needs at least input and output sizes")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("all layer sizes must be >= 1")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.output_activation not in _OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")


@dataclass(frozen=True)
class GruSpec:
    input_size: int
    hidden_size: int
    num_layers: int = 1

    def __post_init__(self):
        if self.hidden_size < 1 or self.input_size < 1 or self.num_layers < 1:
            raise ValueError("GruSpec sizes must be >= 1")


def init_mlp_params(spec: MlpSpec, rng: Rng) -> Params:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    gen = rng.generator()
    params: Params = {}
    for i, (fan_in, fan_out) in enumerate(zip(spec.layer_sizes[:-1], spec.layer_sizes[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params[f"w{i}"] = T.Tensor(gen.uniform(-bound, bound, size=(fan_in, fan_out)),
                                   requires_grad=True)
        params[f"b{i}"] = T.Tensor(np.zeros(fan_out), requires_grad=True)
    return params


def mlp_forward(spec: MlpSpec, params: Params, x) -> T.Tensor:
    """Forward pass; x is (batch, in) or (in,). Records the graph if enabled."""
    h = x if isinstance(x, T.Tensor) else T.Tensor(x)
    if h.data.shape[-1] != spec.layer_sizes[0]:
        raise ValueError(
            f"input last dim {h.data.shape[-1]} != first layer size {spec.layer_sizes[0]}"
        )
    act = _ACTIVATIONS[spec.activation]
    n_layers = len(spec.layer_sizes) - 1
    for i in range(n_layers):
        h = T.matmul(h, params[f"w{i}"]) + params[f"b{i}"]
        if i < n_layers - 1:
            h = act(h)
    return _OUTPUT_ACTIVATIONS[spec.output_activation](h)


_GRU_GATES = ("ir", "iz", "in", "hr", "hz", "hn")


def init_gru_params(spec: GruSpec, rng: Rng) -> Params:
    """Uniform +-1/sqrt(hidden) weights and biases."""
    gen = rng.generator()
    bound = 1.0 / np.sqrt(spec.hidden_size)
    params: Params = {}
    for layer in range(spec.num_layers):
        in_size = spec.input_size if layer == 0 else spec.hidden_size
        for gate in _GRU_GATES:
            rows = in_size if gate.startswith("i") else spec.hidden_size
            params[f"l{layer}_w_{gate}"] = T.Tensor(
                gen.uniform(-bound, bound, size=(rows, spec.hidden_size)),
                requires_grad=True,
            )
            params[f"l{layer}_b_{gate}"] = T.Tensor(
                gen.uniform(-bound, bound, size=spec.hidden_size),
                requires_grad=True,
            )
    return params


def _gru_cell(params: Params, layer: int, x: T.Tensor, h: T.Tensor) -> T.Tensor:
    def lin(gate: str, inp: T.Tensor) -> T.Tensor:
        return T.matmul(inp, params[f"l{layer}_w_{gate}"]) + params[f"l{layer}_b_{gate}"]

    r = T.sigmoid(lin("ir", x) + lin("hr", h))
    z = T.sigmoid(lin("iz", x) + lin("hz", h))
    n = T.tanh(lin("in", x) + r * lin("hn", h))
    return (T.Tensor(1.0) - z) * n + z * h


def gru_forward(spec: GruSpec, params: Params, sequence) -> T.Tensor:
    """Run a (time, input_size) sequence; returns the final top-layer hidden state."""
    seq = sequence.data if isinstance(sequence, T.Tensor) else np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise ValueError(f"sequence must be (time, input_size) with time >= 1, got {seq.shape}")
    if seq.shape[1] != spec.input_size:
        raise ValueError(f"sequence feature dim {seq.shape[1]} != input_size {spec.input_size}")
    out = gru_forward_batch(spec, params, seq[None, :, :])
    # squeeze the batch axis without losing the graph
    final = T.tsum(out, axis=0)
    return final


def gru_forward_batch(spec: GruSpec, params: Params, sequences) -> T.Tensor:
    """Run same-length sequences (batch, time, input_size) -> (batch, hidden)."""
    seqs = np.asarray(sequences, dtype=np.float64)
    if seqs.ndim != 3:
        raise ValueError(f"expected (batch, time, input) array, got {seqs.shape}")
    batch, time, _ = seqs.shape
    hs = [T.Tensor(np.zeros((batch, spec.hidden_size))) for _ in range(spec.num_layers)]
    for t in range(time):
        inp: T.Tensor = T.Tensor(seqs[:, t, :])
        for layer in range(spec.num_layers):
            hs[layer] = _gru_cell(params, layer, inp, hs[layer])
            inp = hs[layer]
    return hs[-1]


def gru_step(spec: GruSpec, params: Params, hidden: list[np.ndarray], x: np.ndarray) -> list[np.ndarray]:
    """Advance all layers one step without recording a graph (O(1) inference)."""
    with T.no_grad():
        inp = T.Tensor(x[None, :])
        out = []
        for layer in range(spec.num_layers):
            h = _gru_cell(params, layer, inp, T.Tensor(hidden[layer][None, :]))
            out.append(h.data[0])
            inp = h
    return out


def gru_init_hidden(spec: GruSpec) -> list[np.ndarray]:
    return [np.zeros(spec.hidden_size) for _ in range(spec.num_layers)]
