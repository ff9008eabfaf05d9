"""Parameter checkpoints: versioned JSON maps of name -> shape + flat values."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import tensor as T
from .nn import Params

FORMAT_VERSION = "crlbench-params-v1"


def save_params(path, params: Params):
    payload = {
        "format": FORMAT_VERSION,
        "params": {
            name: {"shape": list(p.data.shape), "data": p.data.ravel().tolist()}
            for name, p in sorted(params.items())
        },
    }
    Path(path).write_text(json.dumps(payload))


def load_params(path) -> Params:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {payload.get('format')!r}")
    params: Params = {}
    for name, entry in payload["params"].items():
        data = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        params[name] = T.Tensor(data, requires_grad=True)
    return params
