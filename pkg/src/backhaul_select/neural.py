"""Fully-connected Q-network in plain numpy: forward, backprop, Adam.

Hidden layers use ReLU, the single output neuron is linear.  Weights are
stored as ``(fan_in, fan_out)`` matrices so a batch ``X`` of shape
``(B, fan_in)`` maps to ``X @ W + b``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "backhaul-select/qnetwork"
CHECKPOINT_VERSION = 1


class QNetwork:
    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: fan-in does not match previous layer")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> list[np.ndarray]:
        """Parameter arrays interleaved as [W0, b0, W1, b1, ...]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.layer_sizes[0] or x.ndim not in (1, 2):
            raise ValueError(f"expected input width {self.layer_sizes[0]}, got shape {x.shape}")
        return x

    def forward(self, x):
        """Q-value of one input vector (float) or of each row of a batch."""
        x = self._check_input(x)
        h = np.atleast_2d(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        q = h[:, 0]
        return float(q[0]) if x.ndim == 1 else q

    __call__ = forward

    def backward(self, inputs, targets):
        """Mean-squared error over the batch and its exact gradient.

        Returns ``(loss, grads)`` with ``grads`` laid out like ``params()``.
        The ReLU subgradient at 0 is taken as 0.
        """
        x = np.atleast_2d(self._check_input(inputs))
        y = np.asarray(targets, dtype=np.float64).reshape(-1)
        if y.shape[0] != x.shape[0] or x.shape[0] == 0:
            raise ValueError("need one finite target per input row, batch non-empty")
        if not np.all(np.isfinite(y)):
            raise ValueError("targets must be finite")
        acts, pre = [x], []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            pre.append(z)
            acts.append(np.maximum(z, 0.0) if i < last else z)
        err = y - acts[-1][:, 0]
        loss = float(np.mean(err * err))
        delta = (-2.0 / len(y)) * err[:, None]
        grads = [None] * (2 * len(self.weights))
        for i in range(last, -1, -1):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0.0)
        return loss, grads

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QNetwork":
        sizes = d["layer_sizes"]
        weights = [np.array(w, dtype=np.float64).reshape(sizes[i], sizes[i + 1])
                   for i, w in enumerate(d["weights"])]
        return cls(weights, [np.array(b, dtype=np.float64) for b in d["biases"]])


def init_weights(layer_sizes, rng_seed) -> QNetwork:
    """He-uniform init: W ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"invalid layer sizes {layer_sizes}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return QNetwork(weights, biases)


def clone_into_target(online: QNetwork) -> QNetwork:
    return online.copy()


def copy_weights(src: QNetwork, dst: QNetwork) -> None:
    for a, b in zip(dst.params(), src.params()):
        a[...] = b


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, net: QNetwork, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in net.params()],
                   [np.zeros_like(p) for p in net.params()], **kw)

    def to_dict(self) -> dict:
        return {"step": self.step, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "m": [a.ravel().tolist() for a in self.m],
                "v": [a.ravel().tolist() for a in self.v]}

    @classmethod
    def from_dict(cls, d: dict, net: QNetwork) -> "AdamState":
        shapes = [p.shape for p in net.params()]
        return cls([np.array(a).reshape(s) for a, s in zip(d["m"], shapes)],
                   [np.array(a).reshape(s) for a, s in zip(d["v"], shapes)],
                   d["step"], d["beta1"], d["beta2"], d["eps"])


def adam_update(net: QNetwork, state: AdamState, grads, learning_rate: float = 1e-3) -> QNetwork:
    """One bias-corrected Adam descent step, applied in place."""
    params = net.params()
    if len(grads) != len(params):
        raise ValueError("gradient list does not match parameters")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return net


def save_checkpoint(path, net: QNetwork, adam: AdamState | None = None, extra: dict | None = None):
    """JSON checkpoint; Python's float repr makes the round trip bit-exact."""
    doc = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, **net.to_dict()}
    if adam is not None:
        doc["adam"] = adam.to_dict()
    if extra:
        doc["meta"] = extra
    Path(path).write_text(json.dumps(doc) + "\n")


def load_checkpoint(path) -> tuple[QNetwork, AdamState | None]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a Q-network checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    net = QNetwork.from_dict(doc)
    adam = AdamState.from_dict(doc["adam"], net) if "adam" in doc else None
    return net, adam
