"""Plain fully connected baseline: all slots in, one softmax block per slot out.

``x (M*(N_a+1)) -> relu(bn(x @ W1 + b1)) (64) -> @ W2 + b2 (M*N_a)``, with the
output read as ``M`` independent softmax blocks.  The loss is the per-slot
softmax-MSE averaged over slots and examples.
"""

from dataclasses import dataclass

import numpy as np

from ..dataset import encode_dataset
from ..seeding import as_rng
from .model import Adam, softmax


@dataclass(frozen=True)
class DnnShape:
    n_aps: int
    max_users: int
    hidden: int = 64
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    @property
    def in_width(self):
        return self.max_users * (self.n_aps + 1)


class Dnn:
    def __init__(self, shape, rng_seed=None):
        rng = as_rng(rng_seed)
        self.shape = shape
        h, out = shape.hidden, shape.max_users * shape.n_aps
        self.params = {
            "W1": rng.uniform(-1, 1, (shape.in_width, h)) * np.sqrt(6.0 / shape.in_width),
            "b1": np.zeros(h), "g1": np.ones(h), "h1": np.zeros(h),
            "W2": rng.uniform(-1, 1, (h, out)) * np.sqrt(6.0 / h), "b2": np.zeros(out),
        }
        self.rm, self.rv = np.zeros(h), np.ones(h)

    def forward(self, x, train=False):
        p, s = self.params, self.shape
        z = x @ p["W1"] + p["b1"]
        if train:
            mean, var = z.mean(axis=0), z.var(axis=0)
            n = len(z)
            self.rm = (1 - s.bn_momentum) * self.rm + s.bn_momentum * mean
            self.rv = (1 - s.bn_momentum) * self.rv + s.bn_momentum * var * n / max(n - 1, 1)
        else:
            mean, var = self.rm, self.rv
        inv = 1.0 / np.sqrt(var + s.bn_eps)
        xhat = (z - mean) * inv
        a = np.maximum(xhat * p["g1"] + p["h1"], 0.0)
        logits = (a @ p["W2"] + p["b2"]).reshape(len(x), s.max_users, s.n_aps)
        prob = softmax(logits)
        return prob, {"x": x, "xhat": xhat, "inv": inv, "a": a, "prob": prob}

    def loss_and_grads(self, x, y):
        """``y`` is ``T x M x N_a`` one-hot."""
        prob, c = self.forward(x, train=True)
        T, M, _ = prob.shape
        loss = float(np.sum((prob - y) ** 2) / (T * M))
        dp = 2.0 * (prob - y) / (T * M)
        dz = (prob * (dp - np.sum(dp * prob, axis=2, keepdims=True))).reshape(T, -1)
        p = self.params
        g = {"W2": c["a"].T @ dz, "b2": dz.sum(axis=0)}
        da = (dz @ p["W2"].T) * (c["a"] > 0)
        g["g1"] = np.sum(da * c["xhat"], axis=0)
        g["h1"] = da.sum(axis=0)
        dxhat = da * p["g1"]
        dzz = c["inv"] / T * (T * dxhat - dxhat.sum(axis=0)
                              - c["xhat"] * np.sum(dxhat * c["xhat"], axis=0))
        g["W1"] = c["x"].T @ dzz
        g["b1"] = dzz.sum(axis=0)
        return loss, g


def train_dnn(train_set, test_set, epochs=30, batch_size=32, lr=1e-3, seed=0):
    """Returns ``(model, [(epoch, train_loss, test_accuracy), ...])``."""
    rng = as_rng(seed)
    shape = DnnShape(train_set.n_aps, train_set.max_users)
    model = Dnn(shape, rng)
    opt = Adam(model.params, lr=lr)
    enc = encode_dataset(train_set, train_set.spec)
    enc_test = encode_dataset(test_set, train_set.spec)
    x = enc.features.reshape(len(enc), -1)
    y = np.eye(shape.n_aps)[enc.slot_labels]
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(x))
        losses = []
        for lo in range(0, len(x), batch_size):
            idx = order[lo:lo + batch_size]
            if len(idx) < 2:
                continue
            loss, g = model.loss_and_grads(x[idx], y[idx])
            opt.step(model.params, g)
            losses.append(loss)
        history.append((epoch, float(np.mean(losses)), dnn_accuracy(model, enc_test)))
    return model, history


def dnn_accuracy(model, encoded):
    prob, _ = model.forward(encoded.features.reshape(len(encoded), -1), train=False)
    pred = prob.argmax(axis=2)
    hits = total = 0
    for k, n in enumerate(encoded.n_users):
        hits += int(np.count_nonzero(pred[k, :n] == encoded.slot_labels[k, :n]))
        total += int(n)
    return hits / total if total else float("nan")
