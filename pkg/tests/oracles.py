"""Independent reference computations shared by the unit and acceptance tests."""

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def simplex_grid(n, steps=100):
    """All rho vectors on the unit simplex with the given resolution.

    Satisfaction is non-decreasing in every share, so an optimum over
    sum(rho) <= 1 always has a representative with sum(rho) = 1.
    """
    rows = []
    for cuts in itertools.combinations(range(steps + n - 1), n - 1):
        parts, prev = [], -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + n - 2 - prev)
        rows.append(parts)
    return np.array(rows, dtype=float) / steps


def grid_optimum(C, R, steps=100):
    """Best sum(log S) for one AP serving every user, over the share grid."""
    grid = simplex_grid(len(C), steps)
    with np.errstate(divide="ignore"):
        vals = np.log(np.minimum(grid * (C / R), 1.0)).sum(axis=1)
    k = int(np.argmax(vals))
    return float(vals[k]), grid[k]


def single_ap_instance(rng, regime):
    n = int(rng.integers(1, 5))
    C = rng.uniform(1e6, 5e8, n)
    if regime == "large":
        R = C * rng.uniform(1.0, 5.0, n)
    else:
        share = rng.dirichlet(np.ones(n)) * rng.uniform(0.05, 1.0)
        R = C * share
    return C, R


def brute_force_pf(C, R, mode_share):
    """Every assignment of users to APs, scored with ``mode_share(chi)``."""
    n_aps, n_users = C.shape
    best = -np.inf
    for labels in itertools.product(range(n_aps), repeat=n_users):
        chi = np.zeros((n_aps, n_users))
        chi[list(labels), range(n_users)] = 1
        best = max(best, mode_share(chi))
    return best


def hand_equal_share_objective(chi, C, R):
    counts = chi.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(chi > 0, 1.0 / np.maximum(counts, 1), 0.0)
    served = (rho * C * chi).sum(axis=0)
    with np.errstate(divide="ignore"):
        return float(np.log(np.minimum(served / R, 1.0)).sum())


def random_tcnn_case(seed, n_aps=3, max_users=4, batch=8, use_bn=True):
    """A randomly initialised small network with perturbed BN parameters and a labelled batch."""
    from hlwnet.tcnn.model import Tcnn, TcnnShape

    rng = np.random.default_rng(seed)
    shape = TcnnShape(n_aps, max_users, use_bn=use_bn)
    while True:
        model = Tcnn.init(shape, rng)
        for name in ("b1", "b2", "b3", "b4", "h2", "h3"):
            model.params[name] += rng.normal(0, 0.3, model.params[name].shape)
        for name in ("g2", "g3"):
            model.params[name] *= rng.uniform(0.5, 1.5, model.params[name].shape)
        xt = rng.uniform(0, 1, (batch, shape.user_width))
        xc = rng.uniform(0, 1, (batch, shape.condition_width))
        y = np.eye(n_aps)[rng.integers(0, n_aps, batch)]
        # central differences are meaningless across a ReLU kink
        if relu_margin(model, xc) > KINK_MARGIN:
            return model, xt, xc, y


KINK_MARGIN = 1e-4


def relu_margin(model, xc):
    """Smallest |pre-activation| over both ReLU layers in a train-mode pass."""
    saved = {k: v.copy() for k, v in model.buffers.items()}
    p, m = model.params, model
    z2 = m._bn(xc @ p["W2"] + p["b2"], 2, True, None)
    z3 = m._bn(np.maximum(z2, 0) @ p["W3"] + p["b3"], 3, True, None)
    for k, v in saved.items():
        model.buffers[k][...] = v
    return float(min(np.abs(z2).min(), np.abs(z3).min()))


def finite_difference_errors(model, xt, xc, y, h=1e-5):
    """Per-tensor error ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`` (L2 norms).

    The numeric gradient uses central differences of the train-mode loss;
    running BN statistics are restored after every probe so they never leak.
    """
    from hlwnet.tcnn.model import mse_loss

    saved = {k: v.copy() for k, v in model.buffers.items()}

    def loss():
        p, _ = model.forward(xt, xc, train=True)
        for k, v in saved.items():
            model.buffers[k][...] = v
        return mse_loss(p, y)

    prob, cache = model.forward(xt, xc, train=True)
    for k, v in saved.items():
        model.buffers[k][...] = v
    analytic = model.backward(cache, y)
    errors = {}
    for name, w in model.params.items():
        num = np.zeros_like(w)
        flat, out = w.reshape(-1), num.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = loss()
            flat[i] = keep - h
            down = loss()
            flat[i] = keep
            out[i] = (up - down) / (2 * h)
        a = analytic[name]
        errors[name] = float(np.linalg.norm(a - num) / max(np.linalg.norm(a), np.linalg.norm(num), 1e-6))
    return errors
