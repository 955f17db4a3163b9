"""Target/condition network with hand-written reverse mode.

Row-vector convention: a batch is ``T x features`` and layers compute
``x @ W + b``.

* target branch:    ``u_t = x_t @ W1 + b1`` (affine only)
* condition branch: ``u_c = relu(bn3(relu(bn2(x_c @ W2 + b2)) @ W3 + b3))``
* combiner:         ``softmax(concat(u_t, u_c) @ W4 + b4)``
"""

from dataclasses import asdict, dataclass

import numpy as np

from ..seeding import as_rng

PARAM_NAMES = ("W1", "b1", "W2", "b2", "g2", "h2", "W3", "b3", "g3", "h3", "W4", "b4")
BUFFER_NAMES = ("rm2", "rv2", "rm3", "rv3")


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TcnnShape:
    n_aps: int
    max_users: int
    target_hidden: int = 6
    cond_hidden1: int = 64
    cond_hidden2: int = 6
    use_bn: bool = True
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def __post_init__(self):
        dims = (self.n_aps, self.max_users, self.target_hidden, self.cond_hidden1, self.cond_hidden2)
        if min(dims) < 1:
            raise ValueError("all dimensions must be positive")
        if self.bn_eps <= 0:
            raise ValueError("BN epsilon must be positive")

    @property
    def user_width(self):
        return self.n_aps + 1

    @property
    def condition_width(self):
        return self.max_users * self.user_width

    @property
    def combiner_in(self):
        return self.target_hidden + self.cond_hidden2

    def tensor_shapes(self):
        a, h1, h2 = self.target_hidden, self.cond_hidden1, self.cond_hidden2
        return {
            "W1": (self.user_width, a), "b1": (a,),
            "W2": (self.condition_width, h1), "b2": (h1,), "g2": (h1,), "h2": (h1,),
            "W3": (h1, h2), "b3": (h2,), "g3": (h2,), "h3": (h2,),
            "W4": (self.combiner_in, self.n_aps), "b4": (self.n_aps,),
            "rm2": (h1,), "rv2": (h1,), "rm3": (h2,), "rv3": (h2,),
        }

    def to_dict(self):
        return asdict(self)


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def mse_loss(p, y):
    """Mean over examples of the squared distance between probabilities and one-hot labels."""
    return float(np.sum((p - y) ** 2) / len(p))


def _kaiming(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Tcnn:
    def __init__(self, shape, params, buffers):
        self.shape = shape
        self.params = params
        self.buffers = buffers
        want = shape.tensor_shapes()
        for name, arr in {**params, **buffers}.items():
            if arr.shape != want[name]:
                raise ShapeMismatchError(f"{name}: {arr.shape} != {want[name]}")

    @classmethod
    def init(cls, shape, rng_seed=None):
        """Uniform fan-in scaled weights, zero biases, BN scale 1 and shift 0."""
        rng = as_rng(rng_seed)
        s = shape.tensor_shapes()
        p = {
            "W1": _kaiming(rng, *s["W1"]),
            "W2": _kaiming(rng, *s["W2"]),
            "W3": _kaiming(rng, *s["W3"]),
            "W4": _kaiming(rng, *s["W4"]),
        }
        for name in ("b1", "b2", "b3", "b4", "h2", "h3"):
            p[name] = np.zeros(s[name])
        p["g2"], p["g3"] = np.ones(s["g2"]), np.ones(s["g3"])
        return cls(shape, {k: p[k] for k in PARAM_NAMES}, _fresh_buffers(shape))

    @classmethod
    def zeros(cls, shape):
        s = shape.tensor_shapes()
        p = {k: np.zeros(s[k]) for k in PARAM_NAMES}
        p["g2"], p["g3"] = np.ones(s["g2"]), np.ones(s["g3"])
        return cls(shape, p, _fresh_buffers(shape))

    def copy(self):
        return Tcnn(self.shape, {k: v.copy() for k, v in self.params.items()},
                    {k: v.copy() for k, v in self.buffers.items()})

    # -- forward -------------------------------------------------------------

    def _bn(self, z, layer, train, cache):
        if not self.shape.use_bn:
            return z
        g, h = self.params[f"g{layer}"], self.params[f"h{layer}"]
        eps = self.shape.bn_eps
        if train:
            n = len(z)
            mean = z.sum(axis=0) / n
            centred = z - mean
            var = np.einsum("ij,ij->j", centred, centred) / n
            mom = self.shape.bn_momentum
            rm, rv = self.buffers[f"rm{layer}"], self.buffers[f"rv{layer}"]
            rm *= 1 - mom
            rm += mom * mean
            rv *= 1 - mom
            rv += mom * var * n / max(n - 1, 1)
        else:
            mean, var = self.buffers[f"rm{layer}"], self.buffers[f"rv{layer}"]
            centred = z - mean
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = centred * inv_std
        if cache is not None:
            cache[f"xhat{layer}"] = xhat
            cache[f"inv_std{layer}"] = inv_std
        return xhat * g + h

    def condition(self, xc, train=False, cache=None):
        p = self.params
        z2 = xc @ p["W2"] + p["b2"]
        a2 = np.maximum(self._bn(z2, 2, train, cache), 0.0)
        z3 = a2 @ p["W3"] + p["b3"]
        uc = np.maximum(self._bn(z3, 3, train, cache), 0.0)
        if cache is not None:
            cache.update(xc=xc, a2=a2, uc=uc)
        return uc

    def logits(self, xt, uc):
        p = self.params
        ut = xt @ p["W1"] + p["b1"]
        return np.hstack([ut, np.broadcast_to(uc, (len(ut), uc.shape[1]))]) @ p["W4"] + p["b4"]

    def forward(self, xt, xc, train=False):
        """Softmax probabilities ``T x n_aps`` and the activation cache."""
        xt = np.atleast_2d(np.asarray(xt, dtype=float))
        xc = np.atleast_2d(np.asarray(xc, dtype=float))
        if xt.shape[1] != self.shape.user_width or xc.shape[1] != self.shape.condition_width:
            raise ShapeMismatchError(
                f"expected target width {self.shape.user_width} and condition width "
                f"{self.shape.condition_width}, got {xt.shape[1]} and {xc.shape[1]}")
        if len(xt) != len(xc):
            raise ShapeMismatchError("target and condition batch sizes differ")
        cache = {"xt": xt}
        uc = self.condition(xc, train, cache)
        ut = xt @ self.params["W1"] + self.params["b1"]
        hcat = np.hstack([ut, uc])
        prob = softmax(hcat @ self.params["W4"] + self.params["b4"])
        cache.update(hcat=hcat, prob=prob)
        return prob, cache

    # -- backward ------------------------------------------------------------

    def _bn_back(self, dy, layer, cache, grads):
        if not self.shape.use_bn:
            return dy
        xhat, inv_std = cache[f"xhat{layer}"], cache[f"inv_std{layer}"]
        grads[f"g{layer}"] = np.sum(dy * xhat, axis=0)
        grads[f"h{layer}"] = np.sum(dy, axis=0)
        dxhat = dy * self.params[f"g{layer}"]
        n = len(dy)
        return inv_std / n * (n * dxhat - dxhat.sum(axis=0) - xhat * np.sum(dxhat * xhat, axis=0))

    def backward(self, cache, y):
        """Gradients of :func:`mse_loss` for a train-mode forward pass."""
        p = self.params
        prob = cache["prob"]
        n = len(prob)
        dp = 2.0 * (prob - y) / n
        dz4 = prob * (dp - np.sum(dp * prob, axis=1, keepdims=True))
        grads = {"W4": cache["hcat"].T @ dz4, "b4": dz4.sum(axis=0)}
        dh = dz4 @ p["W4"].T
        a = self.shape.target_hidden
        dut, duc = dh[:, :a], dh[:, a:]
        grads["W1"] = cache["xt"].T @ dut
        grads["b1"] = dut.sum(axis=0)
        d = duc * (cache["uc"] > 0)
        d = self._bn_back(d, 3, cache, grads)
        grads["W3"] = cache["a2"].T @ d
        grads["b3"] = d.sum(axis=0)
        d = (d @ p["W3"].T) * (cache["a2"] > 0)
        d = self._bn_back(d, 2, cache, grads)
        grads["W2"] = cache["xc"].T @ d
        grads["b2"] = d.sum(axis=0)
        if not self.shape.use_bn:
            for name in ("g2", "h2", "g3", "h3"):
                grads[name] = np.zeros_like(p[name])
        return {k: grads[k] for k in PARAM_NAMES}

    def train_step_loss(self, xt, xc, y):
        prob, cache = self.forward(xt, xc, train=True)
        return mse_loss(prob, y), self.backward(cache, y)


def _fresh_buffers(shape):
    s = shape.tensor_shapes()
    return {"rm2": np.zeros(s["rm2"]), "rv2": np.ones(s["rv2"]),
            "rm3": np.zeros(s["rm3"]), "rv3": np.ones(s["rv3"])}


class Adam:
    """Adam with bias correction."""

    def __init__(self, params, lr=1e-4, beta1=0.95, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def hyper(self):
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}
