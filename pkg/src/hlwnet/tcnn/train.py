"""Training loop, evaluation and snapshot inference."""

import csv
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..allocation import chi_from_labels
from ..dataset import encode_dataset, encode_instance, make_batch
from ..seeding import as_rng
from .model import Adam, Tcnn, TcnnShape, mse_loss

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 1e-4
    beta1: float = 0.95
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    all_targets: bool = False  # every mapped slot of every example, instead of one random slot

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 2:
            raise ValueError("need epochs >= 1 and batch_size >= 2")


@dataclass
class History:
    epoch: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)

    def append(self, epoch, train_loss, test_loss, accuracy):
        self.epoch.append(epoch)
        self.train_loss.append(train_loss)
        self.test_loss.append(test_loss)
        self.accuracy.append(accuracy)

    def write_csv(self, f):
        w = csv.writer(f)
        w.writerow(["epoch", "train_loss", "test_loss", "accuracy"])
        for row in zip(self.epoch, self.train_loss, self.test_loss, self.accuracy):
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


@dataclass
class TrainResult:
    model: Tcnn
    history: History
    config: TrainConfig
    clamped: int = 0

    @property
    def epoch(self):
        return self.history.epoch[-1] if self.history.epoch else 0


def _own_slot_pairs(encoded):
    """(sample, slot) index arrays covering each original user's own slot."""
    ks = np.repeat(np.arange(len(encoded)), encoded.n_users)
    js = np.concatenate([np.arange(n) for n in encoded.n_users]) if len(encoded) else np.array([], int)
    return ks, js


def evaluate_encoded(model, encoded, n_aps, chunk=4096):
    """Eval-mode loss and accuracy over every original user of every sample."""
    if len(encoded) == 0:
        return float("nan"), float("nan")
    uc = model.condition(encoded.features.reshape(len(encoded), -1), train=False)
    ks, js = _own_slot_pairs(encoded)
    total, hits = 0.0, 0
    for lo in range(0, len(ks), chunk):
        k, j = ks[lo:lo + chunk], js[lo:lo + chunk]
        prob = _softmax_logits(model, encoded.features[k, j], uc[k])
        lab = encoded.slot_labels[k, j]
        total += float(np.sum((prob - np.eye(n_aps)[lab]) ** 2))
        hits += int(np.count_nonzero(np.argmax(prob, axis=1) == lab))
    return total / len(ks), hits / len(ks)


def _softmax_logits(model, xt, uc):
    from .model import softmax

    return softmax(model.logits(xt, uc))


def train(train_set, test_set, config=TrainConfig(), shape=None, model=None):
    """Minibatch Adam on the softmax-MSE loss.

    Each epoch reshuffles the examples and draws one target slot per example
    uniformly from its ``M`` mapped slots (or uses all slots with
    ``config.all_targets``).  Test metrics use the test split encoded with the
    training normalisation.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    shape = shape or TcnnShape(train_set.n_aps, train_set.max_users)
    rng = as_rng(config.seed)
    model = model or Tcnn.init(shape, rng)
    opt = Adam(model.params, config.lr, config.beta1, config.beta2, config.eps)
    enc_train = encode_dataset(train_set, train_set.spec)
    enc_test = encode_dataset(test_set, train_set.spec) if test_set is not None else None
    n, M, n_aps = len(enc_train), shape.max_users, shape.n_aps
    hist = History()
    for epoch in range(1, config.epochs + 1):
        if config.all_targets:
            ex = np.repeat(np.arange(n), M)
            tg = np.tile(np.arange(M), n)
            order = rng.permutation(len(ex))
            ex, tg = ex[order], tg[order]
        else:
            ex = rng.permutation(n)
            tg = rng.integers(0, M, size=n)
        losses, weights = [], []
        for lo in range(0, len(ex), config.batch_size):
            idx, t = ex[lo:lo + config.batch_size], tg[lo:lo + config.batch_size]
            if len(idx) < 2:  # batch statistics need at least two rows
                continue
            b = make_batch(enc_train, idx, t, n_aps)
            loss, grads = model.train_step_loss(b.target, b.features, b.labels)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingDivergedError(
                    f"non-finite loss/gradient at epoch {epoch}, batch starting {lo} "
                    f"(lr={config.lr}); lower the learning rate or check the normalisation")
            opt.step(model.params, grads)
            losses.append(loss)
            weights.append(len(idx))
        train_loss = float(np.average(losses, weights=weights))
        if enc_test is not None and len(enc_test):
            test_loss, acc = evaluate_encoded(model, enc_test, n_aps)
        else:
            test_loss = acc = float("nan")
        hist.append(epoch, train_loss, test_loss, acc)
        log.info("epoch %d train %.5f test %.5f acc %.4f", epoch, train_loss, test_loss, acc)
    return TrainResult(model, hist, config, enc_train.clamped)


def predict_labels(model, snr_db, requirements, spec, is_wifi):
    """Per-user AP index for one snapshot.

    The users are mapped once; the condition branch runs once and each
    original user is scored with its own slot as the target.  ``argmax``
    keeps the lowest AP index on ties.
    """
    feats, _, _ = encode_instance(snr_db, requirements, spec, is_wifi, model.shape.max_users)
    uc = model.condition(feats.reshape(1, -1), train=False)
    n_users = len(requirements)
    logits = model.logits(feats[:n_users], uc)
    return np.argmax(logits, axis=1)


def predict_assignment(model, snapshot, spec):
    is_wifi = np.array([k == "wifi" for k in snapshot.kinds])
    labels = predict_labels(model, snapshot.snr_db, snapshot.requirements, spec, is_wifi)
    return chi_from_labels(labels, snapshot.n_aps)


def train_config_dict(cfg):
    return asdict(cfg)
