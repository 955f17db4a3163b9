"""Labelled snapshot datasets: generation, normalisation, batching and a binary file format.

File layout (all integers little-endian)::

    magic  b"HLWDS\\0"       6 bytes
    version                  uint16
    header length            uint32
    header                   UTF-8 JSON
    header sha256            32 bytes
    records                  n_samples x (uint32 byte length, payload)

A record payload is ``uint16 n_users`` followed by the SNR matrix in dB
(``n_aps x n_users`` row-major, ``<f8``), the requirements (``<f8``) and
the labels (``<u2``).
"""

import csv
import hashlib
import io
import json
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .balancers import flopt_labels
from .scenario import RATE_MAX, RATE_MIN, WIFI
from .seeding import as_rng, mix_seed
from .snapshot import NetworkConfig, Snapshot, random_snapshot
from .tcnn.mapping import MappingInfeasibleError, adaptive_map

MAGIC = b"HLWDS\0"
VERSION = 1
_PREFIX = struct.Struct("<6sHI")
_RECORD = struct.Struct("<I")


class DatasetFormatError(ValueError):
    pass


@dataclass
class RawSample:
    snr_db: np.ndarray  # n_aps x n_users
    requirements: np.ndarray
    labels: np.ndarray  # AP index per user

    def __post_init__(self):
        self.snr_db = np.asarray(self.snr_db, dtype=float)
        self.requirements = np.asarray(self.requirements, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n_aps, n_users = self.snr_db.shape
        if self.requirements.shape != (n_users,) or self.labels.shape != (n_users,):
            raise ValueError("sample shapes disagree")
        if np.any((self.labels < 0) | (self.labels >= n_aps)):
            raise ValueError("label outside [0, n_aps)")

    @property
    def n_users(self):
        return len(self.requirements)

    def __eq__(self, other):
        return (isinstance(other, RawSample)
                and np.array_equal(self.snr_db, other.snr_db)
                and np.array_equal(self.requirements, other.requirements)
                and np.array_equal(self.labels, other.labels))


@dataclass(frozen=True)
class NormalizationSpec:
    """Linear SNR scaling (min/max from the training split) and log rate scaling.

    With ``per_kind`` the WiFi row uses its own ``wifi_snr_min``/``wifi_snr_max``
    and ``snr_min``/``snr_max`` apply to LiFi rows only.
    """

    snr_min: float
    snr_max: float
    rate_min: float = RATE_MIN
    rate_max: float = RATE_MAX
    per_kind: bool = False
    wifi_snr_min: float = None
    wifi_snr_max: float = None

    def __post_init__(self):
        if not self.snr_max > self.snr_min:
            raise ValueError("snr_max must exceed snr_min")
        if not self.rate_max > self.rate_min > 0:
            raise ValueError("need 0 < rate_min < rate_max")
        if self.per_kind and not (self.wifi_snr_max is not None and self.wifi_snr_min is not None
                                  and self.wifi_snr_max > self.wifi_snr_min):
            raise ValueError("per-kind normalisation needs a valid WiFi SNR range")

    def bounds(self, is_wifi):
        """(lo, hi) column vectors broadcastable against an ``n_aps x n`` SNR matrix."""
        is_wifi = np.asarray(is_wifi, dtype=bool)
        lo = np.full(len(is_wifi), self.snr_min)
        hi = np.full(len(is_wifi), self.snr_max)
        if self.per_kind:
            lo[is_wifi] = self.wifi_snr_min
            hi[is_wifi] = self.wifi_snr_max
        return lo[:, None], hi[:, None]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def digest(self):
        return _sha256_json(self.to_dict())


def fit_normalization(samples, is_wifi, per_kind=False):
    if not samples:
        raise ValueError("cannot fit normalisation on an empty set")
    is_wifi = np.asarray(is_wifi, dtype=bool)
    snr = np.hstack([s.snr_db for s in samples])
    if not per_kind:
        return NormalizationSpec(float(snr.min()), float(snr.max()))
    lifi, wifi = snr[~is_wifi], snr[is_wifi]
    return NormalizationSpec(float(lifi.min()), float(lifi.max()), per_kind=True,
                             wifi_snr_min=float(wifi.min()), wifi_snr_max=float(wifi.max()))


def normalize_snr(snr_db, spec, is_wifi):
    """Returns ``(scaled, n_clamped)``; ``snr_db`` is ``n_aps x n``."""
    lo, hi = spec.bounds(is_wifi)
    raw = (np.asarray(snr_db, dtype=float) - lo) / (hi - lo)
    clamped = int(np.count_nonzero((raw < 0) | (raw > 1)))
    return np.clip(raw, 0.0, 1.0), clamped


def normalize_rate(rates, spec):
    rates = np.asarray(rates, dtype=float)
    raw = np.log10(rates / spec.rate_min) / np.log10(spec.rate_max / spec.rate_min)
    clamped = int(np.count_nonzero((raw < 0) | (raw > 1)))
    return np.clip(raw, 0.0, 1.0), clamped


def normalize(sample, spec, is_wifi):
    """Normalised ``(snr, rate, n_clamped)`` for one sample, without mapping."""
    snr, c1 = normalize_snr(sample.snr_db, spec, is_wifi)
    rate, c2 = normalize_rate(sample.requirements, spec)
    return snr, rate, c1 + c2


def encode_instance(snr_db, requirements, spec, is_wifi, max_users):
    """Map users onto ``max_users`` slots, then normalise.

    Returns ``(features, origin, n_clamped)`` where ``features`` is
    ``max_users x (n_aps + 1)``: the slot's normalised SNR toward every AP
    followed by its normalised (split) rate.
    """
    mapped = adaptive_map(snr_db, requirements, max_users)
    snr, c1 = normalize_snr(mapped.snr.T, spec, is_wifi)
    rate, c2 = normalize_rate(mapped.rates, spec)
    return np.column_stack([snr.T, rate]), mapped.origin, c1 + c2


@dataclass
class GeneratorConfig:
    user_counts: tuple = (5, 10)
    batches: int = 20
    batch_size: int = 64
    max_users: int = 10
    network: NetworkConfig = field(default_factory=NetworkConfig)

    def __post_init__(self):
        self.user_counts = tuple(int(u) for u in self.user_counts)
        if not self.user_counts:
            raise ValueError("user_counts is empty")
        if min(self.user_counts) < 1:
            raise ValueError("user counts must be positive")
        if max(self.user_counts) > self.max_users:
            raise MappingInfeasibleError(
                f"user count {max(self.user_counts)} exceeds max_users={self.max_users}")
        if self.batches < 0 or self.batch_size < 1:
            raise ValueError("invalid batch geometry")

    @property
    def n_samples(self):
        return self.batches * self.batch_size

    def to_dict(self):
        return {"user_counts": list(self.user_counts), "batches": self.batches,
                "batch_size": self.batch_size, "max_users": self.max_users,
                "network": self.network.to_dict()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        net = NetworkConfig.from_dict(d.pop("network", {}))
        return cls(network=net, **d)

    def digest(self):
        return _sha256_json(self.to_dict())


@dataclass
class Dataset:
    samples: list
    kinds: tuple
    max_users: int
    seed: int = None
    config: dict = None
    spec: NormalizationSpec = None

    @property
    def n_aps(self):
        return len(self.kinds)

    @property
    def is_wifi(self):
        return np.array([k == WIFI for k in self.kinds])

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.kinds == other.kinds
                and self.max_users == other.max_users and self.seed == other.seed
                and self.config == other.config and self.spec == other.spec
                and self.samples == other.samples)

    def subset(self, indices, refit=True):
        picked = [self.samples[i] for i in indices]
        spec = fit_normalization(picked, self.is_wifi, self._per_kind()) if refit and picked else self.spec
        return Dataset(picked, self.kinds, self.max_users, self.seed, self.config, spec)

    def _per_kind(self):
        return bool(self.spec and self.spec.per_kind)

    def digest(self):
        h = hashlib.sha256()
        for rec in _records(self):
            h.update(rec)
        return h.hexdigest()

    def network(self):
        return NetworkConfig.from_dict((self.config or {}).get("network", {}))

    def snapshot(self, k, net=None):
        """Rebuild sample ``k`` as a :class:`Snapshot` (bandwidths from the generator config)."""
        net = net or self.network()
        s = self.samples[k]
        bw = [a.bandwidth for a in net.aps()]
        return Snapshot.from_snr_db(s.snr_db, s.requirements, self.kinds, bw, net.rates.mean_rate)


def _user_count(cfg, k):
    return cfg.user_counts[k % len(cfg.user_counts)]


def _make_sample(args):
    cfg, seed, k = args
    snap = random_snapshot(cfg.network, _user_count(cfg, k), mix_seed(seed, k))
    return RawSample(snap.snr_db, snap.requirements, flopt_labels(snap))


def generate(cfg, rng_seed=0, workers=1, per_kind=False):
    """``cfg.n_samples`` FL-OPT labelled snapshots, user counts round-robin over ``cfg.user_counts``.

    Sample ``k`` is drawn from its own stream ``mix_seed(rng_seed, k)`` so the
    result does not depend on ``workers``.
    """
    jobs = [(cfg, rng_seed, k) for k in range(cfg.n_samples)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            samples = list(pool.map(_make_sample, jobs, chunksize=64))
    else:
        samples = [_make_sample(j) for j in jobs]
    kinds = tuple(a.kind for a in cfg.network.aps())
    ds = Dataset(samples, kinds, cfg.max_users, rng_seed, cfg.to_dict())
    if samples:
        ds.spec = fit_normalization(samples, ds.is_wifi, per_kind)
    return ds


def split(dataset, test_fraction, rng_seed=0):
    """Seeded disjoint split; the normalisation spec is refit on each part's train side."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = len(dataset)
    perm = as_rng(rng_seed).permutation(n)
    n_test = int(round(test_fraction * n))
    test_idx, train_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    train = dataset.subset(train_idx)
    test = dataset.subset(test_idx, refit=False)
    test.spec = train.spec
    return train, test


@dataclass
class EncodedSet:
    """Every sample mapped and normalised once; ready for batching."""

    features: np.ndarray  # n x M x (n_aps + 1)
    slot_labels: np.ndarray  # n x M, label of each slot's original user
    n_users: np.ndarray  # n
    clamped: int

    def __len__(self):
        return len(self.features)


def encode_dataset(dataset, spec=None):
    spec = spec or dataset.spec
    M, width = dataset.max_users, dataset.n_aps + 1
    feats = np.empty((len(dataset), M, width))
    labels = np.empty((len(dataset), M), dtype=np.int64)
    n_users = np.empty(len(dataset), dtype=np.int64)
    clamped = 0
    wifi = dataset.is_wifi
    for k, s in enumerate(dataset.samples):
        feats[k], origin, c = encode_instance(s.snr_db, s.requirements, spec, wifi, M)
        labels[k] = s.labels[origin]
        n_users[k] = s.n_users
        clamped += c
    return EncodedSet(feats, labels, n_users, clamped)


@dataclass
class DatasetBatch:
    features: np.ndarray  # T x M(n_aps + 1), the condition vector of each example
    target_index: np.ndarray  # T, mapped slot used as the target
    target: np.ndarray  # T x (n_aps + 1)
    labels: np.ndarray  # T x n_aps one-hot


def make_batch(encoded, indices, targets, n_aps):
    idx = np.asarray(indices)
    targets = np.asarray(targets)
    block = encoded.features[idx]
    lab = encoded.slot_labels[idx, targets]
    return DatasetBatch(block.reshape(len(idx), -1), targets, block[np.arange(len(idx)), targets],
                        np.eye(n_aps)[lab])


def _sha256_json(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _records(dataset):
    for s in dataset.samples:
        payload = (struct.pack("<H", s.n_users)
                   + s.snr_db.astype("<f8").tobytes()
                   + s.requirements.astype("<f8").tobytes()
                   + s.labels.astype("<u2").tobytes())
        yield _RECORD.pack(len(payload)) + payload


def save(dataset, path):
    body = b"".join(_records(dataset))
    header = {
        "version": VERSION,
        "endianness": "little",
        "kinds": list(dataset.kinds),
        "n_aps": dataset.n_aps,
        "max_users": dataset.max_users,
        "seed": dataset.seed,
        "config": dataset.config,
        "config_digest": _sha256_json(dataset.config),
        "normalization": dataset.spec.to_dict() if dataset.spec else None,
        "n_samples": len(dataset),
        "payload_sha256": hashlib.sha256(body).hexdigest(),
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, VERSION, len(hbytes)))
        f.write(hbytes)
        f.write(hashlib.sha256(hbytes).digest())
        f.write(body)


def read_header(f):
    raw = f.read(_PREFIX.size)
    if len(raw) < _PREFIX.size:
        raise DatasetFormatError("truncated file: incomplete prefix")
    magic, version, hlen = _PREFIX.unpack(raw)
    if magic != MAGIC:
        raise DatasetFormatError("not a dataset file (bad magic)")
    if version != VERSION:
        raise DatasetFormatError(f"unsupported dataset version {version}, expected {VERSION}")
    hbytes = f.read(hlen)
    digest = f.read(32)
    if len(hbytes) < hlen or len(digest) < 32:
        raise DatasetFormatError("truncated file: incomplete header")
    if hashlib.sha256(hbytes).digest() != digest:
        raise DatasetFormatError("header digest mismatch")
    header = json.loads(hbytes)
    if header.get("version") != VERSION:
        raise DatasetFormatError("header version disagrees with prefix")
    if header["config_digest"] != _sha256_json(header["config"]):
        raise DatasetFormatError("generator config digest mismatch")
    return header


def load(path):
    with open(path, "rb") as f:
        header = read_header(f)
        body = f.read()
    if hashlib.sha256(body).hexdigest() != header["payload_sha256"]:
        which = "truncated file" if _short(body, header) else "payload digest mismatch"
        raise DatasetFormatError(which)
    n_aps = header["n_aps"]
    buf = io.BytesIO(body)
    samples = []
    for _ in range(header["n_samples"]):
        (length,) = _RECORD.unpack(buf.read(_RECORD.size))
        rec = buf.read(length)
        (n_users,) = struct.unpack_from("<H", rec)
        off = 2
        snr = np.frombuffer(rec, "<f8", n_aps * n_users, off).reshape(n_aps, n_users)
        off += 8 * n_aps * n_users
        req = np.frombuffer(rec, "<f8", n_users, off)
        off += 8 * n_users
        lab = np.frombuffer(rec, "<u2", n_users, off)
        samples.append(RawSample(snr.astype(float), req.astype(float), lab.astype(np.int64)))
    spec = header["normalization"]
    return Dataset(samples, tuple(header["kinds"]), header["max_users"], header["seed"],
                   header["config"], NormalizationSpec.from_dict(spec) if spec else None)


def _short(body, header):
    """True when the payload ends before every announced record is present."""
    pos, n = 0, 0
    while n < header["n_samples"]:
        if pos + _RECORD.size > len(body):
            return True
        (length,) = _RECORD.unpack_from(body, pos)
        pos += _RECORD.size + length
        n += 1
    return pos > len(body)


def export_csv(dataset, out):
    """One row per (sample, user): label, requirement and SNR in dB to every AP."""
    w = csv.writer(out)
    w.writerow(["sample", "user", "label", "required_rate_bps"]
               + [f"snr_db_ap{i}" for i in range(dataset.n_aps)])
    for k, s in enumerate(dataset.samples):
        for j in range(s.n_users):
            w.writerow([k, j, int(s.labels[j]), repr(float(s.requirements[j]))]
                       + [f"{v:.6f}" for v in s.snr_db[:, j]])


def inspect(dataset):
    """Summary statistics as a plain dict."""
    counts = {}
    label_hist = np.zeros(dataset.n_aps, dtype=np.int64)
    for s in dataset.samples:
        counts[s.n_users] = counts.get(s.n_users, 0) + 1
        label_hist += np.bincount(s.labels, minlength=dataset.n_aps)
    total = int(label_hist.sum())
    wifi_share = float(label_hist[dataset.is_wifi].sum() / total) if total else 0.0
    out = {
        "n_samples": len(dataset),
        "n_aps": dataset.n_aps,
        "max_users": dataset.max_users,
        "seed": dataset.seed,
        "user_counts": {str(k): v for k, v in sorted(counts.items())},
        "label_share": [float(x / total) if total else 0.0 for x in label_hist],
        "wifi_label_share": wifi_share,
        "normalization": dataset.spec.to_dict() if dataset.spec else None,
        "digest": dataset.digest(),
    }
    if dataset.samples:
        snr = np.hstack([s.snr_db for s in dataset.samples])
        req = np.concatenate([s.requirements for s in dataset.samples])
        out["snr_db_range"] = [float(snr.min()), float(snr.max())]
        out["rate_range_bps"] = [float(req.min()), float(req.max())]
    return out
