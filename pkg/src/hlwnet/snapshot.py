"""One network realisation: APs, users, SNR and capacity matrices."""

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import channel, scenario
from .scenario import LIFI, WIFI, ClusterSpec, RateDistribution, RoomConfig
from .seeding import as_rng


@dataclass(frozen=True)
class NetworkConfig:
    room: RoomConfig = field(default_factory=RoomConfig)
    lifi: channel.LiFiFrontEnd = field(default_factory=channel.LiFiFrontEnd)
    wifi: channel.WiFiFrontEnd = field(default_factory=channel.WiFiFrontEnd)
    rates: RateDistribution = field(default_factory=RateDistribution)
    wall_partition: int = 20

    def aps(self):
        return scenario.place_aps(self.room, lifi_bandwidth=self.lifi.bandwidth,
                                  lifi_power=self.lifi.optical_power,
                                  wifi_bandwidth=self.wifi.bandwidth,
                                  wifi_power_dbm=self.wifi.tx_power)

    def to_dict(self):
        return {"room": asdict(self.room), "lifi": asdict(self.lifi),
                "wifi": asdict(self.wifi), "rates": asdict(self.rates),
                "wall_partition": self.wall_partition}

    @classmethod
    def from_dict(cls, d):
        """Build from a (possibly partial) nested dict; unknown keys are rejected."""
        d = dict(d or {})
        parts = {}
        for key, typ in (("room", RoomConfig), ("lifi", channel.LiFiFrontEnd),
                         ("wifi", channel.WiFiFrontEnd), ("rates", RateDistribution)):
            sub = dict(d.pop(key, {}) or {})
            if typ is RateDistribution and "mean_rate" in sub:
                mean = sub.pop("mean_rate")
                shape = sub.pop("shape", 2.0)
                sub.pop("scale", None)  # the mean wins over a stale scale
                sub = {"shape": shape, "scale": mean / shape, **sub}
            allowed = {f.name for f in fields(typ)}
            bad = set(sub) - allowed
            if bad:
                raise ValueError(f"unknown {key} keys: {sorted(bad)}")
            parts[key] = typ(**sub)
        wp = d.pop("wall_partition", 20)
        if d:
            raise ValueError(f"unknown config keys: {sorted(d)}")
        return cls(wall_partition=wp, **parts)

    def with_mean_rate(self, mean_rate):
        return NetworkConfig(self.room, self.lifi, self.wifi,
                             RateDistribution.from_mean(mean_rate, self.rates.shape),
                             self.wall_partition)


@dataclass
class Snapshot:
    kinds: tuple  # per-AP kind, WiFi first
    bandwidth: np.ndarray
    snr: np.ndarray  # linear, n_aps x n_users
    requirements: np.ndarray  # bits/s
    positions: np.ndarray = None  # n_users x 3
    aps: list = None
    mean_rate: float = 100e6  # demand-model mean, sets the fuzzy Req breakpoints

    def __post_init__(self):
        self.snr = np.asarray(self.snr, dtype=float)
        self.requirements = np.asarray(self.requirements, dtype=float)
        self.bandwidth = np.asarray(self.bandwidth, dtype=float)
        if self.snr.shape != (len(self.kinds), len(self.requirements)):
            raise ValueError("SNR shape does not match APs x users")
        if np.any(self.requirements <= 0):
            raise ValueError("rate requirements must be positive")
        self.capacity = np.empty_like(self.snr)
        for i, kind in enumerate(self.kinds):
            self.capacity[i] = channel.link_capacity(kind, self.bandwidth[i], self.snr[i])

    @property
    def n_aps(self):
        return len(self.kinds)

    @property
    def n_users(self):
        return len(self.requirements)

    @property
    def snr_db(self):
        return channel.SnrMatrix(self.snr).db

    @property
    def wifi_index(self):
        return self.kinds.index(WIFI)

    @property
    def lifi_indices(self):
        return np.array([i for i, k in enumerate(self.kinds) if k == LIFI], dtype=np.intp)

    def subset_aps(self, indices):
        idx = list(indices)
        return Snapshot(tuple(self.kinds[i] for i in idx), self.bandwidth[idx],
                        self.snr[idx], self.requirements, self.positions,
                        [self.aps[i] for i in idx] if self.aps else None, self.mean_rate)

    def subset_users(self, indices):
        idx = np.asarray(indices, dtype=np.intp)
        pos = self.positions[idx] if self.positions is not None else None
        return Snapshot(self.kinds, self.bandwidth, self.snr[:, idx],
                        self.requirements[idx], pos, self.aps, self.mean_rate)

    @classmethod
    def from_snr_db(cls, snr_db, requirements, kinds, bandwidth, mean_rate=100e6):
        return cls(tuple(kinds), bandwidth, 10 ** (np.asarray(snr_db) / 10.0), requirements,
                   mean_rate=mean_rate)


def snapshot_from_positions(net, xy, requirements, rng=None):
    aps = net.aps()
    pos = np.column_stack([xy, np.zeros(len(xy))])
    snr = channel.build_snr_matrix(aps, pos, net.lifi, net.wifi, net.room,
                                   rng_seed=rng, wall_partition=net.wall_partition)
    return Snapshot(tuple(a.kind for a in aps), [a.bandwidth for a in aps],
                    snr.values, requirements, pos, aps, net.rates.mean_rate)


def random_snapshot(net, n_users, rng_seed=None, clusters=None):
    """Uniform users, or ``clusters`` clusters plus uniform users filling up to ``n_users``.

    With ``clusters`` set, ``clusters.n_users`` users are clustered and the
    remaining ``n_users - clusters.n_users`` are uniform.
    """
    if n_users < 1:
        raise scenario.EmptyScenarioError("a scenario needs at least one user")
    rng = as_rng(rng_seed)
    if clusters is not None and clusters.num_clusters > 0:
        if clusters.n_users > n_users:
            raise ValueError("more clustered users than total users")
        xy = np.vstack([scenario.sample_positions_clustered(net.room, clusters, rng),
                        scenario.sample_positions_uniform(net.room, n_users - clusters.n_users, rng)])
    else:
        xy = scenario.sample_positions_uniform(net.room, n_users, rng)
    req = scenario.sample_requirements(net.rates, n_users, rng)
    return snapshot_from_positions(net, xy, req, rng)


__all__ = ["NetworkConfig", "Snapshot", "ClusterSpec", "random_snapshot",
           "snapshot_from_positions"]
