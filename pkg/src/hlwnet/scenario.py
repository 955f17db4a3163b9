"""Room geometry, access-point layout and user/demand sampling."""

from dataclasses import dataclass

import numpy as np

from .seeding import as_rng

WIFI = "wifi"
LIFI = "lifi"

RATE_MIN = 1e6
RATE_MAX = 1e9


class EmptyScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class RoomConfig:
    side_length: float = 5.0
    ceiling_height: float = 3.0
    lifi_grid: int = 2
    reuse_factor: int = 4

    def __post_init__(self):
        if self.side_length <= 0:
            raise ValueError("side_length must be positive")
        if self.ceiling_height <= 0:
            raise ValueError("ceiling_height must be positive")
        if self.lifi_grid not in (2, 3):
            raise ValueError("lifi_grid must be 2 or 3")
        if self.reuse_factor < 1:
            raise ValueError("reuse_factor must be >= 1")

    @property
    def n_aps(self):
        return self.lifi_grid ** 2 + 1

    @classmethod
    def four_lifi(cls, **kw):
        return cls(side_length=5.0, lifi_grid=2, **kw)

    @classmethod
    def nine_lifi(cls, **kw):
        return cls(side_length=9.0, lifi_grid=3, **kw)


@dataclass(frozen=True)
class ApDescriptor:
    id: int
    kind: str
    position: tuple
    bandwidth: float
    tx_power: float  # optical watts for LiFi, dBm for WiFi
    subband: int = 0

    @property
    def is_wifi(self):
        return self.kind == WIFI


@dataclass(frozen=True)
class UserDescriptor:
    id: int
    position: tuple
    required_rate: float


@dataclass(frozen=True)
class ClusterSpec:
    num_clusters: int
    users_per_cluster: int = 10
    covariance: tuple = ((0.25, 0.0), (0.0, 0.25))

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ValueError("covariance must be a symmetric 2x2 matrix")
        if np.any(np.linalg.eigvalsh(cov) <= 0):
            raise ValueError("covariance must be positive definite")
        if self.num_clusters < 0 or self.users_per_cluster < 1:
            raise ValueError("invalid cluster counts")

    @property
    def n_users(self):
        return self.num_clusters * self.users_per_cluster


@dataclass(frozen=True)
class RateDistribution:
    """Gamma(shape, scale) demand model; scale in bits/s."""

    shape: float = 2.0
    scale: float = 50e6

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("gamma shape and scale must be positive")

    @property
    def mean_rate(self):
        return self.shape * self.scale

    @classmethod
    def from_mean(cls, mean_rate, shape=2.0):
        return cls(shape=shape, scale=mean_rate / shape)


def _subband(row, col, reuse):
    if reuse >= 4:
        return (2 * (row % 2) + (col % 2)) % reuse
    if reuse == 3:
        return (row + 2 * col) % 3
    if reuse == 2:
        return (row + col) % 2
    return 0


def place_aps(cfg, lifi_bandwidth=20e6, lifi_power=3.0,
              wifi_bandwidth=20e6, wifi_power_dbm=20.0):
    """WiFi AP at index 0 on the floor centre, LiFi APs row-major after it.

    Each LiFi AP sits at the centre of one of ``lifi_grid**2`` equal
    sub-squares, at ceiling height.
    """
    half = cfg.side_length / 2.0
    aps = [ApDescriptor(0, WIFI, (half, half, 0.0), wifi_bandwidth, wifi_power_dbm)]
    cell = cfg.side_length / cfg.lifi_grid
    for row in range(cfg.lifi_grid):
        for col in range(cfg.lifi_grid):
            pos = ((col + 0.5) * cell, (row + 0.5) * cell, cfg.ceiling_height)
            aps.append(ApDescriptor(len(aps), LIFI, pos, lifi_bandwidth, lifi_power,
                                    _subband(row, col, cfg.reuse_factor)))
    return aps


def _users_from_xy(xy, rates):
    return [UserDescriptor(j, (float(x), float(y), 0.0), float(r))
            for j, ((x, y), r) in enumerate(zip(xy, rates))]


def sample_positions_uniform(cfg, n, rng):
    rng = as_rng(rng)
    return rng.uniform(0.0, cfg.side_length, size=(n, 2))


def sample_positions_clustered(cfg, spec, rng):
    """Bivariate-normal clusters around uniformly placed centres.

    Draws landing outside the room are rejected and redrawn.
    """
    rng = as_rng(rng)
    cov = np.asarray(spec.covariance, dtype=float)
    side = cfg.side_length
    out = np.empty((spec.n_users, 2))
    k = 0
    for _ in range(spec.num_clusters):
        centre = rng.uniform(0.0, side, size=2)
        need = spec.users_per_cluster
        while need:
            draws = rng.multivariate_normal(centre, cov, size=need)
            ok = draws[np.all((draws >= 0.0) & (draws <= side), axis=1)]
            out[k:k + len(ok)] = ok
            k += len(ok)
            need -= len(ok)
    return out


def sample_requirements(dist, n, rng):
    """I.i.d. Gamma draws clamped to [1 Mbps, 1000 Mbps]."""
    rng = as_rng(rng)
    return np.clip(rng.gamma(dist.shape, dist.scale, size=n), RATE_MIN, RATE_MAX)


def sample_users_uniform(cfg, n, rng_seed, dist=None):
    if n < 1:
        raise EmptyScenarioError("a scenario needs at least one user")
    rng = as_rng(rng_seed)
    xy = sample_positions_uniform(cfg, n, rng)
    rates = sample_requirements(dist or RateDistribution(), n, rng)
    return _users_from_xy(xy, rates)


def sample_users_clustered(cfg, spec, rng_seed, dist=None):
    if spec.num_clusters < 1:
        raise ValueError("clustered sampling needs at least one cluster")
    rng = as_rng(rng_seed)
    xy = sample_positions_clustered(cfg, spec, rng)
    rates = sample_requirements(dist or RateDistribution(), len(xy), rng)
    return _users_from_xy(xy, rates)


def dump_users(users):
    """Self-describing text table, one user per row."""
    lines = ["# id\tx_m\ty_m\trequired_rate_bps"]
    for u in users:
        lines.append(f"{u.id}\t{u.position[0]:.6f}\t{u.position[1]:.6f}\t{u.required_rate:.6e}")
    return "\n".join(lines) + "\n"
