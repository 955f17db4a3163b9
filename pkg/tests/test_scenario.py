import numpy as np
import pytest

from hlwnet import scenario as S
from hlwnet.scenario import ClusterSpec, RateDistribution, RoomConfig


def test_four_lifi_placement():
    aps = S.place_aps(RoomConfig.four_lifi())
    assert aps[0].kind == S.WIFI and aps[0].position == (2.5, 2.5, 0.0)
    lifi = [a.position for a in aps[1:]]
    assert lifi == [(1.25, 1.25, 3.0), (3.75, 1.25, 3.0), (1.25, 3.75, 3.0), (3.75, 3.75, 3.0)]


def test_nine_lifi_placement():
    aps = S.place_aps(RoomConfig.nine_lifi())
    xy = {(a.position[0], a.position[1]) for a in aps[1:]}
    assert xy == {(x, y) for x in (1.5, 4.5, 7.5) for y in (1.5, 4.5, 7.5)}
    assert all(a.position[2] == 3.0 for a in aps[1:])


@pytest.mark.parametrize("cfg", [RoomConfig.four_lifi(), RoomConfig.nine_lifi(),
                                 RoomConfig(side_length=7, ceiling_height=2.5, lifi_grid=3)])
def test_exactly_one_wifi_at_ground_centre(cfg):
    aps = S.place_aps(cfg)
    wifi = [a for a in aps if a.is_wifi]
    assert len(wifi) == 1 and wifi[0].id == 0
    assert wifi[0].position == (cfg.side_length / 2, cfg.side_length / 2, 0.0)
    assert len(aps) == cfg.lifi_grid ** 2 + 1 == cfg.n_aps


@pytest.mark.parametrize("grid", [2, 3])
def test_reuse_neighbours_differ(grid):
    aps = S.place_aps(RoomConfig(lifi_grid=grid))[1:]
    band = {(k // grid, k % grid): a.subband for k, a in enumerate(aps)}
    for (r, c), b in band.items():
        for dr, dc in ((0, 1), (1, 0)):
            if (r + dr, c + dc) in band:
                assert band[(r + dr, c + dc)] != b
    assert all(0 <= b < 4 for b in band.values())


@pytest.mark.parametrize("kw", [dict(side_length=0), dict(ceiling_height=-1), dict(lifi_grid=4),
                                dict(reuse_factor=0)])
def test_room_validation(kw):
    with pytest.raises(ValueError):
        RoomConfig(**kw)


def test_uniform_users_deterministic_and_in_room():
    cfg = RoomConfig()
    a = S.sample_users_uniform(cfg, 5, 3)
    b = S.sample_users_uniform(cfg, 5, 3)
    assert a == b
    big = S.sample_users_uniform(cfg, 1000, 4)
    xy = np.array([u.position for u in big])
    assert np.all((xy[:, :2] >= 0) & (xy[:, :2] <= 5)) and np.all(xy[:, 2] == 0)
    # Uniform(0, 5): sigma of the mean = 5 / sqrt(12 * 1000) ~ 0.0456, 3 sigma ~ 0.137
    assert abs(xy[:, 0].mean() - 2.5) < 0.15


def test_empty_scenario():
    with pytest.raises(S.EmptyScenarioError):
        S.sample_users_uniform(RoomConfig(), 0, 1)


def test_clustered_counts_and_support():
    users = S.sample_users_clustered(RoomConfig(), ClusterSpec(5, 10), 9)
    assert len(users) == 50
    xy = np.array([u.position for u in users])
    assert np.all((xy[:, :2] >= 0) & (xy[:, :2] <= 5))


def test_cluster_spread_matches_covariance():
    # one cluster in a huge room so rejection never truncates the normal
    cfg = RoomConfig(side_length=1000.0)
    xy = S.sample_positions_clustered(cfg, ClusterSpec(1, 10_000), np.random.default_rng(5))
    assert abs(xy[:, 0].std() - 0.5) < 0.15
    assert abs(xy[:, 1].std() - 0.5) < 0.15


def test_cluster_spec_rejects_bad_covariance():
    with pytest.raises(ValueError):
        ClusterSpec(2, covariance=((1.0, 2.0), (2.0, 1.0)))
    with pytest.raises(ValueError):
        ClusterSpec(2, covariance=((1.0, 0.5), (0.0, 1.0)))


def test_gamma_requirements_mean_and_variance():
    dist = RateDistribution(2.0, 50e6)
    r = S.sample_requirements(dist, 100_000, np.random.default_rng(0))
    assert abs(r.mean() / 100e6 - 1) < 0.02
    # variance k*theta^2 = 5e15; clamp at 1 Mbps / 1 Gbps is negligible here
    assert abs(r.var() / 5e15 - 1) < 0.05


def test_requirement_clamp_and_determinism():
    dist = RateDistribution(2.0, 2e9)  # mean 4 Gbps, most draws above the cap
    r = S.sample_requirements(dist, 1000, np.random.default_rng(1))
    assert r.max() == S.RATE_MAX and r.min() >= S.RATE_MIN
    tiny = S.sample_requirements(RateDistribution(0.5, 1e3), 1000, np.random.default_rng(1))
    assert tiny.min() == S.RATE_MIN
    a = S.sample_requirements(dist, 10, np.random.default_rng(7))
    b = S.sample_requirements(dist, 10, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_rate_distribution_mean():
    d = RateDistribution.from_mean(120e6)
    assert d.mean_rate == pytest.approx(120e6)
    with pytest.raises(ValueError):
        RateDistribution(0, 1)


def test_dump_users_table():
    users = S.sample_users_uniform(RoomConfig(), 3, 2)
    text = S.dump_users(users)
    lines = text.strip().splitlines()
    assert lines[0].startswith("# id") and len(lines) == 4
    assert float(lines[1].split("\t")[3]) == pytest.approx(users[0].required_rate, rel=1e-6)
