import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from hlwnet import allocation as al
from oracles import grid_optimum, single_ap_instance

EQ, CAP = al.EQUAL_SHARE, al.SATISFACTION_CAPPED


def test_chi_label_roundtrip():
    chi = al.chi_from_labels([2, 0, 2, 1], 3)
    assert chi.tolist() == [[0, 1, 0, 0], [0, 0, 0, 1], [1, 0, 1, 0]]
    assert al.labels_from_chi(chi).tolist() == [2, 0, 2, 1]
    al.check_chi(chi)


@pytest.mark.parametrize("bad", [[[1, 1], [1, 0]], [[0, 0], [1, 0]], [[2, 0], [0, 1]]])
def test_check_chi_rejects(bad):
    with pytest.raises(ValueError):
        al.check_chi(np.array(bad))


def test_equal_share_quarter():
    chi = np.ones((1, 4), dtype=int)
    rho = al.allocate_time(chi, np.full((1, 4), 1e8), np.full(4, 1e9))
    assert np.all(rho == 0.25)


def test_capped_exact_shares():
    chi = np.ones((1, 2), dtype=int)
    C = np.array([[1e8, 1e8]])
    R = np.array([0.2e8, 0.3e8])
    rho = al.allocate_time(chi, C, R, CAP)
    assert rho[0] == pytest.approx([0.2, 0.3])
    assert np.allclose(al.satisfaction(chi, rho, C, R), 1.0)


def test_capped_falls_back_when_infeasible():
    chi = np.ones((1, 2), dtype=int)
    C = np.array([[1e8, 1e8]])
    R = np.array([0.7e8, 0.6e8])
    assert np.array_equal(al.allocate_time(chi, C, R, CAP), al.allocate_time(chi, C, R, EQ))


def test_unreachable_link_and_unknown_mode():
    chi = np.array([[1, 0], [0, 1]])
    C = np.array([[0.0, 1.0], [1.0, 1.0]])
    with pytest.raises(al.UnreachableLinkError):
        al.allocate_time(chi, C, [1, 1])
    with pytest.raises(ValueError):
        al.allocate_time(chi, np.ones((2, 2)), [1, 1], "warp")


def test_throughput_examples():
    chi = np.array([[1, 0, 0], [0, 1, 1]])
    C = np.array([[5.0, 1, 1], [1, 4.0, 6.0]])
    R = np.ones(3) * 10
    rho = al.allocate_time(chi, C, R)
    assert al.throughput(chi[:, :1], np.ones((2, 1)) * chi[:, :1], C[:, :1]) == 5.0
    assert al.throughput(chi, np.zeros_like(rho), C) == 0.0
    per_ap = [sum(rho[i, j] * C[i, j] for j in range(3) if chi[i, j]) for i in range(2)]
    assert al.throughput(chi, rho, C) == pytest.approx(sum(per_ap))


def test_satisfaction_examples():
    chi = np.ones((1, 1))
    assert al.satisfaction(chi, np.ones((1, 1)), np.array([[3.0]]), [3.0])[0] == 1.0
    assert al.satisfaction(chi, np.ones((1, 1)), np.array([[6.0]]), [3.0])[0] == 1.0
    assert al.satisfaction(chi, np.zeros((1, 1)), np.array([[6.0]]), [3.0])[0] == 0.0


def test_jain_examples():
    assert al.jain([1, 1, 1, 1]) == 1.0
    assert al.jain([1, 0]) == 0.5
    with pytest.raises(al.UndefinedMetricError):
        al.jain([0, 0])
    with pytest.raises(al.UndefinedMetricError):
        al.jain([])


def test_jain_bounds_bulk():
    rng = np.random.default_rng(0)
    sizes = rng.integers(1, 60, 100_000)
    for n in np.unique(sizes):
        s = rng.uniform(0, 1, (int(np.sum(sizes == n)), n))
        s[:, 0] += 1e-9
        xi = s.sum(axis=1) ** 2 / (n * (s ** 2).sum(axis=1))
        assert np.all(xi >= 1 / n - 1e-12) and np.all(xi <= 1 + 1e-12)
    for s in rng.uniform(0, 1, (200, 7)):
        assert 1 / 7 - 1e-12 <= al.jain(s) <= 1 + 1e-12


def test_performance_gap_and_accuracy():
    rng = np.random.default_rng(3)
    C = rng.uniform(1e6, 1e8, (3, 6))
    R = rng.uniform(1e6, 1e8, 6)
    lab = np.array([0, 1, 2, 0, 1, 2])
    pred = np.array([0, 0, 2, 0, 1, 1])
    assert al.performance_gap(lab, lab, C, R) == 0.0
    g = al.performance_gap(pred, lab, C, R)
    perm = rng.permutation(6)
    assert al.performance_gap(pred[perm], lab[perm], C[:, perm], R[perm]) == pytest.approx(g, rel=1e-12)
    a = al.chi_from_labels(lab, 3)
    ev_p = al.evaluate(pred, C, R)
    ev_l = al.evaluate(lab, C, R)
    assert g == pytest.approx(abs(ev_p.throughput - ev_l.throughput) / ev_l.throughput)
    assert al.accuracy(a, a) == 1.0
    assert al.accuracy(np.array([0, 1]), np.array([1, 0])) == 0.0
    assert al.accuracy(np.array([0, 1, 1, 0]), np.array([0, 1, 0, 1])) == 0.5
    with pytest.raises(al.UndefinedMetricError):
        al.performance_gap(np.zeros(0, int), np.zeros(0, int), np.zeros((3, 0)), np.zeros(0))


def test_evaluate_report():
    C = np.array([[2.0, 2.0], [1.0, 4.0]])
    R = np.array([1.0, 1.0])
    rep = al.evaluate(np.array([0, 1]), C, R)
    assert rep.throughput == 6.0 and np.all(rep.satisfaction == 1.0)
    assert rep.jain == 1.0 and rep.objective == 0.0
    assert rep.served_demand == 2.0
    assert set(rep.row()) == {"throughput", "served_demand", "jain", "objective", "mean_satisfaction"}


instances = st.integers(0, 2**32 - 1)


@given(instances, st.sampled_from([EQ, CAP]))
def test_time_budget_never_exceeded(seed, mode):
    rng = np.random.default_rng(seed)
    n_aps, n = int(rng.integers(1, 5)), int(rng.integers(1, 9))
    labels = rng.integers(0, n_aps, n)
    chi = al.chi_from_labels(labels, n_aps)
    C = rng.uniform(1e6, 5e8, (n_aps, n))
    R = rng.uniform(1e6, 1e9, n)
    rho = al.allocate_time(chi, C, R, mode)
    assert np.all((chi * rho).sum(axis=1) <= 1 + 1e-9)
    al.Assignment(chi, rho)


@given(instances)
def test_capped_weakly_dominates_when_triggered(seed):
    rng = np.random.default_rng(seed)
    n_aps, n = int(rng.integers(1, 4)), int(rng.integers(1, 7))
    chi = al.chi_from_labels(rng.integers(0, n_aps, n), n_aps)
    C = rng.uniform(1e6, 5e8, (n_aps, n))
    R = C.max(axis=0) * rng.uniform(0.01, 0.6, n)
    eq = al.evaluate(chi, C, R, EQ).objective
    cap = al.evaluate(chi, C, R, CAP).objective
    assert cap >= eq - 1e-12


@given(instances, st.sampled_from(["large", "low"]))
def test_single_ap_near_grid_optimum(seed, regime):
    rng = np.random.default_rng(seed)
    C, R = single_ap_instance(rng, regime)
    best, _ = grid_optimum(C, R)
    chi = np.ones((1, len(C)), dtype=int)
    for mode in (EQ, CAP) if regime == "large" else (CAP,):
        got = al.evaluate(chi, C[None, :], R, mode).objective
        assert got >= best - 0.02 * abs(best) - 1e-12
