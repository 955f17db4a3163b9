"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts the same condition.  The desk-scale model is trained once per module.
"""

import math
import time

import numpy as np
import pytest

from conftest import record_criterion
from hlwnet import balancers as bl
from hlwnet import channel as ch
from hlwnet import dataset as D
from hlwnet import harness as hz
from hlwnet.allocation import EQUAL_SHARE, SATISFACTION_CAPPED, accuracy, chi_from_labels, evaluate, \
    performance_gap, satisfaction, allocate_time
from hlwnet.scenario import LIFI
from hlwnet.seeding import mix_seed
from hlwnet.snapshot import NetworkConfig, random_snapshot
from hlwnet.tcnn.mapping import adaptive_map
from hlwnet.tcnn.train import TrainConfig, predict_assignment, train
from oracles import finite_difference_errors, grid_optimum, random_tcnn_case, single_ap_instance

NET = NetworkConfig()
DESK_COUNTS = (5, 8, 10)
DESK_M = 10


def test_criterion_01_gradients_match_finite_differences():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        model, xt, xc, y = random_tcnn_case(mix_seed(101, seed), n_aps=3, max_users=4, batch=8)
        worst = max(worst, max(finite_difference_errors(model, xt, xc, y, h=1e-5).values()))
    elapsed = time.perf_counter() - t0
    ok = record_criterion(1, worst < 1e-4 and elapsed < 10, f"worst relative error {worst:.2e} over 20 cases, {elapsed:.1f} s")
    assert ok


def test_criterion_02_single_ap_allocation_near_optimum():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst_rel, capped_misses = 0.0, 0
    for t in range(200):
        regime = "large" if t % 2 == 0 else "low"
        C, R = single_ap_instance(rng, regime)
        chi = np.ones((1, len(C)), dtype=int)
        if regime == "large":
            best, _ = grid_optimum(C, R)
            got = evaluate(chi, C[None, :], R, EQUAL_SHARE).objective
            worst_rel = max(worst_rel, (best - got) / max(abs(best), 1e-12))
        else:
            assert np.sum(R / C) <= 1
            rho = allocate_time(chi, C[None, :], R, SATISFACTION_CAPPED)
            capped_misses += int(not np.all(satisfaction(chi, rho, C[None, :], R) == 1.0))
    elapsed = time.perf_counter() - t0
    ok = record_criterion(2, worst_rel <= 0.02 and capped_misses == 0 and elapsed < 60,
                          f"equal-share worst shortfall {worst_rel:.2e}, capped misses {capped_misses}, {elapsed:.1f} s")
    assert ok


def test_criterion_03_adaptive_mapping_conserves_demand():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    bad = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 51))
        M = int(rng.integers(n, 51))
        snr = rng.uniform(10, 70, (5, n))
        R = rng.uniform(1e6, 1e9, n)
        m = adaptive_map(snr, R, M)
        total = np.zeros(n)
        np.add.at(total, m.origin, m.rates)
        bad += int(m.n_slots != M or np.any(np.abs(total / R - 1) >= 1e-9)
                   or not np.array_equal(m.snr, snr.T[m.origin]))
    R = rng.uniform(1e6, 1e9, 20)
    m = adaptive_map(rng.uniform(10, 70, (5, 20)), R, 30)
    worked = (np.array_equal(m.origin, np.r_[np.arange(20), np.arange(10)])
              and np.array_equal(m.rates, np.r_[R[:10] / 2, R[10:], R[:10] / 2]))
    elapsed = time.perf_counter() - t0
    ok = record_criterion(3, bad == 0 and worked and elapsed < 10,
                          f"{bad} bad pairs of 10000, 20/30 split {'exact' if worked else 'WRONG'}, {elapsed:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def desk_model():
    t0 = time.perf_counter()
    cfg = D.GeneratorConfig(DESK_COUNTS, 125, 32, DESK_M, NET)
    ds = D.generate(cfg, rng_seed=404)
    tr, te = D.split(ds, 0.2, 404)
    res = train(tr, te, TrainConfig(epochs=30, batch_size=32, lr=1e-3, seed=404, all_targets=True))
    return res, tr.spec, time.perf_counter() - t0


def _held_out(n_users, count, seed):
    return [random_snapshot(NET, n_users, mix_seed(seed, n_users, k)) for k in range(count)]


@pytest.mark.slow
def test_criterion_04_desk_scale_training(desk_model):
    res, _, elapsed = desk_model
    h = res.history
    acc, ratio = h.accuracy[-1], h.test_loss[-1] / h.train_loss[-1]
    ok = record_criterion(4, acc >= 0.60 and ratio < 1.5 and elapsed < 900,
                          f"test accuracy {acc:.3f}, test/train loss {ratio:.3f}, {elapsed:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_05_throughput_gap_against_labels(desk_model):
    res, spec, _ = desk_model
    t0 = time.perf_counter()
    gaps = []
    for k in range(500):
        snap = random_snapshot(NET, DESK_COUNTS[k % 3], mix_seed(505, k))
        pred = predict_assignment(res.model, snap, spec)
        gaps.append(performance_gap(pred, bl.flopt_assign(snap), snap.capacity, snap.requirements))
    gap, elapsed = float(np.mean(gaps)), time.perf_counter() - t0
    ok = record_criterion(5, gap < 0.05 and elapsed < 120, f"mean gap {gap:.4f} over 500 held-out snapshots, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_06_accuracy_stable_across_user_counts(desk_model):
    res, spec, _ = desk_model
    t0 = time.perf_counter()
    per = {}
    for n in (5, 7, 8, 10):
        per[n] = float(np.mean([accuracy(predict_assignment(res.model, s, spec), bl.flopt_assign(s))
                                for s in _held_out(n, 200, 606)]))
    spread, elapsed = max(per.values()) - min(per.values()), time.perf_counter() - t0
    shown = ", ".join(f"{n}:{a:.3f}" for n, a in per.items())
    ok = record_criterion(6, spread < 0.10 and elapsed < 120, f"accuracy {shown}; spread {100 * spread:.1f} points")
    assert ok


def test_criterion_07_gt_reaches_nash_points():
    t0 = time.perf_counter()
    failures = 0
    rng = np.random.default_rng(707)
    for k in range(100):
        s = random_snapshot(NET, int(rng.integers(1, 21)), mix_seed(707, k))
        res = bl.gt_assign(s, rng_seed=k)
        failures += int(not res.converged or np.any(bl.unilateral_gains(s, res.chi) > 1e-12))
    elapsed = time.perf_counter() - t0
    ok = record_criterion(7, failures == 0 and elapsed < 60, f"{failures} non-Nash outputs of 100, {elapsed:.1f} s")
    assert ok


def test_criterion_08_oracle_dominates_and_flopt_is_near_optimal():
    t0 = time.perf_counter()
    violations, ratios = 0, []
    for t in range(200):
        s = hz.small_instance(mix_seed(808, t), (2, 5), 6)
        _, best = bl.exhaustive_oracle(s)
        for m in ("sss", "gt", "fl", "flopt"):
            value = bl.objective(s, bl.assign(m, s, t)[0])
            violations += int(value > best + 1e-12 * max(1.0, abs(best)))
            if m == "flopt":
                ratios.append(hz.optimality_ratio(value, best, s.n_users))
    mean_ratio, elapsed = float(np.mean(ratios)), time.perf_counter() - t0
    ok = record_criterion(8, violations == 0 and mean_ratio >= 0.95 and elapsed < 300,
                          f"{violations} dominance violations, FL-OPT mean ratio {mean_ratio:.4f}, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_09_runtime_scaling_shape():
    t0 = time.perf_counter()
    plan = hz.ExperimentPlan(methods=("gt", "tcnn"), seed=909)
    rows = hz.bench_runtime(plan, user_counts=(10, 40, 50), reps=200, pool=20)
    t = {(r["method"], r["n_users"]): r["median_ns"] for r in rows}
    tcnn, gt = t[("tcnn", 50)] / t[("tcnn", 10)], t[("gt", 40)] / t[("gt", 10)]
    elapsed = time.perf_counter() - t0
    ok = record_criterion(9, tcnn < 2.0 and gt > 4.0 and elapsed < 300,
                          f"TCNN 50/10 ratio {tcnn:.2f}, GT 40/10 ratio {gt:.2f}, {elapsed:.1f} s")
    assert ok


def test_criterion_10_lifi_capacity_below_shannon():
    t0 = time.perf_counter()
    gamma = np.concatenate([[0.0], np.logspace(-8, 12, 10**6 - 1)])
    bandwidth = 20e6
    lifi = ch.link_capacity(LIFI, bandwidth, gamma)
    shannon = bandwidth * np.log2(1.0 + gamma)
    violations = int(np.count_nonzero(lifi > shannon))
    elapsed = time.perf_counter() - t0
    ok = record_criterion(10, violations == 0 and elapsed < 5, f"{violations} violations on {gamma.size} points, {elapsed:.2f} s")
    assert ok
