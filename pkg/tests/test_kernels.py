import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hlwnet import allocation as al
from hlwnet.fuzzy import default_rule_table
from hlwnet.kernels import MODE_CAPPED, MODE_EQUAL, available_backends, load_backend
from hlwnet.kernels._pykernels import sweep_orders
from oracles import brute_force_pf, hand_equal_share_objective

BACKENDS = available_backends()
PY = load_backend("python")
MODE_NAME = {MODE_EQUAL: al.EQUAL_SHARE, MODE_CAPPED: al.SATISFACTION_CAPPED}


def _instance(seed, max_aps=5, max_users=8):
    rng = np.random.default_rng(seed)
    n_aps, n = int(rng.integers(2, max_aps + 1)), int(rng.integers(1, max_users + 1))
    C = rng.uniform(1e6, 4e8, (n_aps, n))
    R = rng.uniform(1e6, 4e8, n)
    snr_db = rng.uniform(10, 70, (n_aps, n))
    is_wifi = np.zeros(n_aps, dtype=np.int64)
    is_wifi[0] = 1
    return rng, C, R, snr_db, is_wifi


def test_compiled_backend_built():
    assert "cython" in BACKENDS


def test_selection_env(monkeypatch):
    import importlib

    import hlwnet.kernels as k

    monkeypatch.setenv("HLWNET_PURE_PYTHON", "1")
    try:
        assert importlib.reload(k).BACKEND == "python"
    finally:
        monkeypatch.delenv("HLWNET_PURE_PYTHON")
        importlib.reload(k)
    with pytest.raises(ValueError):
        load_backend("fortran")


@pytest.mark.parametrize("backend", BACKENDS)
@given(seed=st.integers(0, 2**32 - 1), mode=st.sampled_from([MODE_EQUAL, MODE_CAPPED]))
def test_pf_value_matches_allocation(backend, seed, mode):
    k = load_backend(backend)
    rng, C, R, _, _ = _instance(seed)
    labels = rng.integers(0, C.shape[0], C.shape[1])
    want = al.evaluate(labels, C, R, MODE_NAME[mode]).objective
    assert k.pf_value(labels, C, R, mode) == pytest.approx(want, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1))
def test_exhaustive_matches_itertools(backend, seed):
    k = load_backend(backend)
    _, C, R, _, _ = _instance(seed, max_aps=4, max_users=5)
    labels, best = k.exhaustive(C, R, MODE_EQUAL)
    ref = brute_force_pf(C, R, lambda chi: hand_equal_share_objective(chi, C, R))
    assert best == pytest.approx(ref, rel=1e-12, abs=1e-12)
    assert hand_equal_share_objective(al.chi_from_labels(labels, C.shape[0]), C, R) == pytest.approx(ref, abs=1e-9)


def test_exhaustive_lexicographic_tie_break():
    # two identical APs: every assignment ties, so the first is all-zero labels... unless
    # splitting users is better; with one user both APs tie and AP 0 wins
    C = np.full((2, 1), 1e8)
    for backend in BACKENDS:
        labels, _ = load_backend(backend).exhaustive(C, np.array([1e9]), MODE_EQUAL)
        assert labels.tolist() == [0]


def test_sweep_orders_are_permutations():
    orders = sweep_orders(99, 7, 5)
    assert all(sorted(o) == list(range(7)) for o in orders)
    assert len({tuple(o) for o in orders}) > 1
    assert sweep_orders(99, 7, 5) == orders
    assert sweep_orders(99, 1, 2) == [[0], [0]]


def _hand_gt(labels, C, R, seed, max_sweeps, use_log, mode):
    """Best response replay driven by the published player orders."""
    labels = list(labels)
    n_aps, n = C.shape
    orders = sweep_orders(seed, n, max_sweeps)
    moves = 0
    for s, order in enumerate(orders):
        moved = False
        for j in order:
            payoffs = []
            for i in range(n_aps):
                trial = list(labels)
                trial[j] = i
                chi = al.chi_from_labels(trial, n_aps)
                sat = al.satisfaction(chi, al.allocate_time(chi, C, R, MODE_NAME[mode]), C, R)[j]
                payoffs.append((math.log(sat) if sat > 0 else -math.inf) if use_log else sat)
            best = int(np.argmax(payoffs))
            if best != labels[j] and payoffs[best] > payoffs[labels[j]] + 1e-12:
                labels[j] = best
                moves += 1
                moved = True
        if not moved:
            return labels, s + 1, moves, True
    return labels, max_sweeps, moves, False


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1), use_log=st.booleans(),
       mode=st.sampled_from([MODE_EQUAL, MODE_CAPPED]))
def test_gt_matches_replay(backend, seed, use_log, mode):
    k = load_backend(backend)
    rng, C, R, _, _ = _instance(seed, max_users=7)
    start = rng.integers(0, C.shape[0], C.shape[1])
    got = k.gt(start.copy(), C, R, seed, 50, use_log, mode)
    want = _hand_gt(start, C, R, seed, 50, use_log, mode)
    assert list(got[0]) == want[0]
    assert tuple(got[1:]) == want[1:]


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
@settings(max_examples=300)
@given(seed=st.integers(0, 2**32 - 1), mode=st.sampled_from([MODE_EQUAL, MODE_CAPPED]))
def test_backends_agree(seed, mode):
    c, p = load_backend("cython"), load_backend("python")
    rng, C, R, snr_db, is_wifi = _instance(seed, max_users=10)
    enc = default_rule_table().encode()
    x = np.array([R[0], snr_db[0, 0], snr_db[1, 0], rng.uniform(), rng.uniform()])
    assert c.fuzzy_score(x, *enc) == p.fuzzy_score(x, *enc)
    assert np.array_equal(c.flopt(C, R, snr_db, is_wifi, *enc), p.flopt(C, R, snr_db, is_wifi, *enc))
    assert np.array_equal(c.fl(C, R, snr_db, is_wifi, 0.5, *enc), p.fl(C, R, snr_db, is_wifi, 0.5, *enc))
    start = np.argmax(snr_db, axis=0).astype(np.int64)
    gc = c.gt(start.copy(), C, R, seed, 100, False, mode)
    gp = p.gt(start.copy(), C, R, seed, 100, False, mode)
    assert np.array_equal(gc[0], gp[0]) and tuple(gc[1:]) == tuple(gp[1:])
    labels = rng.integers(0, C.shape[0], C.shape[1])
    assert c.pf_value(labels, C, R, mode) == p.pf_value(labels, C, R, mode)


def test_unreachable_link_scores_minus_infinity():
    C = np.array([[0.0, 1e8], [1e8, 1e8]])
    for backend in BACKENDS:
        assert load_backend(backend).pf_value(np.array([0, 1]), C, np.array([1e6, 1e6]), MODE_EQUAL) == -math.inf
