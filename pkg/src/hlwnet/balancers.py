"""Reference AP-assignment algorithms.

All public assigners take a :class:`~hlwnet.snapshot.Snapshot` and return a
binary ``n_aps x n_users`` connection matrix.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .allocation import EQUAL_SHARE, SATISFACTION_CAPPED, chi_from_labels, labels_from_chi
from .fuzzy import default_rule_table, fuzzy_infer  # noqa: F401  (re-exported)
from .scenario import WIFI
from .seeding import as_rng, splitmix64

FL_THRESHOLD = 0.5
ORACLE_MAX_USERS = 8
ORACLE_MAX_ASSIGNMENTS = 10 ** 7

_MODE_CODE = {EQUAL_SHARE: kernels.MODE_EQUAL, SATISFACTION_CAPPED: kernels.MODE_CAPPED}


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class GtConfig:
    max_iterations: int = 1000  # full sweeps
    payoff: str = "satisfaction"  # or "log_satisfaction"
    mode: str = EQUAL_SHARE

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.payoff not in ("satisfaction", "log_satisfaction"):
            raise ValueError(f"unknown payoff {self.payoff!r}")


@dataclass
class GtResult:
    chi: np.ndarray
    sweeps: int
    moves: int
    converged: bool


@lru_cache(maxsize=32)
def _table(mean_rate):
    return default_rule_table(mean_rate)


def _is_wifi(snapshot):
    return np.array([k == WIFI for k in snapshot.kinds], dtype=np.int64)


def _arrays(snapshot):
    return (np.ascontiguousarray(snapshot.capacity), np.ascontiguousarray(snapshot.requirements),
            np.ascontiguousarray(snapshot.snr_db), _is_wifi(snapshot))


def sss_labels(snr):
    values = snr.values if hasattr(snr, "values") else np.asarray(snr)
    return np.argmax(values, axis=0)  # argmax takes the lowest index on ties


def sss_assign(snr):
    """Each user takes the AP with the highest SNR."""
    values = snr.values if hasattr(snr, "values") else np.asarray(snr)
    return chi_from_labels(sss_labels(values), values.shape[0])


def _seed64(rng_seed):
    if isinstance(rng_seed, (int, np.integer)) and not isinstance(rng_seed, bool):
        return splitmix64(int(rng_seed) & ((1 << 64) - 1))
    return int(as_rng(rng_seed).integers(0, 1 << 63))


def gt_assign(snapshot, cfg=GtConfig(), rng_seed=None):
    """Best-response dynamics from the SSS assignment.

    Players move in a fresh random order each sweep; a sweep without any
    strictly improving move means a Nash point has been reached.
    """
    labels = snapshot.snr.argmax(axis=0).astype(np.int64, copy=False)
    out, sweeps, moves, converged = kernels.gt(
        labels, snapshot.capacity, snapshot.requirements, _seed64(rng_seed), cfg.max_iterations,
        cfg.payoff == "log_satisfaction", _MODE_CODE[cfg.mode])
    return GtResult(chi_from_labels(out, snapshot.n_aps), sweeps, moves, bool(converged))


def unilateral_gains(snapshot, chi, payoff="satisfaction", mode=EQUAL_SHARE):
    """Best payoff improvement each user could get by switching AP alone.

    Evaluated directly through :func:`allocation.allocate_time`, independent
    of the kernels.
    """
    from .allocation import allocate_time, satisfaction

    labels = labels_from_chi(chi)
    C, R = snapshot.capacity, snapshot.requirements

    def pay(lab, j):
        m = chi_from_labels(lab, snapshot.n_aps)
        s = satisfaction(m, allocate_time(m, C, R, mode), C, R)[j]
        if payoff == "log_satisfaction":
            return np.log(s) if s > 0 else -np.inf
        return s

    gains = np.zeros(snapshot.n_users)
    for j in range(snapshot.n_users):
        base = pay(labels, j)
        best = base
        for i in range(snapshot.n_aps):
            if i == labels[j]:
                continue
            trial = labels.copy()
            trial[j] = i
            best = max(best, pay(trial, j))
        gains[j] = best - base if np.isfinite(best - base) else (np.inf if best > base else 0.0)
    return gains


def fl_assign(snapshot, table=None, threshold=FL_THRESHOLD):
    """Two-stage fuzzy method: WiFi admission by score, then SSS among LiFi APs."""
    table = table or _table(snapshot.mean_rate)
    C, R, snr_db, is_wifi = _arrays(snapshot)
    labels = kernels.fl(C, R, snr_db, is_wifi, float(threshold), *table.encode())
    return chi_from_labels(labels, snapshot.n_aps)


def wifi_scores(snapshot, table=None):
    """Initial WiFi-selection score of every user (empty network state)."""
    table = table or _table(snapshot.mean_rate)
    snr_db = snapshot.snr_db
    w = snapshot.wifi_index
    lifi = snapshot.lifi_indices
    best = lifi[np.argmax(snr_db[lifi], axis=0)] if len(lifi) else None
    out = np.empty(snapshot.n_users)
    for j in range(snapshot.n_users):
        lifi_snr = snr_db[best[j], j] if best is not None else 10.0
        out[j] = fuzzy_infer(table, (snapshot.requirements[j], snr_db[w, j], lifi_snr, 1.0, 1.0))
    return out


def flopt_labels(snapshot, table=None):
    table = table or _table(snapshot.mean_rate)
    C, R, snr_db, is_wifi = _arrays(snapshot)
    return np.asarray(kernels.flopt(C, R, snr_db, is_wifi, *table.encode()), dtype=np.intp)


def flopt_assign(snapshot, table=None):
    """Greedy mixed fuzzy/optimisation assignment (the dataset label source).

    Each step, every unassigned user nominates the AP that would give it the
    highest satisfaction under an even time split (ties go to the lowest AP
    index, so WiFi wins when it satisfies the user); among those (user, AP) pairs the
    one with the best fuzzy score is connected.
    """
    return chi_from_labels(flopt_labels(snapshot, table), snapshot.n_aps)


def exhaustive_oracle(snapshot, mode=EQUAL_SHARE, max_users=ORACLE_MAX_USERS):
    """Exact maximiser of sum(log S) over every assignment.

    Returns ``(chi, objective)``; ties go to the first assignment in
    lexicographic order.
    """
    n_aps, n_users = snapshot.n_aps, snapshot.n_users
    if n_users > max_users or n_aps ** n_users > ORACLE_MAX_ASSIGNMENTS:
        raise InstanceTooLargeError(
            f"{n_aps}^{n_users} assignments exceeds the exhaustive-search guard")
    C, R, _, _ = _arrays(snapshot)
    labels, best = kernels.exhaustive(C, R, _MODE_CODE[mode])
    return chi_from_labels(labels, n_aps), best


def objective(snapshot, chi, mode=EQUAL_SHARE):
    labels = np.ascontiguousarray(labels_from_chi(chi), dtype=np.int64)
    C, R, _, _ = _arrays(snapshot)
    return kernels.pf_value(labels, C, R, _MODE_CODE[mode])


METHODS = ("sss", "gt", "fl", "flopt", "oracle")


def assign(method, snapshot, rng_seed=None, gt_config=GtConfig(), mode=EQUAL_SHARE):
    """Dispatch by method name; returns ``(chi, extras)``."""
    if method == "sss":
        return sss_assign(snapshot.snr), {}
    if method == "gt":
        res = gt_assign(snapshot, gt_config, rng_seed)
        return res.chi, {"iterations": res.sweeps, "converged": res.converged}
    if method == "fl":
        return fl_assign(snapshot), {}
    if method == "flopt":
        return flopt_assign(snapshot), {}
    if method == "oracle":
        chi, _ = exhaustive_oracle(snapshot, mode)
        return chi, {}
    raise ValueError(f"unknown method {method!r}")
