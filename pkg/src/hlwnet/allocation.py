"""Time-share allocation for a fixed AP assignment, and network metrics.

Assignments are ``n_aps x n_users`` binary matrices ``chi``; most
algorithms work on the equivalent label vector (AP index per user), so
helpers convert between the two.
"""

from dataclasses import dataclass

import numpy as np

EQUAL_SHARE = "equal_share"
SATISFACTION_CAPPED = "satisfaction_capped"
MODES = (EQUAL_SHARE, SATISFACTION_CAPPED)

RHO_TOL = 1e-9


class UnreachableLinkError(ValueError):
    pass


class UndefinedMetricError(ValueError):
    pass


def chi_from_labels(labels, n_aps):
    labels = np.asarray(labels, dtype=np.intp)
    chi = np.zeros((n_aps, len(labels)), dtype=np.int8)
    chi[labels, np.arange(len(labels))] = 1
    return chi


def labels_from_chi(chi):
    chi = np.asarray(chi)
    if chi.ndim == 1:
        return chi.astype(np.intp)
    return np.argmax(chi, axis=0)


def check_chi(chi):
    chi = np.asarray(chi)
    if not np.all((chi == 0) | (chi == 1)):
        raise ValueError("chi must be binary")
    if not np.all(chi.sum(axis=0) == 1):
        raise ValueError("every user must be connected to exactly one AP")
    return chi


@dataclass
class Assignment:
    chi: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        check_chi(self.chi)
        if self.rho.shape != self.chi.shape:
            raise ValueError("rho and chi shapes differ")
        if np.any(self.rho < -RHO_TOL) or np.any(self.rho > 1 + RHO_TOL):
            raise ValueError("rho entries must lie in [0, 1]")
        if np.any(self.rho[self.chi == 0] != 0):
            raise ValueError("rho must vanish on unconnected pairs")
        if np.any((self.chi * self.rho).sum(axis=1) > 1 + RHO_TOL):
            raise ValueError("an AP allocates more than its unit time")

    @property
    def labels(self):
        return labels_from_chi(self.chi)


def allocate_time(chi, capacity, requirements, mode=EQUAL_SHARE):
    """Per-AP time shares for a fixed assignment.

    ``equal_share`` splits each AP's time evenly among its users.
    ``satisfaction_capped`` gives every user exactly ``R/C`` when an AP can
    satisfy all of its users (sum R/C <= 1), leaving the remainder idle,
    and falls back to the even split otherwise.
    """
    if mode not in MODES:
        raise ValueError(f"unknown allocation mode {mode!r}")
    chi = check_chi(chi).astype(bool)
    C = np.asarray(capacity, dtype=float)
    R = np.asarray(requirements, dtype=float)
    if np.any(C[chi] <= 0):
        raise UnreachableLinkError("a connected pair has zero capacity")
    counts = chi.sum(axis=1)
    rho = np.zeros(chi.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        even = np.where(counts > 0, 1.0 / counts, 0.0)
    rho[chi] = np.broadcast_to(even[:, None], chi.shape)[chi]
    if mode == SATISFACTION_CAPPED:
        need = np.zeros(chi.shape)
        need[chi] = R[np.nonzero(chi)[1]] / C[chi]
        feasible = need.sum(axis=1) <= 1.0
        rho[feasible] = need[feasible]
    return rho


def served_rates(chi, rho, capacity):
    return (np.asarray(chi) * rho * capacity).sum(axis=0)


def throughput(chi, rho, capacity):
    return float((np.asarray(chi) * rho * capacity).sum())


def served_demand(chi, rho, capacity, requirements):
    """Throughput counting each user only up to its requirement."""
    return float(np.minimum(served_rates(chi, rho, capacity), requirements).sum())


def satisfaction(chi, rho, capacity, requirements):
    return np.minimum(served_rates(chi, rho, capacity) / np.asarray(requirements, dtype=float), 1.0)


def jain(s):
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        raise UndefinedMetricError("Jain's index needs at least one user")
    sq = float(np.dot(s, s))
    if sq == 0.0:
        raise UndefinedMetricError("Jain's index is undefined for all-zero satisfaction")
    return float(s.sum() ** 2 / (s.size * sq))


def pf_objective(s):
    """Proportional-fairness objective sum(log S_j); -inf if a user gets nothing."""
    with np.errstate(divide="ignore"):
        return float(np.log(np.asarray(s, dtype=float)).sum())


@dataclass
class MetricsReport:
    throughput: float
    satisfaction: np.ndarray
    jain: float
    objective: float
    served_demand: float

    def row(self):
        return {"throughput": self.throughput, "served_demand": self.served_demand,
                "jain": self.jain, "objective": self.objective,
                "mean_satisfaction": float(np.mean(self.satisfaction))}


def evaluate(chi, capacity, requirements, mode=EQUAL_SHARE):
    chi = np.asarray(chi)
    if chi.ndim == 1:
        chi = chi_from_labels(chi, np.shape(capacity)[0])
    rho = allocate_time(chi, capacity, requirements, mode)
    s = satisfaction(chi, rho, capacity, requirements)
    try:
        fair = jain(s)
    except UndefinedMetricError:
        fair = float("nan")
    return MetricsReport(throughput(chi, rho, capacity), s, fair, pf_objective(s),
                         served_demand(chi, rho, capacity, requirements))


def performance_gap(predicted_chi, label_chi, capacity, requirements, mode=EQUAL_SHARE):
    n_aps = np.shape(capacity)[0]
    pred = np.asarray(predicted_chi)
    lab = np.asarray(label_chi)
    if pred.ndim == 1:
        pred = chi_from_labels(pred, n_aps)
    if lab.ndim == 1:
        lab = chi_from_labels(lab, n_aps)
    g_lab = throughput(lab, allocate_time(lab, capacity, requirements, mode), capacity)
    if g_lab == 0.0:
        raise UndefinedMetricError("label throughput is zero")
    g_pred = throughput(pred, allocate_time(pred, capacity, requirements, mode), capacity)
    return abs(g_pred - g_lab) / g_lab


def accuracy(predicted, label):
    p = labels_from_chi(predicted)
    q = labels_from_chi(label)
    if p.shape != q.shape:
        raise ValueError("assignments cover different user sets")
    return float(np.mean(p == q))
